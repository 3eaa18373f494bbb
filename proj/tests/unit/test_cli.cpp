#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "snapkit/cli/commands.hpp"
#include "snapkit/cli/svg.hpp"
#include "snapkit/errors.hpp"
#include "support.hpp"

using testsupport::fixture;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "snapkit");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = snapkit::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path tmp(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("check subcommand") {
    auto ok = run({"check", fixture("ex1_bars_gl.json")});
    CHECK(ok.code == 0);
    CHECK(nlohmann::json::parse(ok.out)["valid"] == true);
    auto missing = run({"check", fixture("ex1_missing_edge.json")});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("count condition failed") != std::string::npos);
    auto shaky = run({"check", fixture("collinear_triangle.json")});
    CHECK(shaky.code == 1);
    CHECK(shaky.err.find("realization is shaky") != std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"energy", "/nonexistent.json"}).code == 1);
    CHECK(run({"snap", fixture("ex1_missing_edge.json"), "--solver", "newton"}).code == 1);
    CHECK(run({"snap", fixture("collinear_triangle.json"), "--solver", "newton"}).code == 2);
    CHECK(run({"critical", fixture("ex1_bars_ce.json"), "--solver", "homotopy"}).code == 2);
    CHECK(run({"energy", fixture("ex1_plate_gl.json"), "--model", "ce"}).code == 1);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("energy subcommand") {
    auto r = run({"energy", fixture("ex1_plate_gl.json")});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["elements"].size() == 4);
    CHECK(j["strain_model"] == "gl");
    CHECK(j["energy"].get<double>() > 0.0);
    auto ce = run({"energy", fixture("ex1_bars_gl.json"), "--model", "ce"});
    CHECK(nlohmann::json::parse(ce.out)["strain_model"] == "ce");
}

TEST_CASE("snap output is deterministic across runs and thread counts") {
    const std::vector<std::string> base{"snap", fixture("ex1_bars_gl.json"), "--solver", "newton",
                                        "--starts", "3000"};
    auto a = run(base);
    auto b = run(base);
    auto args = base;
    args.insert(args.end(), {"--threads", "3"});
    auto c = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["infinite"] == false);
    CHECK(j["value"].get<double>() == doctest::Approx(1.8281e-6).epsilon(1e-3));
}

TEST_CASE("seed comes from the environment when not given") {
    const std::vector<std::string> args{"critical", fixture("two_bar.json"), "--solver", "newton",
                                        "--starts", "50"};
    setenv("SNAPKIT_SEED", "77", 1);
    auto env = run(args);
    unsetenv("SNAPKIT_SEED");
    auto flag = args;
    flag.insert(flag.end(), {"--seed", "77"});
    auto explicit_seed = run(flag);
    CHECK(env.code == 0);
    CHECK(env.out == explicit_seed.out);
    setenv("SNAPKIT_SEED", "abc", 1);
    CHECK(run(args).code == 1);
    unsetenv("SNAPKIT_SEED");
}

TEST_CASE("singdist, track and plot") {
    const auto report = tmp("snapkit_cli_report.json");
    REQUIRE(run({"snap", fixture("two_bar.json"), "--solver", "newton", "--starts", "200", "--out",
                 report.string()})
                .code == 0);
    auto con = run({"singdist", fixture("two_bar.json"), "--method", "constrained", "--solver",
                    "newton", "--starts", "200"});
    REQUIRE(con.code == 0);
    CHECK(nlohmann::json::parse(con.out)["value"].get<double>() == doctest::Approx(1.0 / 32.0));

    const auto csv = tmp("snapkit_cli_path.csv");
    auto tr = run({"track", fixture("two_bar.json"), "--target", report.string(), "--csv", csv.string()});
    REQUIRE(tr.code == 0);
    const auto tj = nlohmann::json::parse(tr.out);
    CHECK(tj["endpoint_matches_target"] == true);
    CHECK(tj["monotonicity"]["monotone"] == true);
    CHECK(std::filesystem::exists(csv));

    const auto svg1 = tmp("snapkit_a.svg");
    const auto svg2 = tmp("snapkit_b.svg");
    const std::vector<std::string> plot{"plot", fixture("two_bar.json"), "--overlay", report.string()};
    auto p1 = plot, p2 = plot;
    p1.insert(p1.end(), {"--svg", svg1.string()});
    p2.insert(p2.end(), {"--svg", svg2.string()});
    REQUIRE(run(p1).code == 0);
    REQUIRE(run(p2).code == 0);
    CHECK(slurp(svg1) == slurp(svg2));
    CHECK(slurp(svg1).find("<svg") != std::string::npos);
    auto bare = run({"plot", fixture("two_bar.json")});
    CHECK(bare.code == 0);
    CHECK(bare.out.find("layer-0") != std::string::npos);
    CHECK(bare.out.find("layer-1") == std::string::npos);
    for (const auto& f : {report, csv, svg1, svg2}) std::filesystem::remove(f);
}

TEST_CASE("svg rendering") {
    const auto ff = testsupport::load("ex1_plate_gl.json");
    const std::string svg = snapkit::cli::render_svg(ff.framework, {{"green", "#00aa00", ff.configuration}});
    CHECK(svg.find("polygon") != std::string::npos);
    CHECK(svg.find("k6") != std::string::npos);
    CHECK_THROWS_AS(snapkit::cli::render_svg(ff.framework, {}), snapkit::ValidationError);
}

TEST_CASE("compare subcommand") {
    const auto out = tmp("snapkit_cmp.json");
    auto r = run({"compare", fixture("ex1_bars_ce.json"), fixture("two_bar.json"), "--solver",
                  "newton", "--starts", "500", "--out", out.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("ex1_bars_ce") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["variants"].size() == 2);
    std::filesystem::remove(out);
}
