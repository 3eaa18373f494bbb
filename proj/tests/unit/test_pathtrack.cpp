#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "snapkit/critical.hpp"
#include "snapkit/errors.hpp"
#include "snapkit/pathtrack.hpp"
#include "snapkit/strain.hpp"
#include "support.hpp"

using namespace snapkit;
using testsupport::load;

namespace {

struct Setup {
    FrameworkFile ff;
    Configuration start;
    Configuration target;
};

Setup to_lowest_saddle(const std::string& name) {
    Setup s{load(name), {}, {}};
    s.start = polish_to_lengths(s.ff.framework, s.ff.configuration, s.ff.framework.rest_lengths()).cfg;
    NewtonOptions o;
    o.starts = 3000;
    const auto res = solve_critical_newton(s.ff.framework, s.ff.configuration, o);
    const auto q = build_quotient_set(res.points, s.ff.framework);
    REQUIRE_FALSE(q.representatives.empty());
    s.target = q.representatives.front().cfg;
    return s;
}

LengthPath path_of(const Setup& s) {
    return {s.ff.framework.rest_lengths(), edge_lengths(s.ff.framework, s.target)};
}

bool energies_nondecreasing(const Framework& fw, const PathCertificate& cert) {
    std::vector<double> last;
    for (const auto& sample : cert.samples) {
        const auto e = element_energies(fw, edge_lengths(fw, sample.cfg));
        for (std::size_t k = 0; k < e.size(); ++k) {
            if (!last.empty() && e[k].energy < last[k] - 1e-15) return false;
            if (last.size() < e.size()) last.resize(e.size());
            last[k] = e[k].energy;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("length interpolation") {
    const LengthPath p{Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(3.0, 2.0)};
    CHECK(interpolate_lengths(p, 0.0) == p.start);
    CHECK(interpolate_lengths(p, 1.0)(0) == doctest::Approx(3.0));
    CHECK(interpolate_lengths(p, 0.5)(0) == doctest::Approx(std::sqrt(5.0)));
    CHECK(p.squared_at(0.25)(0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(interpolate_lengths(p, 1.5), ValidationError);
    CHECK_THROWS_AS(interpolate_lengths(p, -0.1), ValidationError);
    const LengthPath bad{Eigen::Vector2d(1.0, 2.0), Eigen::Vector3d(1.0, 2.0, 3.0)};
    CHECK_THROWS_AS(interpolate_lengths(bad, 0.5), ValidationError);
}

TEST_CASE("constant path is vacuously monotone") {
    const auto ff = load("ex1_bars_gl.json");
    const LengthPath p{ff.framework.rest_lengths(), ff.framework.rest_lengths()};
    const auto rep = verify_monotonicity(ff.framework, p);
    CHECK(rep.monotone);
    for (const auto& e : rep.elements) {
        CHECK(e.a == 0.0);
        CHECK(e.b == 0.0);
        CHECK(e.c == 0.0);
    }
}

TEST_CASE("rest to lowest saddle on the six-bar fixture") {
    const Setup s = to_lowest_saddle("ex1_bars_gl.json");
    const LengthPath path = path_of(s);
    const auto cert = track_deformation(s.ff.framework, s.start, path);
    REQUIRE(cert.success);
    CHECK(cert.max_residual < 1e-9);
    CHECK(cert.extrapolation_delta < 1e-8);
    CHECK(cert.min_pure_condition_magnitude_before_end > 0.0);
    CHECK(check_endpoint(s.ff.framework, cert, s.target));
    CHECK(energies_nondecreasing(s.ff.framework, cert));
    for (const auto& sample : cert.samples) CHECK(sample.cfg.allFinite());
    // independent monotonicity check at t = 0, 0.25, ..., 1
    std::vector<double> last(6, -1.0);
    for (int k = 0; k <= 4; ++k) {
        const EdgeLengthVector l = path.at(k / 4.0);
        for (int e = 0; e < 6; ++e) {
            const double u = testsupport::oracle_bar_gl(s.ff.framework.edges()[e].rest_length, l(e), 1.0);
            CHECK(u >= last[e]);
            last[e] = u;
        }
    }
    const auto rep = verify_monotonicity(s.ff.framework, path);
    CHECK(rep.monotone);
    CHECK(rep.max_fit_error < 1e-10);
    CHECK(rep.total.monotone);
    CHECK(rep.total.vertex <= 1e-12);
}

TEST_CASE("plate variant to its lowest saddle") {
    const Setup s = to_lowest_saddle("ex1_plate_gl.json");
    const LengthPath path = path_of(s);
    const auto cert = track_deformation(s.ff.framework, s.start, path);
    REQUIRE(cert.success);
    CHECK(check_endpoint(s.ff.framework, cert, s.target));
    const auto rep = verify_monotonicity(s.ff.framework, path);
    CHECK(rep.monotone);
    CHECK(rep.elements.size() == 4);
    CHECK(energies_nondecreasing(s.ff.framework, cert));
}

TEST_CASE("reversal returns to the start") {
    const Setup s = to_lowest_saddle("ex1_bars_gl.json");
    const LengthPath path = path_of(s);
    const auto cert = track_deformation(s.ff.framework, s.start, path);
    REQUIRE(cert.success);
    REQUIRE(cert.samples.size() >= 2);
    // last sample before the endpoint lies just off the singularity on the incoming branch
    const PathSample& near = cert.samples[cert.samples.size() - 2];
    REQUIRE(near.t < 1.0);
    const LengthPath back{path.at(near.t), path.start};
    const auto rev = track_deformation(s.ff.framework, near.cfg, back);
    REQUIRE(rev.success);
    CHECK(testsupport::canonical_gap(s.ff.framework, rev.endpoint, s.start) < 1e-5);
}

TEST_CASE("start must realize the start lengths") {
    const auto ff = load("ex1_bars_gl.json");
    const LengthPath p{ff.framework.rest_lengths(), ff.framework.rest_lengths()};
    CHECK_THROWS_AS(track_deformation(ff.framework, ff.configuration, p), PreconditionError);
}

TEST_CASE("unrealizable target fails without a complex answer") {
    const auto ff = load("two_bar.json");
    const LengthPath p{ff.framework.rest_lengths(), Eigen::Vector2d(0.6, 0.6)};
    const auto cert = track_deformation(ff.framework, ff.configuration, p);
    CHECK_FALSE(cert.success);
    CHECK_FALSE(cert.failure.empty());
    for (const auto& sample : cert.samples) CHECK(sample.cfg.allFinite());
}

TEST_CASE("path CSV") {
    const Setup s = to_lowest_saddle("ex1_bars_gl.json");
    const auto cert = track_deformation(s.ff.framework, s.start, path_of(s));
    const auto file = std::filesystem::temp_directory_path() / "snapkit_path.csv";
    write_path_csv(file, s.ff.framework, cert);
    std::ifstream in(file);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("t,", 0) == 0);
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == static_cast<int>(cert.samples.size()));
    std::filesystem::remove(file);
}
