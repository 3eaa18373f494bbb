#include "snapkit/cli/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "snapkit/analysis.hpp"
#include "snapkit/cli/svg.hpp"
#include "snapkit/errors.hpp"
#include "snapkit/io.hpp"
#include "snapkit/rigidity.hpp"
#include "snapkit/strain.hpp"

namespace snapkit::cli {

namespace {

using nlohmann::json;

struct Flags {
    std::string input;
    std::string out;
    std::string model;
    std::string solver = "auto";
    std::string method = "thm3";
    std::string target;
    std::string svg;
    std::string csv;
    std::vector<std::string> overlays;
    std::vector<std::string> files;
    std::optional<std::uint64_t> seed;
    int starts = 20000;
    int threads = 1;
    double rank_tol = 1e-9;
    double dedup_tol = 1e-8;
    double endpoint_tol = 0.0;
    double real_tol = 1e-8;
    double box_scale = 1.0;
    bool no_degenerate = false;
};

std::uint64_t resolve_seed(const Flags& f) {
    if (f.seed) return *f.seed;
    if (const char* env = std::getenv("SNAPKIT_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ValidationError(std::string("SNAPKIT_SEED is not an integer: ") + env);
        }
    }
    return 1;
}

FrameworkFile load_input(const Flags& f) {
    FrameworkFile ff = load_framework(f.input);
    if (!f.model.empty()) {
        ff.framework = ff.framework.with_strain_model(strain_model_from_string(f.model));
    }
    return ff;
}

SolverOptions solver_options(const Flags& f) {
    if (f.starts < 1) throw ValidationError("--starts must be at least 1");
    for (double tol : {f.rank_tol, f.dedup_tol, f.real_tol})
        if (!(tol > 0.0)) throw ValidationError("tolerances must be positive");
    SolverOptions o;
    o.solver = solver_kind_from_string(f.solver);
    const std::uint64_t seed = resolve_seed(f);
    o.newton.seed = seed;
    o.newton.starts = f.starts;
    o.newton.threads = f.threads;
    o.newton.dedup_tol = f.dedup_tol;
    o.newton.box_scale = f.box_scale;
    o.homotopy.tracking.seed = seed;
    o.homotopy.tracking.threads = f.threads;
    o.homotopy.real_tol = f.real_tol;
    o.homotopy.dedup_tol = f.dedup_tol;
    o.quotient.dedup_tol = f.dedup_tol;
    o.quotient.include_degenerate = !f.no_degenerate;
    o.rank_tol = f.rank_tol;
    o.endpoint_tol = f.endpoint_tol;
    return o;
}

void emit(const json& doc, const Flags& f, std::ostream& out) {
    const std::string text = doc.dump(2) + "\n";
    if (f.out.empty()) {
        out << text;
        return;
    }
    std::ofstream file(f.out);
    if (!file) throw ValidationError("cannot write " + f.out);
    file << text;
}

Configuration configuration_from_file(const std::string& path, const Framework& fw) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("parse error in " + path + ": " + e.what());
    }
    json rows;
    if (doc.is_array()) {
        rows = doc;
    } else if (doc.is_object() && doc.contains("configuration")) {
        rows = doc["configuration"];
    } else if (doc.is_object() && doc.contains("witness") && !doc["witness"].is_null()) {
        rows = doc["witness"];
    } else if (doc.is_object() && doc.contains("knots")) {
        return parse_framework(doc).configuration;
    } else {
        throw ValidationError(path + ": no configuration found");
    }
    Configuration cfg = configuration_from_json(rows, fw.dimension());
    validate_configuration(fw, cfg);
    return cfg;
}

json critical_point_json(const CriticalPoint& p) {
    return json{{"classification", to_string(p.classification)},
                {"energy", p.energy},
                {"density", p.density_value},
                {"inertia", {p.inertia.positive, p.inertia.zero, p.inertia.negative}},
                {"gradient_residual", p.gradient_residual},
                {"configuration", configuration_to_json(p.cfg)}};
}

int cmd_check(const Flags& f, std::ostream& out, std::ostream& err) {
    const FrameworkFile ff = load_input(f);
    const Framework& fw = ff.framework;
    const IsostaticReport iso = validate_isostatic(fw, ff.configuration, f.rank_tol);
    const ShakinessReport sh = is_shaky(fw, ff.configuration, f.rank_tol);
    json violations = json::array();
    if (!iso.count_ok) violations.push_back(iso.reasons.front());
    if (iso.count_ok && sh.shaky)
        violations.push_back("realization is shaky (rigidity rank " + std::to_string(sh.rank) +
                             " < " + std::to_string(sh.expected_rank) + ")");
    json doc{{"valid", violations.empty()},
             {"count_condition", iso.count_ok},
             {"edges", iso.edges},
             {"required_edges", iso.required_edges},
             {"rank", sh.rank},
             {"expected_rank", sh.expected_rank},
             {"shaky", sh.shaky},
             {"sigma_min", sh.sigma_min},
             {"sigma_max", sh.sigma_max},
             {"violations", violations}};
    emit(doc, f, out);
    for (const auto& v : violations) err << "error: " << v.get<std::string>() << "\n";
    return violations.empty() ? 0 : 1;
}

int cmd_energy(const Flags& f, std::ostream& out) {
    const FrameworkFile ff = load_input(f);
    const Framework& fw = ff.framework;
    const EdgeLengthVector lengths = edge_lengths(fw, ff.configuration);
    json elements = json::array();
    for (const auto& el : element_energies(fw, lengths))
        elements.push_back({{"kind", el.kind == ElementEnergy::Kind::Bar ? "bar" : "plate"},
                            {"index", el.index + 1},
                            {"energy", el.energy}});
    const EdgeLengthVector rest = fw.rest_lengths();
    json doc{{"strain_model", to_string(fw.strain_model())},
             {"energy", total_energy(fw, ff.configuration)},
             {"density", density(fw, ff.configuration)},
             {"total_length", fw.total_length()},
             {"edge_lengths", std::vector<double>(lengths.data(), lengths.data() + lengths.size())},
             {"max_relative_residual", ((lengths - rest).array() / rest.array()).abs().maxCoeff()},
             {"elements", elements}};
    emit(doc, f, out);
    return 0;
}

int cmd_critical(const Flags& f, std::ostream& out) {
    const FrameworkFile ff = load_input(f);
    const SolverOptions o = solver_options(f);
    const CandidateSet set = find_candidates(ff.framework, ff.configuration, o);
    json points = json::array();
    for (const auto& p : set.points) points.push_back(critical_point_json(p));
    json quotient = json::array();
    for (const auto& p : set.quotient.representatives) quotient.push_back(critical_point_json(p));
    json doc{{"diagnostics", candidates_to_json(set)},
             {"points", points},
             {"quotient", quotient},
             {"dedup_tolerance", set.quotient.dedup_tolerance}};
    emit(doc, f, out);
    return 0;
}

int cmd_snap(const Flags& f, std::ostream& out) {
    const FrameworkFile ff = load_input(f);
    const AnalysisReport rep = snappability(ff.framework, ff.configuration, solver_options(f));
    emit(report_to_json(rep), f, out);
    return 0;
}

int cmd_singdist(const Flags& f, std::ostream& out) {
    const FrameworkFile ff = load_input(f);
    const AnalysisReport rep = singularity_distance(
        ff.framework, ff.configuration, analysis_method_from_string(f.method), solver_options(f));
    emit(report_to_json(rep), f, out);
    return 0;
}

int cmd_track(const Flags& f, std::ostream& out) {
    const FrameworkFile ff = load_input(f);
    const Framework& fw = ff.framework;
    const SolverOptions o = solver_options(f);
    const PreparedConfiguration prep = prepare_configuration(fw, ff.configuration, o);
    const Configuration target = configuration_from_file(f.target, fw);
    const LengthPath path{fw.rest_lengths(), edge_lengths(fw, target)};
    const PathCertificate cert = track_deformation(fw, prep.cfg, path, o.track);
    if (!f.csv.empty()) write_path_csv(f.csv, fw, cert);
    json doc{{"path_certificate", certificate_to_json(cert)},
             {"endpoint_matches_target", check_endpoint(fw, cert, target, f.endpoint_tol)},
             {"target_density", density(fw, target)},
             {"polished", prep.polished}};
    if (fw.strain_model() == StrainModel::GL) {
        const MonotonicityReport mono = verify_monotonicity(fw, path);
        json elements = json::array();
        for (const auto& e : mono.elements)
            elements.push_back({{"kind", e.bar ? "bar" : "plate"},
                                {"monotone", e.monotone},
                                {"vertex", std::isfinite(e.vertex) ? json(e.vertex) : json(nullptr)}});
        doc["monotonicity"] = {{"monotone", mono.monotone},
                               {"max_fit_error", mono.max_fit_error},
                               {"elements", elements}};
    }
    emit(doc, f, out);
    return cert.success ? 0 : 3;
}

int cmd_plot(const Flags& f, std::ostream& out) {
    const FrameworkFile ff = load_input(f);
    std::vector<SvgLayer> layers;
    for (const auto& path : f.overlays)
        layers.push_back({std::filesystem::path(path).stem().string(), "",
                          configuration_from_file(path, ff.framework)});
    if (layers.empty()) layers.push_back({"configuration", "#000000", ff.configuration});
    const std::string svg = render_svg(ff.framework, layers);
    const std::string dest = !f.svg.empty() ? f.svg : f.out;
    if (dest.empty()) {
        out << svg;
    } else {
        std::ofstream file(dest);
        if (!file) throw ValidationError("cannot write " + dest);
        file << svg;
    }
    return 0;
}

int cmd_compare(const Flags& f, std::ostream& out) {
    std::vector<std::filesystem::path> files(f.files.begin(), f.files.end());
    const VariantTable table = compare_variants(files, solver_options(f));
    out << table.to_text();
    if (!f.out.empty()) {
        std::ofstream file(f.out);
        if (!file) throw ValidationError("cannot write " + f.out);
        file << table.to_json().dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Snappability and singularity-distance of bar/plate frameworks", "snapkit"};
    app.require_subcommand(1);
    Flags f;

    auto add_input = [&](CLI::App* sub) {
        sub->add_option("input", f.input, "framework JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", f.out, "write the report to this file instead of stdout");
        sub->add_option("--model", f.model, "override the strain model")
            ->check(CLI::IsMember({"gl", "ce"}));
        sub->add_option("--rank-tol", f.rank_tol, "relative singular-value threshold");
    };
    auto add_solver = [&](CLI::App* sub) {
        sub->add_option("--solver", f.solver, "critical-point solver")
            ->check(CLI::IsMember({"auto", "newton", "homotopy"}));
        sub->add_option("--starts", f.starts, "Newton multistart count");
        sub->add_option("--box-scale", f.box_scale, "Newton sampling half-width / diameter");
        sub->add_option("--seed", f.seed, "random seed (default: SNAPKIT_SEED or 1)");
        sub->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--dedup-tol", f.dedup_tol, "deduplication tolerance / diameter");
        sub->add_option("--real-tol", f.real_tol, "imaginary-part tolerance for real roots");
        sub->add_option("--endpoint-tol", f.endpoint_tol, "path endpoint match tolerance");
        sub->add_flag("--no-degenerate", f.no_degenerate, "drop degenerate critical points");
    };

    CLI::App* check = app.add_subcommand("check", "validate model, isostaticity and shakiness");
    add_input(check);
    CLI::App* energy = app.add_subcommand("energy", "strain energy of the configuration");
    add_input(energy);
    CLI::App* critical = app.add_subcommand("critical", "real critical points of the energy");
    add_input(critical);
    add_solver(critical);
    CLI::App* snap = app.add_subcommand("snap", "snappability of the configuration");
    add_input(snap);
    add_solver(snap);
    CLI::App* singdist = app.add_subcommand("singdist", "singularity-distance of the configuration");
    add_input(singdist);
    add_solver(singdist);
    singdist->add_option("--method", f.method, "thm3 or constrained")
        ->check(CLI::IsMember({"thm3", "constrained"}));
    CLI::App* track = app.add_subcommand("track", "deformation path toward a target realization");
    add_input(track);
    add_solver(track);
    track->add_option("--target", f.target, "file with the target configuration")
        ->required()
        ->check(CLI::ExistingFile);
    track->add_option("--csv", f.csv, "write path samples as CSV");
    CLI::App* plot = app.add_subcommand("plot", "SVG drawing of realizations");
    add_input(plot);
    plot->add_option("--overlay", f.overlays, "configuration files to overlay")
        ->check(CLI::ExistingFile);
    plot->add_option("--svg", f.svg, "SVG output file");
    CLI::App* compare = app.add_subcommand("compare", "table over several framework variants");
    compare->add_option("files", f.files, "framework JSON files")->required()->check(CLI::ExistingFile);
    compare->add_option("--out", f.out, "write the JSON table to this file");
    add_solver(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "check") return cmd_check(f, out, err);
        if (name == "energy") return cmd_energy(f, out);
        if (name == "critical") return cmd_critical(f, out);
        if (name == "snap") return cmd_snap(f, out);
        if (name == "singdist") return cmd_singdist(f, out);
        if (name == "track") return cmd_track(f, out);
        if (name == "plot") return cmd_plot(f, out);
        if (name == "compare") return cmd_compare(f, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}

}  // namespace snapkit::cli
