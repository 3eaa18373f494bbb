#include "snapkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "snapkit/errors.hpp"
#include "snapkit/io.hpp"
#include "snapkit/parallel.hpp"
#include "snapkit/rigidity.hpp"
#include "snapkit/strain.hpp"

namespace snapkit {

std::string to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::Auto: return "auto";
        case SolverKind::Newton: return "newton";
        case SolverKind::Homotopy: return "homotopy";
    }
    return "auto";
}

SolverKind solver_kind_from_string(const std::string& name) {
    if (name == "auto") return SolverKind::Auto;
    if (name == "newton") return SolverKind::Newton;
    if (name == "homotopy") return SolverKind::Homotopy;
    throw ValidationError("unknown solver '" + name + "' (expected newton or homotopy)");
}

std::string to_string(AnalysisMethod method) {
    switch (method) {
        case AnalysisMethod::Snappability: return "snappability";
        case AnalysisMethod::Thm3: return "thm3";
        case AnalysisMethod::Constrained: return "constrained";
    }
    return "snappability";
}

AnalysisMethod analysis_method_from_string(const std::string& name) {
    if (name == "snappability") return AnalysisMethod::Snappability;
    if (name == "thm3") return AnalysisMethod::Thm3;
    if (name == "constrained") return AnalysisMethod::Constrained;
    throw ValidationError("unknown method '" + name + "' (expected thm3 or constrained)");
}

PreparedConfiguration prepare_configuration(const Framework& fw, const Configuration& cfg,
                                            const SolverOptions& opts) {
    validate_configuration(fw, cfg);
    const IsostaticReport iso = validate_isostatic(fw, cfg, opts.rank_tol);
    if (!iso.count_ok) throw ValidationError(iso.reasons.front());

    PreparedConfiguration out;
    const EdgeLengthVector rest = fw.rest_lengths();
    const EdgeLengthVector lengths = edge_lengths(fw, cfg);
    out.initial_residual = ((lengths - rest).array() / rest.array()).abs().maxCoeff();
    if (out.initial_residual > opts.max_deformation) {
        std::ostringstream msg;
        msg << "configuration is deformed (max relative edge residual " << out.initial_residual
            << ")";
        throw PreconditionError(msg.str());
    }
    out.cfg = cfg;
    const double tol = 1e-9 * fw.total_length();
    if ((lengths - rest).cwiseAbs().maxCoeff() >= tol) {
        const PolishResult pol = polish_to_lengths(fw, cfg, rest);
        out.cfg = pol.cfg;
        out.polished = true;
    }
    out.final_residual = ((edge_lengths(fw, out.cfg) - rest).array() / rest.array()).abs().maxCoeff();
    if ((edge_lengths(fw, out.cfg) - rest).cwiseAbs().maxCoeff() >= tol)
        throw PreconditionError("configuration could not be projected onto the rest lengths");
    const ShakinessReport shaky = is_shaky(fw, out.cfg, opts.rank_tol);
    if (shaky.shaky)
        throw PreconditionError("realization is shaky (rigidity rank " + std::to_string(shaky.rank) +
                                " < " + std::to_string(shaky.expected_rank) + ")");
    return out;
}

CandidateSet find_candidates(const Framework& fw, const Configuration& cfg,
                             const SolverOptions& opts) {
    CandidateSet set;
    set.solver = opts.solver;
    if (set.solver == SolverKind::Auto)
        set.solver = fw.strain_model() == StrainModel::GL ? SolverKind::Homotopy : SolverKind::Newton;
    if (set.solver == SolverKind::Homotopy) {
        CriticalHomotopyResult res = solve_critical_homotopy(fw, opts.homotopy);
        set.points = std::move(res.points);
        set.homotopy_stats = res.stats;
    } else {
        NewtonResult res = solve_critical_newton(fw, cfg, opts.newton);
        set.points = std::move(res.points);
        set.newton_stats = res.stats;
    }
    set.quotient = build_quotient_set(set.points, fw, opts.quotient);
    return set;
}

namespace {

// Fills value, witness and certificate from a successful candidate.
void accept(AnalysisReport& rep, const Framework& fw, const Configuration& witness,
            const PathCertificate& cert, const std::string& classification, double rank_tol) {
    rep.infinite = false;
    rep.witness = witness;
    rep.value = density(fw, witness);
    rep.witness_is_shaky = is_shaky(fw, witness, rank_tol).shaky;
    rep.witness_classification = classification;
    rep.certificate = cert;
}

bool certify(const Framework& fw, const Configuration& start, const Configuration& target,
             const SolverOptions& opts, PathCertificate& cert) {
    const LengthPath path{fw.rest_lengths(), edge_lengths(fw, target)};
    cert = track_deformation(fw, start, path, opts.track);
    return check_endpoint(fw, cert, target, opts.endpoint_tol);
}

}  // namespace

AnalysisReport snappability(const Framework& fw, const Configuration& cfg,
                            const CandidateSet& candidates, const SolverOptions& opts) {
    AnalysisReport rep;
    rep.method = AnalysisMethod::Snappability;
    rep.input = prepare_configuration(fw, cfg, opts);
    rep.candidates = candidates;
    rep.candidates_total = static_cast<int>(candidates.quotient.representatives.size());
    for (const CriticalPoint& cand : candidates.quotient.representatives) {
        ++rep.candidates_examined;
        PathCertificate cert;
        if (certify(fw, rep.input.cfg, cand.cfg, opts, cert)) {
            accept(rep, fw, cand.cfg, cert, to_string(cand.classification), opts.rank_tol);
            return rep;
        }
        if (rep.candidates_examined == 1 || cert.samples.size() > rep.certificate.samples.size())
            rep.certificate = cert;
    }
    rep.infinite = true;
    rep.low_confidence = candidates.solver == SolverKind::Newton;
    return rep;
}

AnalysisReport snappability(const Framework& fw, const Configuration& cfg,
                            const SolverOptions& opts) {
    const PreparedConfiguration prep = prepare_configuration(fw, cfg, opts);
    const CandidateSet set = find_candidates(fw, prep.cfg, opts);
    return snappability(fw, cfg, set, opts);
}

namespace {

struct KktPoint {
    Configuration cfg;
    double density = 0.0;
    bool random_seed = false;
};

// Lagrange-Newton on grad U + mu grad P = 0, P = 0 with the energy Hessian
// standing in for the Lagrangian Hessian (mu vanishes at the solutions).
std::optional<Eigen::VectorXd> kkt_solve(const EnergyModel& model, const Framework& fw,
                                         Eigen::VectorXd x, double diam) {
    const Gauge& gauge = model.gauge();
    const int nf = gauge.num_free();
    const double gtol = 10.0 * gradient_tolerance(fw);
    auto residual = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g, Eigen::VectorXd& p,
                        double& pc) {
        const Configuration c = gauge.assemble(v);
        g = model.gradient(c);
        p = pure_condition_gradient(fw, c);
        pc = pure_condition(fw, c);
        const double pp = p.squaredNorm();
        const double mu = pp > 0.0 ? -p.dot(g) / pp : 0.0;
        const double pn = std::sqrt(pp);
        return std::hypot((g + mu * p).norm() / gtol, pn > 0.0 ? pc / (pn * 1e-12 * diam) : pc);
    };
    Eigen::VectorXd g, p;
    double pc = 0.0;
    double res = residual(x, g, p, pc);
    for (int it = 0; it < 200; ++it) {
        if (!std::isfinite(res)) return std::nullopt;
        if (res <= 1.0) return x;
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(nf + 1, nf + 1);
        k.topLeftCorner(nf, nf) = model.hessian(gauge.assemble(x));
        k.block(0, nf, nf, 1) = p;
        k.block(nf, 0, 1, nf) = p.transpose();
        Eigen::VectorXd rhs(nf + 1);
        rhs.head(nf) = -g;
        rhs(nf) = -pc;
        Eigen::VectorXd sol = k.fullPivLu().solve(rhs);
        if (!sol.allFinite()) return std::nullopt;
        Eigen::VectorXd dx = sol.head(nf);
        const double len = dx.norm();
        if (len > 0.1 * diam) dx *= 0.1 * diam / len;
        double alpha = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 30; ++bt) {
            Eigen::VectorXd g2, p2;
            double pc2 = 0.0;
            const Eigen::VectorXd trial = x + alpha * dx;
            const double r2 = residual(trial, g2, p2, pc2);
            if (std::isfinite(r2) && r2 < res) {
                x = trial;
                g = g2;
                p = p2;
                pc = pc2;
                res = r2;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved) return std::nullopt;
    }
    return std::nullopt;
}

AnalysisReport constrained_distance(const Framework& fw, const Configuration& cfg,
                                    const SolverOptions& opts) {
    AnalysisReport rep;
    rep.method = AnalysisMethod::Constrained;
    rep.input = prepare_configuration(fw, cfg, opts);
    const EnergyModel model(fw);
    const Gauge& gauge = model.gauge();
    const Configuration base = gauge.canonicalize(rep.input.cfg);
    const Eigen::VectorXd center = gauge.free_values(base);
    const double diam = diameter(base);

    // Seeds: random perturbations of the input, then the saddle set.
    std::vector<Eigen::VectorXd> seeds;
    std::mt19937_64 rng(opts.newton.seed ^ 0x5eedULL);
    std::uniform_real_distribution<double> u(-opts.constrained_spread * diam,
                                             opts.constrained_spread * diam);
    for (int k = 0; k < opts.constrained_starts; ++k) {
        Eigen::VectorXd x = center;
        for (Eigen::Index m = 0; m < x.size(); ++m) x(m) += u(rng);
        seeds.push_back(x);
    }
    const int random_count = static_cast<int>(seeds.size());
    SolverOptions newton_opts = opts;
    newton_opts.solver = SolverKind::Newton;
    const CandidateSet set = find_candidates(fw, rep.input.cfg, newton_opts);
    for (const CriticalPoint& c : set.quotient.representatives)
        seeds.push_back(gauge.free_values(gauge.canonicalize(c.cfg)));

    std::vector<std::optional<Eigen::VectorXd>> roots(seeds.size());
    parallel_for(static_cast<int>(seeds.size()), opts.newton.threads,
                 [&](int k) { roots[k] = kkt_solve(model, fw, seeds[k], diam); });

    std::vector<KktPoint> points;
    const double tol = opts.quotient.dedup_tol * diam;
    for (std::size_t k = 0; k < roots.size(); ++k) {
        if (!roots[k]) continue;
        const Configuration c = gauge.canonicalize(gauge.assemble(*roots[k]));
        const bool from_random = static_cast<int>(k) < random_count;
        auto dup = std::find_if(points.begin(), points.end(), [&](const KktPoint& p) {
            return (p.cfg - c).cwiseAbs().maxCoeff() <= 1e3 * tol;
        });
        if (dup != points.end()) {
            dup->random_seed = dup->random_seed || from_random;
            continue;
        }
        // Undeformed points lie on the variety only if shaky; skip the zero-energy ones.
        const double d = density(fw, c);
        if (d <= 1e-12 * (1.0 + d)) continue;
        points.push_back({c, d, from_random});
    }
    rep.constrained_converged = static_cast<int>(points.size());
    std::stable_sort(points.begin(), points.end(),
                     [](const KktPoint& a, const KktPoint& b) { return a.density < b.density; });
    rep.candidates_total = static_cast<int>(points.size());
    for (const KktPoint& p : points) {
        ++rep.candidates_examined;
        PathCertificate cert;
        if (certify(fw, rep.input.cfg, p.cfg, opts, cert)) {
            const Inertia in = hessian_inertia(model.hessian(p.cfg));
            accept(rep, fw, p.cfg, cert, to_string(classify_inertia(in)), opts.rank_tol);
            rep.constrained_random_hit = p.random_seed;
            return rep;
        }
        ++rep.constrained_rejected;
    }
    rep.infinite = true;
    rep.low_confidence = true;
    return rep;
}

}  // namespace

AnalysisReport singularity_distance(const Framework& fw, const Configuration& cfg,
                                    AnalysisMethod method, const SolverOptions& opts) {
    if (method == AnalysisMethod::Constrained) return constrained_distance(fw, cfg, opts);
    AnalysisReport rep = snappability(fw, cfg, opts);
    rep.method = AnalysisMethod::Thm3;
    return rep;
}

nlohmann::json certificate_to_json(const PathCertificate& cert) {
    nlohmann::json j;
    j["success"] = cert.success;
    j["samples"] = cert.samples.size();
    j["endpoint"] = cert.endpoint.size() ? configuration_to_json(cert.endpoint) : nlohmann::json(nullptr);
    j["endpoint_gap"] = cert.endpoint_gap;
    j["extrapolation_delta"] =
        std::isfinite(cert.extrapolation_delta) ? nlohmann::json(cert.extrapolation_delta) : nlohmann::json(nullptr);
    j["min_pure_condition_magnitude_before_end"] =
        std::isfinite(cert.min_pure_condition_magnitude_before_end)
            ? nlohmann::json(cert.min_pure_condition_magnitude_before_end)
            : nlohmann::json(nullptr);
    j["max_residual"] = cert.max_residual;
    if (!cert.failure.empty()) j["failure"] = cert.failure;
    return j;
}

namespace {

nlohmann::json histogram_to_json(const std::map<int, int>& h) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : h) j[std::to_string(k)] = v;
    return j;
}

}  // namespace

nlohmann::json candidates_to_json(const CandidateSet& set) {
    nlohmann::json j;
    j["solver"] = to_string(set.solver);
    int minima = 0, saddles = 0, degenerate = 0;
    for (const auto& p : set.points) {
        if (p.classification == Classification::Minimum) ++minima;
        if (p.classification == Classification::Saddle) ++saddles;
        if (p.classification == Classification::Degenerate) ++degenerate;
    }
    j["real_critical_points"] = set.points.size();
    j["minima"] = minima;
    j["saddles"] = saddles;
    j["degenerate"] = degenerate;
    j["quotient_size"] = set.quotient.representatives.size();
    if (set.homotopy_stats) {
        const auto& s = *set.homotopy_stats;
        j["tracked_paths"] = s.tracked_paths;
        j["finite_paths"] = s.finite;
        j["infinite_paths"] = s.infinite;
        j["failed_paths"] = s.failed;
        j["finite_solutions"] = s.distinct_finite;
        j["real_finite_paths"] = s.real_finite;
        j["retracked_paths"] = s.retracked;
        j["residual_histogram"] = histogram_to_json(s.residual_histogram);
        j["winding_histogram"] = histogram_to_json(s.winding_histogram);
    }
    if (set.newton_stats) {
        j["starts"] = set.newton_stats->starts;
        j["converged_starts"] = set.newton_stats->converged;
        j["dropped_starts"] = set.newton_stats->dropped;
    }
    return j;
}

nlohmann::json report_to_json(const AnalysisReport& rep) {
    nlohmann::json j;
    j["value"] = rep.infinite ? nlohmann::json(nullptr) : nlohmann::json(rep.value);
    j["infinite"] = rep.infinite;
    j["witness"] = rep.witness.size() ? configuration_to_json(rep.witness) : nlohmann::json(nullptr);
    j["method"] = to_string(rep.method);
    j["candidates_examined"] = rep.candidates_examined;
    j["path_certificate"] = certificate_to_json(rep.certificate);
    nlohmann::json d;
    d["witness_is_shaky"] = rep.witness_is_shaky;
    if (!rep.witness_classification.empty()) d["witness_classification"] = rep.witness_classification;
    d["candidates_total"] = rep.candidates_total;
    d["low_confidence"] = rep.low_confidence;
    d["polished"] = rep.input.polished;
    d["initial_relative_residual"] = rep.input.initial_residual;
    d["final_relative_residual"] = rep.input.final_residual;
    if (rep.candidates) d["critical"] = candidates_to_json(*rep.candidates);
    if (rep.method == AnalysisMethod::Constrained) {
        d["kkt_points"] = rep.constrained_converged;
        d["rejected_without_certificate"] = rep.constrained_rejected;
        d["witness_reached_from_random_seed"] = rep.constrained_random_hit;
    }
    j["diagnostics"] = d;
    return j;
}

VariantTable compare_variants(const std::vector<std::filesystem::path>& files,
                              const SolverOptions& opts) {
    VariantTable table;
    for (const auto& file : files) {
        const FrameworkFile ff = load_framework(file);
        VariantRow row;
        row.file = file.filename().string();
        row.label = file.stem().string();
        row.model = ff.framework.strain_model();
        row.report = snappability(ff.framework, ff.configuration, opts);
        const CandidateSet& set = *row.report.candidates;
        row.solver = set.solver;
        row.real_critical_points = static_cast<int>(set.points.size());
        row.quotient_size = static_cast<int>(set.quotient.representatives.size());
        if (set.homotopy_stats) {
            row.tracked_paths = set.homotopy_stats->tracked_paths;
            row.finite_solutions = set.homotopy_stats->distinct_finite;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

nlohmann::json VariantTable::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const VariantRow& r : rows) {
        nlohmann::json j;
        j["label"] = r.label;
        j["file"] = r.file;
        j["strain_model"] = to_string(r.model);
        j["solver"] = to_string(r.solver);
        j["tracked_paths"] = r.solver == SolverKind::Homotopy ? nlohmann::json(r.tracked_paths)
                                                              : nlohmann::json(nullptr);
        j["finite_solutions"] = r.solver == SolverKind::Homotopy ? nlohmann::json(r.finite_solutions)
                                                                 : nlohmann::json(nullptr);
        j["real_critical_points"] = r.real_critical_points;
        j["quotient_size"] = r.quotient_size;
        j["value"] = r.report.infinite ? nlohmann::json(nullptr) : nlohmann::json(r.report.value);
        j["witness"] = r.report.witness.size() ? configuration_to_json(r.report.witness)
                                               : nlohmann::json(nullptr);
        rows_json.push_back(j);
    }
    return nlohmann::json{{"variants", rows_json}};
}

std::string VariantTable::to_text() const {
    const nlohmann::json j = to_json();
    std::ostringstream out;
    out << std::left << std::setw(22) << "variant" << std::setw(8) << "model" << std::setw(10)
        << "solver" << std::setw(8) << "paths" << std::setw(8) << "finite" << std::setw(6) << "#R"
        << "sigma = s\n";
    for (const auto& r : j["variants"]) {
        auto cell = [](const nlohmann::json& v) { return v.is_null() ? std::string("-") : v.dump(); };
        std::ostringstream value;
        if (r["value"].is_null())
            value << "inf";
        else
            value << std::setprecision(5) << r["value"].get<double>();
        out << std::setw(22) << r["label"].get<std::string>() << std::setw(8)
            << r["strain_model"].get<std::string>() << std::setw(10) << r["solver"].get<std::string>()
            << std::setw(8) << cell(r["tracked_paths"]) << std::setw(8) << cell(r["finite_solutions"])
            << std::setw(6) << cell(r["quotient_size"]) << value.str() << "\n";
    }
    for (const auto& r : j["variants"]) {
        if (r["witness"].is_null()) continue;
        out << r["label"].get<std::string>() << " witness:";
        for (const auto& row : r["witness"]) {
            out << " (";
            for (std::size_t c = 0; c < row.size(); ++c)
                out << (c ? ", " : "") << std::fixed << std::setprecision(4) << row[c].get<double>();
            out << ")";
            out.unsetf(std::ios::fixed);
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace snapkit
