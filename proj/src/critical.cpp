#include "snapkit/critical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "snapkit/detail/gl_kernel.hpp"
#include "snapkit/errors.hpp"
#include "snapkit/parallel.hpp"

namespace snapkit {

std::string to_string(Classification c) {
    switch (c) {
        case Classification::Minimum: return "minimum";
        case Classification::Saddle: return "saddle";
        case Classification::Degenerate: return "degenerate";
    }
    return "unknown";
}

Inertia hessian_inertia(const Eigen::MatrixXd& hessian, double tol) {
    Inertia in;
    if (hessian.size() == 0) return in;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (hessian + hessian.transpose()),
                                                      Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (std::abs(ev(k)) <= tol * scale)
            ++in.zero;
        else if (ev(k) > 0)
            ++in.positive;
        else
            ++in.negative;
    }
    return in;
}

Classification classify_inertia(const Inertia& inertia) {
    if (inertia.zero > 0) return Classification::Degenerate;
    if (inertia.negative == 0) return Classification::Minimum;
    return Classification::Saddle;
}

double gradient_tolerance(const Framework& fw) {
    return 1e-9 * fw.cross_section() / fw.total_length();
}

CriticalPoint make_critical_point(const EnergyModel& model, const Configuration& cfg) {
    CriticalPoint cp;
    cp.cfg = cfg;
    cp.energy = model.energy(cfg);
    cp.density_value = model.density(cfg);
    cp.gradient_residual = model.gradient(cfg).norm();
    cp.inertia = hessian_inertia(model.hessian(cfg));
    cp.classification = classify_inertia(cp.inertia);
    return cp;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Eigen::VectorXd newton_step(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
    if (lu.isInvertible()) {
        Eigen::VectorXd dx = lu.solve(-g);
        if (dx.allFinite()) return dx;
    }
    return h.completeOrthogonalDecomposition().solve(-g);
}

// Damped Newton on grad U = 0 with backtracking on |grad U|.
std::optional<Eigen::VectorXd> newton_root(const EnergyModel& model, Eigen::VectorXd x,
                                           double gtol, double max_step, int max_iterations) {
    Eigen::VectorXd g = model.gradient_at(x);
    if (!g.allFinite()) return std::nullopt;
    for (int it = 0; it < max_iterations; ++it) {
        const double gn = g.norm();
        if (gn <= gtol) {
            // Polish while steps shrink. Near a singular root Newton converges
            // only linearly with ratio (m - 1) / m; the step is then scaled by
            // the estimated multiplicity m.
            double previous = std::numeric_limits<double>::infinity();
            for (int p = 0; p < 60; ++p) {
                const Eigen::VectorXd dx = newton_step(model.hessian_at(x), g);
                const double len = dx.norm();
                if (!dx.allFinite() || !(len < previous)) break;
                const double ratio = len / previous;
                const double m = (ratio > 0.3 && ratio < 0.95) ? std::round(1.0 / (1.0 - ratio)) : 1.0;
                Eigen::VectorXd trial = x + m * dx;
                Eigen::VectorXd g2 = model.gradient_at(trial);
                if (m > 1.0 && !(g2.norm() <= g.norm())) {
                    trial = x + dx;
                    g2 = model.gradient_at(trial);
                }
                if (!(g2.norm() <= g.norm())) break;
                x = trial;
                g = g2;
                previous = len;
                if (len <= 1e-15 * (1.0 + x.norm())) break;
            }
            return x;
        }
        Eigen::VectorXd dx = newton_step(model.hessian_at(x), g);
        if (!dx.allFinite()) return std::nullopt;
        const double len = dx.norm();
        if (len > max_step) dx *= max_step / len;
        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            const Eigen::VectorXd trial = x + alpha * dx;
            const Eigen::VectorXd gt = model.gradient_at(trial);
            if (gt.allFinite() && gt.norm() < (1.0 - 1e-4 * alpha) * gn) {
                x = trial;
                g = gt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) return std::nullopt;
    }
    return std::nullopt;
}

bool near_duplicate(const std::vector<Configuration>& seen, const Configuration& c, double tol) {
    return std::any_of(seen.begin(), seen.end(), [&](const Configuration& s) {
        return (s - c).cwiseAbs().maxCoeff() <= tol;
    });
}

}  // namespace

NewtonResult solve_critical_newton(const Framework& fw, const Configuration& base_cfg,
                                   const NewtonOptions& opts) {
    validate_configuration(fw, base_cfg);
    const EnergyModel model(fw);
    const Gauge& gauge = model.gauge();
    const Configuration base = gauge.canonicalize(base_cfg);
    const Eigen::VectorXd center = gauge.free_values(base);
    const double diam = diameter(base);
    const double half_width = opts.box_scale * diam;
    const double gtol = gradient_tolerance(fw);

    NewtonResult result;
    result.stats.starts = std::max(0, opts.starts);
    std::vector<std::optional<Eigen::VectorXd>> roots(static_cast<std::size_t>(result.stats.starts));
    parallel_for(result.stats.starts, opts.threads, [&](int k) {
        std::mt19937_64 rng(splitmix64(opts.seed ^ splitmix64(static_cast<std::uint64_t>(k))));
        std::uniform_real_distribution<double> u(-half_width, half_width);
        Eigen::VectorXd x = center;
        for (Eigen::Index m = 0; m < x.size(); ++m) x(m) += u(rng);
        roots[k] = newton_root(model, x, gtol, 0.25 * diam, opts.max_iterations);
    });

    std::vector<Configuration> seen;
    const double tol = opts.dedup_tol * diam;
    for (const auto& r : roots) {
        if (!r) {
            ++result.stats.dropped;
            continue;
        }
        ++result.stats.converged;
        const Configuration canon = gauge.canonicalize(gauge.assemble(*r));
        if (near_duplicate(seen, canon, tol)) continue;
        seen.push_back(canon);
        result.points.push_back(make_critical_point(model, canon));
    }
    return result;
}

GradientSystem::GradientSystem(const Framework& fw) : fw_(fw), gauge_(fw) {
    if (fw.strain_model() != StrainModel::GL)
        throw PreconditionError("homotopy solver requires the GL strain model");
    m_ = energy_matrix(fw).m;
    scale_ = std::max(diameter(gauge_.canonicalize(fw.declared_configuration())),
                      fw.total_length() / std::max(1, fw.num_edges()));

    const int nf = gauge_.num_free();
    row_scale_ = Eigen::VectorXd::Zero(nf);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    constexpr int samples = 4;
    for (int k = 0; k < samples; ++k) {
        Eigen::VectorXcd x(nf + 1);
        x(0) = 1.0;
        for (int m = 1; m <= nf; ++m) x(m) = scale_ * std::polar(1.0, angle(rng));
        Eigen::VectorXcd f;
        Eigen::MatrixXcd j;
        evaluate_raw(x, f, j);
        row_scale_ += f.cwiseAbs() / samples;
    }
    for (int m = 0; m < nf; ++m)
        if (!(row_scale_(m) > 0.0)) row_scale_(m) = 1.0;
}

int GradientSystem::num_variables() const { return gauge_.num_free(); }

std::vector<int> GradientSystem::degrees() const {
    return std::vector<int>(static_cast<std::size_t>(gauge_.num_free()), 3);
}

void GradientSystem::evaluate(const Eigen::VectorXcd& x, Eigen::VectorXcd& f,
                              Eigen::MatrixXcd& jac) const {
    Eigen::VectorXcd raw = x * scale_;
    raw(0) = x(0);
    evaluate_raw(raw, f, jac);
    jac.rightCols(jac.cols() - 1) *= scale_;
    for (Eigen::Index r = 0; r < f.size(); ++r) {
        f(r) /= row_scale_(r);
        jac.row(r) /= row_scale_(r);
    }
}

void GradientSystem::evaluate_raw(const Eigen::VectorXcd& x, Eigen::VectorXcd& f,
                                  Eigen::MatrixXcd& jac) const {
    using cd = std::complex<double>;
    const int n = fw_.dimension();
    const int nf = gauge_.num_free();
    const cd x0 = x(0);
    Eigen::MatrixXcd coords = gauge_.anchor().cast<cd>() * x0;
    const auto& free = gauge_.free_indices();
    for (int m = 0; m < nf; ++m) coords(free[m] / n, free[m] % n) = x(m + 1);

    const auto ev = detail::evaluate_gl<cd>(m_, fw_.edges(), n, coords, x0 * x0, true);

    // d gradient / d lift0 : w_e depends on lift0 through 4 M(e+1, 0).
    Eigen::VectorXcd dlift = Eigen::VectorXcd::Zero(fw_.num_coords());
    for (int e = 0; e < fw_.num_edges(); ++e) {
        const Edge& edge = fw_.edges()[e];
        const double dw = 4.0 * m_(e + 1, 0);
        for (int c = 0; c < n; ++c) {
            const cd d = coords(edge.i, c) - coords(edge.j, c);
            dlift(edge.i * n + c) += dw * d;
            dlift(edge.j * n + c) -= dw * d;
        }
    }

    f.resize(nf);
    jac.resize(nf, nf + 1);
    for (int r = 0; r < nf; ++r) {
        const int row = free[r];
        f(r) = ev.gradient(row);
        cd d0 = 2.0 * x0 * dlift(row);
        for (int idx : gauge_.fixed_indices()) {
            const double a = gauge_.anchor()(idx / n, idx % n);
            if (a != 0.0) d0 += ev.hessian(row, idx) * a;
        }
        jac(r, 0) = d0;
        for (int c = 0; c < nf; ++c) jac(r, c + 1) = ev.hessian(row, free[c]);
    }
}

CriticalHomotopyResult solve_critical_homotopy(const Framework& fw,
                                               const CriticalHomotopyOptions& opts) {
    const GradientSystem system(fw);
    const EnergyModel model(fw);
    const Gauge& gauge = model.gauge();
    const double diam = diameter(gauge.canonicalize(fw.declared_configuration()));
    const double gtol = gradient_tolerance(fw);

    const TotalDegreeResult paths = solve_total_degree(system, opts.tracking);

    CriticalHomotopyResult result;
    auto& st = result.stats;
    st.tracked_paths = static_cast<long long>(paths.paths.size());
    st.finite = paths.count(PathStatus::Finite);
    st.infinite = paths.count(PathStatus::Infinite);
    st.failed = paths.count(PathStatus::Failed);
    st.retracked = paths.retracked;

    std::vector<Configuration> seen;
    const double tol = opts.dedup_tol * std::max(diam, 1.0);
    for (const PathResult& p : paths.paths) {
        if (p.status != PathStatus::Finite) continue;
        ++st.winding_histogram[p.winding];
        const int bucket =
            p.residual > 0.0 ? static_cast<int>(std::floor(std::log10(p.residual))) : -300;
        ++st.residual_histogram[bucket];
        result.finite_solutions.push_back(p.solution * system.length_scale());

        const double scale = std::max(1.0, p.solution.norm());
        if (p.solution.imag().cwiseAbs().maxCoeff() > opts.real_tol * scale) continue;
        ++st.real_finite;
        Eigen::VectorXd x = p.solution.real() * system.length_scale();
        // Real Newton polish; keep only if the residual does not grow.
        Eigen::VectorXd g = model.gradient_at(x);
        for (int it = 0; it < 4; ++it) {
            const Eigen::VectorXd dx = newton_step(model.hessian_at(x), g);
            if (!dx.allFinite()) break;
            const Eigen::VectorXd g2 = model.gradient_at(x + dx);
            if (!(g2.norm() < g.norm())) break;
            x += dx;
            g = g2;
        }
        if (!(g.norm() <= 1e3 * gtol)) continue;
        const Configuration canon = gauge.canonicalize(gauge.assemble(x));
        if (near_duplicate(seen, canon, tol)) continue;
        seen.push_back(canon);
        result.points.push_back(make_critical_point(model, canon));
    }

    // Distinct finite solutions over C.
    std::vector<Eigen::VectorXcd> distinct;
    for (const auto& s : result.finite_solutions) {
        const bool dup = std::any_of(distinct.begin(), distinct.end(), [&](const Eigen::VectorXcd& d) {
            return (d - s).norm() <= 1e-6 * (1.0 + s.norm());
        });
        if (!dup) distinct.push_back(s);
    }
    st.distinct_finite = static_cast<int>(distinct.size());
    return result;
}

QuotientSet build_quotient_set(const std::vector<CriticalPoint>& points, const Framework& fw,
                               const QuotientOptions& opts) {
    const Gauge gauge(fw);
    const double diam = diameter(gauge.canonicalize(fw.declared_configuration()));
    QuotientSet q;
    q.dedup_tolerance = opts.dedup_tol * std::max(diam, 1.0);
    std::vector<Configuration> seen;
    for (const CriticalPoint& p : points) {
        const bool keep = p.classification == Classification::Saddle ||
                          (opts.include_degenerate && p.classification == Classification::Degenerate);
        if (!keep) continue;
        CriticalPoint c = p;
        c.cfg = gauge.canonicalize(p.cfg);
        if (near_duplicate(seen, c.cfg, q.dedup_tolerance)) continue;
        seen.push_back(c.cfg);
        q.representatives.push_back(std::move(c));
    }
    std::stable_sort(q.representatives.begin(), q.representatives.end(),
                     [](const CriticalPoint& a, const CriticalPoint& b) {
                         return a.density_value < b.density_value;
                     });
    return q;
}

}  // namespace snapkit
