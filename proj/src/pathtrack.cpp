#include "snapkit/pathtrack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "snapkit/errors.hpp"
#include "snapkit/rigidity.hpp"
#include "snapkit/strain.hpp"

namespace snapkit {

Eigen::VectorXd LengthPath::squared_at(double t) const {
    return (1.0 - t) * start.array().square() + t * target.array().square();
}

EdgeLengthVector LengthPath::at(double t) const {
    if (t == 0.0) return start;
    if (t == 1.0) return target;
    return squared_at(t).cwiseMax(0.0).cwiseSqrt();
}

EdgeLengthVector interpolate_lengths(const LengthPath& path, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("path parameter t must lie in [0, 1]");
    if (path.start.size() != path.target.size())
        throw ValidationError("length path endpoints differ in size");
    return path.at(t);
}

namespace {

class Continuation {
public:
    Continuation(const Framework& fw, const LengthPath& path, const TrackOptions& opts)
        : fw_(fw), gauge_(fw), opts_(opts), start_sq_(path.start.array().square()),
          delta_sq_(path.target.array().square() - path.start.array().square()) {
        scale_ = std::max(start_sq_.maxCoeff(), (start_sq_ + delta_sq_).maxCoeff());
        if (!(scale_ > 0.0)) scale_ = 1.0;
    }

    const Gauge& gauge() const { return gauge_; }

    Eigen::VectorXd phi(const Eigen::VectorXd& x, double t) const {
        return squared_edge_lengths(fw_, gauge_.assemble(x)) - (start_sq_ + t * delta_sq_);
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
        return 2.0 * rigidity_matrix_free(fw_, gauge_, gauge_.assemble(x)).transpose();
    }

    double relative_residual(const Eigen::VectorXd& x, double t) const {
        return phi(x, t).cwiseAbs().maxCoeff() / scale_;
    }

    bool tangent(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
        const Eigen::MatrixXd j = jacobian(x);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
        if (!lu.isInvertible()) return false;
        out = lu.solve(delta_sq_);
        return out.allFinite();
    }

    // Newton at fixed t; rejects non-contracting or oversized updates.
    bool correct(Eigen::VectorXd& x, double t, double max_first) const {
        double previous = std::numeric_limits<double>::infinity();
        for (int it = 0; it < opts_.corrector_iterations; ++it) {
            const Eigen::VectorXd f = phi(x, t);
            if (f.cwiseAbs().maxCoeff() <= 1e-14 * scale_) return true;
            Eigen::FullPivLU<Eigen::MatrixXd> lu(jacobian(x));
            if (!lu.isInvertible()) return false;
            const Eigen::VectorXd dx = lu.solve(-f);
            const double len = dx.norm();
            if (!std::isfinite(len)) return false;
            if (it == 0 && len > max_first) return false;
            if (it > 0 && len > 0.5 * previous && len > 1e-13 * (1.0 + x.norm())) return false;
            x += dx;
            previous = len;
            if (len <= 1e-13 * (1.0 + x.norm())) break;
        }
        return relative_residual(x, t) <= opts_.residual_tol;
    }

    // Adaptive RK4-predictor / Newton-corrector from t0 to t1.
    bool advance(Eigen::VectorXd& x, double t0, double t1, double& h, PathCertificate& cert,
                 double length_scale) const {
        double t = t0;
        int streak = 0;
        while (t < t1) {
            const double step = std::min(h, t1 - t);
            Eigen::VectorXd k1, k2, k3, k4;
            bool ok = tangent(x, k1) && tangent(x + 0.5 * step * k1, k2) &&
                      tangent(x + 0.5 * step * k2, k3) && tangent(x + step * k3, k4);
            Eigen::VectorXd xp;
            const double tn = (step == t1 - t) ? t1 : t + step;
            if (ok) {
                xp = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                ok = correct(xp, tn, 1e-3 * length_scale);
            }
            if (ok) {
                x = xp;
                t = tn;
                cert.max_residual = std::max(cert.max_residual, relative_residual(x, t));
                cert.samples.push_back({t, gauge_.assemble(x)});
                if (++streak >= 3) {
                    h = std::min(2.0 * h, opts_.max_step);
                    streak = 0;
                }
            } else {
                h *= 0.5;
                streak = 0;
                if (h < opts_.min_step) {
                    cert.failure = "step size underflow at t = " + std::to_string(t) +
                                   " (path lost or real branch ends)";
                    return false;
                }
            }
        }
        return true;
    }

private:
    const Framework& fw_;
    Gauge gauge_;
    const TrackOptions& opts_;
    Eigen::VectorXd start_sq_;
    Eigen::VectorXd delta_sq_;
    double scale_ = 1.0;
};

double safe_pure_condition(const Framework& fw, const Configuration& cfg) {
    try {
        return std::abs(pure_condition(fw, cfg));
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

PathCertificate track_deformation(const Framework& fw, const Configuration& start_cfg,
                                  const LengthPath& path, const TrackOptions& opts) {
    validate_configuration(fw, start_cfg);
    if (path.start.size() != fw.num_edges() || path.target.size() != fw.num_edges())
        throw ValidationError("length path does not match the edge count");
    const Continuation cont(fw, path, opts);
    const Gauge& gauge = cont.gauge();
    if (gauge.num_free() != fw.num_edges())
        throw PreconditionError("path tracking needs an isostatic framework (square Jacobian)");

    PathCertificate cert;
    const Configuration start = gauge.canonicalize(start_cfg);
    Eigen::VectorXd x = gauge.free_values(start);
    if (cont.relative_residual(x, 0.0) > 1e-9)
        throw PreconditionError("start configuration does not realize the start lengths");
    const double length_scale = std::max(1.0, diameter(start));
    cert.samples.push_back({0.0, start});
    cert.min_pure_condition_magnitude_before_end = safe_pure_condition(fw, start);

    double h = opts.initial_step;
    const double t_end = std::clamp(opts.endgame_start, 0.0, 1.0);
    if (!cont.advance(x, 0.0, t_end, h, cert, length_scale)) return cert;

    // Endgame: samples at t_m = 1 - 2^-m, Richardson extrapolation in h^(1/2).
    const int m0 = std::max(1, static_cast<int>(std::lround(-std::log2(1.0 - t_end))));
    std::vector<std::vector<Eigen::VectorXd>> table;
    double t = t_end;
    Eigen::VectorXd best;
    double delta = std::numeric_limits<double>::infinity();
    constexpr int max_order = 8;
    for (int m = m0; m <= opts.endgame_levels; ++m) {
        const double tm = 1.0 - std::ldexp(1.0, -m);
        if (tm > t) {
            h = std::min(h, 0.25 * (tm - t));
            if (!cont.advance(x, t, tm, h, cert, length_scale)) return cert;
            t = tm;
        }
        std::vector<Eigen::VectorXd> row{x};
        const auto* prev = table.empty() ? nullptr : &table.back();
        for (int j = 1; prev && j <= std::min<int>(max_order, static_cast<int>(prev->size())); ++j) {
            const double factor = std::pow(2.0, 0.5 * j) - 1.0;
            row.push_back(row[j - 1] + (row[j - 1] - (*prev)[j - 1]) / factor);
        }
        if (!best.size()) {
            best = row.back();
        } else {
            delta = (row.back() - best).cwiseAbs().maxCoeff();
            best = row.back();
        }
        table.push_back(std::move(row));
        if (table.size() > 3 && delta < opts.extrapolation_tol) break;
    }
    for (const auto& s : cert.samples)
        cert.min_pure_condition_magnitude_before_end =
            std::min(cert.min_pure_condition_magnitude_before_end, safe_pure_condition(fw, s.cfg));
    cert.extrapolation_delta = delta;
    if (!(delta < opts.extrapolation_tol)) {
        cert.failure = "endgame extrapolation did not converge";
        return cert;
    }
    // A short Gauss-Newton polish removes the extrapolation error at the
    // singular endpoint without leaving the gauge.
    Configuration endpoint = gauge.assemble(best);
    const PolishResult pol = polish_to_lengths(fw, endpoint, path.target, 20);
    endpoint = gauge.canonicalize(pol.cfg);
    if (!endpoint.allFinite()) {
        cert.failure = "endpoint is not finite";
        return cert;
    }
    cert.endpoint = endpoint;
    cert.endpoint_gap = (edge_lengths(fw, endpoint) - path.target).cwiseAbs().maxCoeff();
    cert.samples.push_back({1.0, endpoint});
    if (cert.endpoint_gap > 1e-6 * length_scale) {
        cert.failure = "extrapolated endpoint does not realize the target lengths";
        return cert;
    }
    cert.success = true;
    return cert;
}

bool check_endpoint(const Framework& fw, const PathCertificate& cert,
                    const Configuration& target_cfg, double tol) {
    if (!cert.success || cert.endpoint.size() == 0) return false;
    const Gauge gauge(fw);
    const Configuration a = gauge.canonicalize(cert.endpoint);
    const Configuration b = gauge.canonicalize(target_cfg);
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (tol <= 0.0) tol = 1e-6 * std::max(diameter(b), 1e-300);
    return (a - b).cwiseAbs().maxCoeff() <= tol;
}

namespace {

ElementTrend fit_trend(double e0, double eh, double e1) {
    ElementTrend tr;
    tr.c = e0;
    tr.a = 2.0 * (e1 - 2.0 * eh + e0);
    tr.b = e1 - e0 - tr.a;
    if (tr.a > 0.0)
        tr.vertex = -tr.b / (2.0 * tr.a);
    else
        tr.vertex = tr.b >= 0.0 ? -std::numeric_limits<double>::infinity()
                                : std::numeric_limits<double>::infinity();
    return tr;
}

}  // namespace

MonotonicityReport verify_monotonicity(const Framework& fw, const LengthPath& path, int samples) {
    if (fw.strain_model() != StrainModel::GL)
        throw PreconditionError("monotonicity check requires the GL strain model");
    samples = std::max(samples, 3);
    auto energies = [&](double t) {
        const auto list = element_energies(fw, path.at(t));
        Eigen::VectorXd e(static_cast<Eigen::Index>(list.size()));
        for (std::size_t k = 0; k < list.size(); ++k) e(static_cast<Eigen::Index>(k)) = list[k].energy;
        return e;
    };
    const auto kinds = element_energies(fw, path.at(0.0));
    const Eigen::VectorXd e0 = energies(0.0), eh = energies(0.5), e1 = energies(1.0);

    MonotonicityReport rep;
    std::vector<Eigen::VectorXd> grid;
    for (int k = 0; k < samples; ++k) grid.push_back(energies(static_cast<double>(k) / (samples - 1)));
    const double scale = std::max({e0.cwiseAbs().maxCoeff(), eh.cwiseAbs().maxCoeff(),
                                   e1.cwiseAbs().maxCoeff(), 1e-300});

    auto assess = [&](ElementTrend tr, const std::vector<double>& values) {
        tr.monotone = tr.vertex <= 1e-12;
        for (int k = 0; k < samples; ++k) {
            const double t = static_cast<double>(k) / (samples - 1);
            const double pred = (tr.a * t + tr.b) * t + tr.c;
            rep.max_fit_error = std::max(rep.max_fit_error, std::abs(pred - values[k]) / scale);
            if (k > 0 && values[k] < values[k - 1] - 1e-14 * scale) tr.monotone = false;
        }
        return tr;
    };
    for (Eigen::Index el = 0; el < e0.size(); ++el) {
        std::vector<double> values;
        for (const auto& g : grid) values.push_back(g(el));
        ElementTrend tr = assess(fit_trend(e0(el), eh(el), e1(el)), values);
        tr.element = static_cast<int>(el);
        tr.bar = kinds[static_cast<std::size_t>(el)].kind == ElementEnergy::Kind::Bar;
        rep.monotone = rep.monotone && tr.monotone;
        rep.elements.push_back(tr);
    }
    std::vector<double> totals;
    for (const auto& g : grid) totals.push_back(g.sum());
    rep.total = assess(fit_trend(e0.sum(), eh.sum(), e1.sum()), totals);
    rep.total.element = -1;
    rep.monotone = rep.monotone && rep.total.monotone;
    return rep;
}

void write_path_csv(const std::filesystem::path& file, const Framework& fw,
                    const PathCertificate& cert) {
    std::ofstream out(file);
    if (!out) throw ValidationError("cannot write " + file.string());
    out << std::setprecision(17);
    out << "t";
    for (int k = 0; k < fw.num_knots(); ++k)
        for (int c = 0; c < fw.dimension(); ++c) out << ",k" << (k + 1) << "_" << "xyz"[c];
    if (!cert.samples.empty()) {
        for (const auto& el : element_energies(fw, edge_lengths(fw, cert.samples.front().cfg)))
            out << (el.kind == ElementEnergy::Kind::Bar ? ",bar" : ",plate") << (el.index + 1);
    }
    out << "\n";
    for (const auto& s : cert.samples) {
        out << s.t;
        for (int k = 0; k < fw.num_knots(); ++k)
            for (int c = 0; c < fw.dimension(); ++c) out << "," << s.cfg(k, c);
        for (const auto& el : element_energies(fw, edge_lengths(fw, s.cfg))) out << "," << el.energy;
        out << "\n";
    }
}

}  // namespace snapkit
