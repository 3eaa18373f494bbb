#include "snapkit/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "snapkit/errors.hpp"
#include "snapkit/parallel.hpp"

namespace snapkit {

namespace {

using cd = std::complex<double>;

class Tracker {
public:
    Tracker(const HomogeneousSystem& sys, Eigen::VectorXcd patch, cd gamma,
            const HomotopyOptions& opts)
        : sys_(sys),
          n_(sys.num_variables()),
          degrees_(sys.degrees()),
          patch_(std::move(patch)),
          gamma_(gamma),
          opts_(opts) {}

    int size() const { return n_ + 1; }

    void eval(const Eigen::VectorXcd& x, cd s, Eigen::VectorXcd& h, Eigen::MatrixXcd& hx,
              Eigen::VectorXcd* hs) const {
        Eigen::VectorXcd f(n_);
        Eigen::MatrixXcd jf(n_, n_ + 1);
        sys_.evaluate(x, f, jf);
        h.resize(n_ + 1);
        hx.setZero(n_ + 1, n_ + 1);
        if (hs) hs->setZero(n_ + 1);
        const cd sg = s * gamma_;
        const cd one_minus = 1.0 - s;
        for (int i = 0; i < n_; ++i) {
            const int d = degrees_[i];
            const cd xi = std::pow(x(i + 1), d);
            const cd x0 = std::pow(x(0), d);
            const cd g = xi - x0;
            h(i) = sg * g + one_minus * f(i);
            hx.row(i) = one_minus * jf.row(i);
            hx(i, i + 1) += sg * static_cast<double>(d) * std::pow(x(i + 1), d - 1);
            hx(i, 0) -= sg * static_cast<double>(d) * std::pow(x(0), d - 1);
            if (hs) (*hs)(i) = gamma_ * g - f(i);
        }
        h(n_) = patch_.dot(x) - 1.0;  // dot conjugates its first argument
        hx.row(n_) = patch_.adjoint();
    }

    // dX/dtau for s = s0 + tau (s1 - s0).
    bool tangent(const Eigen::VectorXcd& x, cd s, cd ds, Eigen::VectorXcd& out) const {
        Eigen::VectorXcd h, hs;
        Eigen::MatrixXcd hx;
        eval(x, s, h, hx, &hs);
        out = hx.partialPivLu().solve(-hs * ds);
        return out.allFinite();
    }

    // Newton corrector; with max_first > 0 the first update must stay below
    // max_first * (1 + |x|) and updates must contract, which guards against
    // jumping onto a neighbouring path.
    bool correct(Eigen::VectorXcd& x, cd s, double max_first = 0.0) const {
        Eigen::VectorXcd h;
        Eigen::MatrixXcd hx;
        double previous = 0.0;
        for (int it = 0; it < 3; ++it) {
            eval(x, s, h, hx, nullptr);
            const Eigen::VectorXcd dx = hx.partialPivLu().solve(-h);
            if (!dx.allFinite()) return false;
            const double len = dx.norm();
            const double size = 1.0 + x.norm();
            if (max_first > 0.0) {
                if (it == 0 && len > max_first * size) return false;
                if (it > 0 && len > 0.1 * previous && len > opts_.corrector_tol * size)
                    return false;
            }
            x += dx;
            previous = len;
            if (len <= opts_.corrector_tol * size) return true;
        }
        return false;
    }

    bool track(Eigen::VectorXcd& x, cd s0, cd s1, double max_step, int& steps,
               std::string& why) const {
        const cd ds = s1 - s0;
        double tau = 0.0;
        double h = max_step;
        int streak = 0;
        Eigen::VectorXcd k1, k2, k3, k4;
        while (tau < 1.0) {
            if (++steps > 400000) {
                why = "step budget exhausted";
                return false;
            }
            const double step = std::min(h, 1.0 - tau);
            const cd sa = s0 + tau * ds;
            const cd sm = s0 + (tau + 0.5 * step) * ds;
            const cd sb = s0 + (tau + step) * ds;
            bool ok = tangent(x, sa, ds, k1) && tangent(x + 0.5 * step * k1, sm, ds, k2) &&
                      tangent(x + 0.5 * step * k2, sm, ds, k3) &&
                      tangent(x + step * k3, sb, ds, k4);
            Eigen::VectorXcd xp;
            if (ok) {
                xp = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                ok = correct(xp, sb, opts_.max_predictor_error);
            }
            if (ok) {
                x = xp;
                tau = (step == 1.0 - tau) ? 1.0 : tau + step;
                if (++streak >= 3) {
                    h = std::min(2.0 * h, max_step);
                    streak = 0;
                }
            } else {
                h *= 0.5;
                streak = 0;
                if (h < opts_.min_step) {
                    why = "step size underflow";
                    return false;
                }
            }
        }
        return true;
    }

    // Cauchy endgame around s = 0 starting from x at s = r (real, positive).
    bool endgame(Eigen::VectorXcd& x, double r, PathResult& out) const {
        const int k_pts = opts_.cycle_points;
        Eigen::VectorXcd previous;
        bool have_previous = false;
        bool have_estimate = false;
        // Tracking can break down very close to a singular endpoint; the last
        // closed-loop estimate is then kept.
        auto give_up = [&]() {
            if (!have_estimate) return false;
            out.failure.clear();
            return true;
        };
        for (int round = 0; round < opts_.endgame_rounds; ++round) {
            const Eigen::VectorXcd start = x;
            Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(x.size());
            int samples = 0;
            int winding = 0;
            bool closed = false;
            cd s_prev = r;
            for (int loop = 1; loop <= opts_.max_winding && !closed; ++loop) {
                for (int k = 1; k <= k_pts; ++k) {
                    const double theta = 2.0 * std::numbers::pi * k / k_pts;
                    const cd s_next = r * std::exp(cd(0.0, theta));
                    if (!track(x, s_prev, s_next, 0.25, out.steps, out.failure)) return give_up();
                    s_prev = s_next;
                    sum += x;
                    ++samples;
                }
                if ((x - start).norm() <= 1e-7 * (1.0 + x.norm())) {
                    closed = true;
                    winding = loop;
                }
            }
            if (!closed) {
                // Branch points inside the circle: move closer to s = 0 and retry.
                x = start;
                have_previous = false;
                const double r_next = r * opts_.endgame_shrink;
                if (r_next < opts_.endgame_min_radius) {
                    out.failure = "endgame loop did not close";
                    return give_up();
                }
                if (!track(x, r, r_next, opts_.max_step, out.steps, out.failure)) return give_up();
                r = r_next;
                continue;
            }
            x = start;  // re-sync exactly on the starting sheet
            const Eigen::VectorXcd estimate = sum / static_cast<double>(samples);
            out.winding = winding;
            out.projective = estimate;
            have_estimate = true;
            if (have_previous &&
                (estimate - previous).norm() <= opts_.endgame_tol * (1.0 + estimate.norm())) {
                // A winding number above one next to a regular root means the
                // circle still encloses a cluster of nearby roots.
                if (winding == 1 || !regular_root_near(estimate)) return true;
                have_previous = false;
            } else {
                previous = estimate;
                have_previous = true;
            }
            const double r_next = r * opts_.endgame_shrink;
            if (r_next < opts_.endgame_min_radius) return true;
            if (!track(x, r, r_next, opts_.max_step, out.steps, out.failure)) return give_up();
            r = r_next;
        }
        // Rounds exhausted: accept the last estimate (slow convergence near a
        // high-multiplicity endpoint).
        if (!have_estimate) out.failure = "endgame rounds exhausted";
        return have_estimate;
    }

    // Newton on the affine system from a projective estimate; true if it lands
    // on a root with a well-conditioned Jacobian.
    bool regular_root_near(const Eigen::VectorXcd& projective) const {
        const cd x0 = projective(0);
        if (std::abs(x0) == 0.0) return false;
        Eigen::VectorXcd x = projective.tail(n_) / x0;
        if (!(x.norm() <= opts_.finite_threshold)) return false;
        Eigen::VectorXcd hom(n_ + 1), f;
        Eigen::MatrixXcd j;
        hom(0) = 1.0;
        for (int it = 0; it < 12; ++it) {
            hom.tail(n_) = x;
            sys_.evaluate(hom, f, j);
            const Eigen::VectorXcd dx = j.rightCols(n_).fullPivLu().solve(-f);
            if (!dx.allFinite()) return false;
            x += dx;
            if (dx.norm() <= 1e-13 * (1.0 + x.norm())) break;
        }
        hom.tail(n_) = x;
        sys_.evaluate(hom, f, j);
        if (!(f.norm() <= 1e-10)) return false;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(j.rightCols(n_));
        const auto& sv = svd.singularValues();
        return sv(n_ - 1) > 1e-9 * sv(0);
    }

    void affine_refine(PathResult& out) const {
        const cd x0 = out.projective(0);
        if (x0 == cd(0.0) || !out.projective.allFinite()) {
            out.status = PathStatus::Infinite;
            return;
        }
        Eigen::VectorXcd x = out.projective.tail(n_) / x0;
        if (!(x.norm() <= opts_.finite_threshold)) {
            out.status = PathStatus::Infinite;
            return;
        }
        auto residual = [&](const Eigen::VectorXcd& v, Eigen::VectorXcd& f, Eigen::MatrixXcd& j) {
            Eigen::VectorXcd hom(n_ + 1);
            hom(0) = 1.0;
            hom.tail(n_) = v;
            sys_.evaluate(hom, f, j);
            return f.norm();
        };
        Eigen::VectorXcd f;
        Eigen::MatrixXcd j;
        double res = residual(x, f, j);
        for (int it = 0; it < 8; ++it) {
            const Eigen::VectorXcd dx =
                j.rightCols(n_).fullPivLu().solve(-f);
            if (!dx.allFinite()) break;
            Eigen::VectorXcd f2;
            Eigen::MatrixXcd j2;
            const Eigen::VectorXcd trial = x + dx;
            const double res2 = residual(trial, f2, j2);
            if (!(res2 < res)) break;
            x = trial;
            res = res2;
            f = f2;
            j = j2;
        }
        out.solution = x;
        out.residual = res;
        out.status = PathStatus::Finite;
    }

private:
    const HomogeneousSystem& sys_;
    int n_;
    std::vector<int> degrees_;
    Eigen::VectorXcd patch_;
    cd gamma_;
    const HomotopyOptions& opts_;
};

Eigen::VectorXcd start_point(const std::vector<int>& degrees, long long index,
                             const Eigen::VectorXcd& patch) {
    const int n = static_cast<int>(degrees.size());
    Eigen::VectorXcd x(n + 1);
    x(0) = 1.0;
    for (int i = 0; i < n; ++i) {
        const int d = degrees[i];
        const long long j = index % d;
        index /= d;
        x(i + 1) = std::exp(cd(0.0, 2.0 * std::numbers::pi * static_cast<double>(j) / d));
    }
    return x / patch.dot(x);
}

}  // namespace

long long bezout_number(const std::vector<int>& degrees) {
    long long p = 1;
    for (int d : degrees) p *= d;
    return p;
}

int TotalDegreeResult::count(PathStatus status) const {
    int c = 0;
    for (const auto& p : paths)
        if (p.status == status) ++c;
    return c;
}

TotalDegreeResult solve_total_degree(const HomogeneousSystem& system,
                                     const HomotopyOptions& opts) {
    const int n = system.num_variables();
    const std::vector<int> degrees = system.degrees();
    if (static_cast<int>(degrees.size()) != n)
        throw ValidationError("homotopy: degree list does not match variable count");
    for (int d : degrees)
        if (d < 1) throw ValidationError("homotopy: degrees must be positive");

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> normal(0.0, 1.0);
    const cd gamma = std::exp(cd(0.0, angle(rng)));
    Eigen::VectorXcd patch(n + 1);
    for (int i = 0; i <= n; ++i) patch(i) = cd(normal(rng), normal(rng));

    const Tracker tracker(system, patch, gamma, opts);
    const long long total = bezout_number(degrees);
    if (total > 50'000'000) throw ValidationError("homotopy: Bezout number too large");

    TotalDegreeResult result;
    result.paths.resize(static_cast<std::size_t>(total));
    std::vector<Eigen::VectorXcd> at_radius(static_cast<std::size_t>(total));
    std::vector<char> alive(static_cast<std::size_t>(total), 0);

    auto run_to_radius = [&](int p, double max_step) {
        PathResult& out = result.paths[p];
        out = PathResult{};
        Eigen::VectorXcd x = start_point(degrees, p, patch);
        alive[p] = tracker.correct(x, 1.0) &&
                   tracker.track(x, 1.0, opts.endgame_radius, max_step, out.steps, out.failure);
        if (!alive[p] && out.failure.empty()) out.failure = "start point correction failed";
        at_radius[p] = x;
    };
    parallel_for(static_cast<int>(total), opts.threads,
                 [&](int p) { run_to_radius(p, opts.max_step); });

    // Two paths meeting at the endgame radius means one of them jumped.
    double step = opts.max_step;
    for (int attempt = 0; attempt < opts.max_retracks; ++attempt) {
        std::vector<int> redo;
        for (long long a = 0; a < total; ++a) {
            if (!alive[a]) continue;
            for (long long b = a + 1; b < total; ++b) {
                if (!alive[b]) continue;
                if ((at_radius[a] - at_radius[b]).norm() <= 1e-7 * (1.0 + at_radius[a].norm())) {
                    redo.push_back(static_cast<int>(a));
                    redo.push_back(static_cast<int>(b));
                }
            }
        }
        if (redo.empty()) break;
        std::sort(redo.begin(), redo.end());
        redo.erase(std::unique(redo.begin(), redo.end()), redo.end());
        step *= 0.25;
        result.retracked += static_cast<int>(redo.size());
        parallel_for(static_cast<int>(redo.size()), opts.threads,
                     [&](int k) { run_to_radius(redo[k], step); });
    }

    parallel_for(static_cast<int>(total), opts.threads, [&](int p) {
        PathResult& out = result.paths[p];
        if (!alive[p]) {
            out.status = PathStatus::Failed;
            return;
        }
        Eigen::VectorXcd x = at_radius[p];
        if (!tracker.endgame(x, opts.endgame_radius, out)) {
            out.status = PathStatus::Failed;
            return;
        }
        tracker.affine_refine(out);
    });
    return result;
}

}  // namespace snapkit
