#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace snapkit {

/// A square polynomial system F: C^N -> C^N evaluated in homogeneous form
/// F^h(X) = X_0^{d_i} F_i(X_1/X_0, ..., X_N/X_0).
class HomogeneousSystem {
public:
    virtual ~HomogeneousSystem() = default;

    virtual int num_variables() const = 0;
    virtual std::vector<int> degrees() const = 0;

    /// X has N+1 entries. Fills f (N) and jac (N x (N+1)) with respect to X.
    virtual void evaluate(const Eigen::VectorXcd& x, Eigen::VectorXcd& f,
                          Eigen::MatrixXcd& jac) const = 0;
};

struct HomotopyOptions {
    std::uint64_t seed = 1;
    int threads = 1;
    double max_step = 0.02;        ///< along a segment, as a fraction of its length
    double min_step = 1e-14;
    double corrector_tol = 1e-11;  ///< relative Newton update norm
    double max_predictor_error = 1e-4;  ///< relative size of the first corrector update
    double endgame_radius = 0.1;   ///< Cauchy endgame starts at |s| = radius
    double endgame_shrink = 0.25;
    int endgame_rounds = 40;
    double endgame_min_radius = 1e-13;
    double endgame_tol = 1e-10;
    int cycle_points = 16;         ///< samples per loop of the Cauchy endgame
    int max_winding = 8;
    double finite_threshold = 1e8; ///< affine norm above which an endpoint is at infinity
    int max_retracks = 3;          ///< re-runs of paths that collide before the endgame
};

enum class PathStatus { Finite, Infinite, Failed };

struct PathResult {
    PathStatus status = PathStatus::Failed;
    Eigen::VectorXcd projective;  ///< endpoint, N+1 entries
    Eigen::VectorXcd solution;    ///< affine endpoint (finite paths)
    int winding = 0;
    int steps = 0;
    double residual = 0.0;        ///< |F(x)| at the affine endpoint
    std::string failure;
};

struct TotalDegreeResult {
    std::vector<PathResult> paths;
    int retracked = 0;

    int count(PathStatus status) const;
};

/// Total-degree linear homotopy H = s gamma G + (1 - s) F^h on a random affine
/// patch, tracked from s = 1 to s = 0 with an RK4 predictor and Newton
/// corrector, finished by a Cauchy endgame. Start system G_i = X_i^{d_i} - X_0^{d_i}.
/// Deterministic for a fixed seed regardless of the thread count.
TotalDegreeResult solve_total_degree(const HomogeneousSystem& system,
                                     const HomotopyOptions& opts);

/// Product of the degrees (number of tracked paths).
long long bezout_number(const std::vector<int>& degrees);

}  // namespace snapkit
