#pragma once

#include <vector>

#include <Eigen/Dense>

#include "snapkit/model.hpp"

namespace snapkit {

/// Rigidity matrix in the R w = 0 orientation: rows are the s*n knot
/// coordinates (flat index knot * n + c), columns the edges. Column (i,j)
/// carries k_i - k_j in knot i's block and k_j - k_i in knot j's block. Plate
/// edges enter exactly like bars.
Eigen::MatrixXd rigidity_matrix(const Framework& fw, const Configuration& cfg);

/// Rows restricted to the gauge's free coordinates.
Eigen::MatrixXd rigidity_matrix_free(const Framework& fw, const Gauge& gauge,
                                     const Configuration& cfg);

struct ShakinessReport {
    bool shaky = false;
    int rank = 0;
    int expected_rank = 0;
    double sigma_max = 0.0;
    double sigma_min = 0.0;  ///< smallest singular value among the first expected_rank
    double threshold = 0.0;  ///< tol * sigma_max
    Eigen::VectorXd singular_values;
};

/// Numerical rank via singular values (sigma_k < tol * sigma_max is zero).
/// Unpinned frameworks compare the rank of the full matrix with
/// r = s n - (n^2 + n)/2; pinned ones compare the free-row matrix with b.
ShakinessReport is_shaky(const Framework& fw, const Configuration& cfg, double tol = 1e-9);

/// Orthonormal basis of the numerical nullspace {w : R w = 0}.
std::vector<Eigen::VectorXd> self_stress_basis(const Framework& fw, const Configuration& cfg,
                                               double tol = 1e-9);

/// Determinant of the gauged square rigidity matrix divided by the product of
/// rest lengths. Throws PreconditionError when the gauged matrix is not square.
double pure_condition(const Framework& fw, const Configuration& cfg);

/// Gradient of pure_condition over the gauge's free coordinates (adjugate form,
/// finite on the shakiness variety).
Eigen::VectorXd pure_condition_gradient(const Framework& fw, const Configuration& cfg);

/// Relative equilibrium residual |R w| / (|R| |w|); pinned knots carry
/// reactions, so only the rows of unpinned knots enter.
double equilibrium_residual(const Framework& fw, const Configuration& cfg,
                            const Eigen::VectorXd& omega);

/// Solves the overdetermined plate system
///   w_ij (k_i - k_j) + w_ik (k_i - k_k) = g_i, etc.
/// in the least-squares sense for (w_ij, w_ik, w_jk).
struct PlateStressRecovery {
    Eigen::Vector3d omega;
    double residual = 0.0;  ///< absolute residual norm
    int rank = 0;           ///< 3 for a proper triangle
};
PlateStressRecovery recover_plate_stress(const Eigen::VectorXd& ki, const Eigen::VectorXd& kj,
                                         const Eigen::VectorXd& kk,
                                         const std::array<Eigen::VectorXd, 3>& gradient_blocks);

}  // namespace snapkit
