#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "snapkit/model.hpp"

namespace snapkit {

/// Edge lengths of a triangle in the order (ij, ik, jk).
using TriangleLengths = std::array<double, 3>;

struct TrianglePoints {
    Eigen::Vector2d i;
    Eigen::Vector2d j;
    Eigen::Vector2d k;
};

/// Places K_i at the origin and K_j on the positive x-axis; K_k takes the
/// positive y-branch. Throws ValidationError unless the strict triangle
/// inequalities hold.
TrianglePoints local_triangle_coords(double lij, double lik, double ljk);

/// The 2x2 map A with A(p_j - p_i) = p'_j - p'_i and A(p_k - p_i) = p'_k - p'_i.
Eigen::Matrix2d plate_affine_matrix(const TriangleLengths& rest, const TriangleLengths& deformed);

/// Green-Lagrange strain (eps_x, eps_y, 2 gamma_xy) of 1/2 (A^T A - I).
Eigen::Vector3d gl_strain(const Eigen::Matrix2d& a);

/// Plane-stress constitutive matrix with E = 1 and Poisson ratio 1/2.
const Eigen::Matrix3d& constitutive_matrix();

/// Plate volume A (L_ij + L_ik + L_jk).
double plate_volume(const TriangleLengths& rest, double area);

/// GL plate energy through local coordinates and the affine map.
double plate_energy(const TriangleLengths& rest, const TriangleLengths& deformed, double area);

double bar_energy_gl(double rest, double deformed, double area);
double bar_energy_ce(double rest, double deformed, double area);

/// Affine map from lifted squared lengths (1, l_ij^2, l_ik^2, l_jk^2) to the
/// strain vector. Its coefficients depend on the rest triangle only; the map is
/// finite for any deformed lengths, including collinear ones.
Eigen::Matrix<double, 3, 4> plate_strain_map(const TriangleLengths& rest);

/// 4x4 symmetric block of the energy matrix contributed by one plate.
Eigen::Matrix4d plate_energy_block(const TriangleLengths& rest, double area);

/// Plate energy from squared deformed lengths via the rational closed form.
double plate_energy_closed_form(const TriangleLengths& rest,
                                const Eigen::Vector3d& deformed_squared, double area);

/// Lifted lengths (1, L_1^2, ..., L_b^2).
Eigen::VectorXd lifted_lengths(const EdgeLengthVector& lengths);

/// Symmetric (b+1)x(b+1) matrix with U = Lhat^T M Lhat for the GL model.
struct EnergyMatrix {
    Eigen::MatrixXd m;

    double evaluate(const Eigen::VectorXd& lifted) const { return lifted.dot(m * lifted); }
};

/// Throws PreconditionError for the CE model.
EnergyMatrix energy_matrix(const Framework& fw);

double total_energy(const Framework& fw, const Configuration& cfg);

/// Length-vector form. Throws ValidationError when a plate's deformed lengths
/// violate the (non-strict) triangle inequality.
double total_energy_of_lengths(const Framework& fw, const EdgeLengthVector& lengths);

/// Direct summation with plates evaluated through local coordinates (strict
/// triangle inequalities required).
double total_energy_by_elements(const Framework& fw, const EdgeLengthVector& lengths);

struct ElementEnergy {
    enum class Kind { Bar, Plate };
    Kind kind = Kind::Bar;
    int index = 0;  ///< edge index for bars, plate index for plates
    double energy = 0.0;
};

std::vector<ElementEnergy> element_energies(const Framework& fw, const EdgeLengthVector& lengths);

double density(const Framework& fw, const Configuration& cfg);
double density_of_lengths(const Framework& fw, const EdgeLengthVector& lengths);
double pseudometric(const Framework& fw, const EdgeLengthVector& a, const EdgeLengthVector& b);

/// Energy of a framework as a function of knot coordinates, with exact first
/// and second derivatives. Caches the energy matrix and the gauge.
class EnergyModel {
public:
    explicit EnergyModel(const Framework& fw);

    const Framework& framework() const { return fw_; }
    const Gauge& gauge() const { return gauge_; }
    const EnergyMatrix& matrix() const { return matrix_; }

    double energy(const Configuration& cfg) const;
    double density(const Configuration& cfg) const;

    /// Per-edge stress w with grad_i U = sum_j w_ij (k_i - k_j).
    Eigen::VectorXd stresses(const Configuration& cfg) const;

    /// Derivatives over all s*n coordinates (flat index knot * n + c).
    Eigen::VectorXd gradient_full(const Configuration& cfg) const;
    Eigen::MatrixXd hessian_full(const Configuration& cfg) const;

    /// Derivatives over the gauge's free coordinates.
    Eigen::VectorXd gradient(const Configuration& cfg) const;
    Eigen::MatrixXd hessian(const Configuration& cfg) const;

    Eigen::VectorXd gradient_at(const Eigen::VectorXd& free) const;
    Eigen::MatrixXd hessian_at(const Eigen::VectorXd& free) const;

private:
    Framework fw_;
    Gauge gauge_;
    EnergyMatrix matrix_;
};

Eigen::VectorXd energy_gradient(const Framework& fw, const Configuration& cfg);
Eigen::MatrixXd energy_hessian(const Framework& fw, const Configuration& cfg);

/// Gradient blocks of a single plate's energy with respect to its knots
/// (k_i, k_j, k_k), each of framework dimension.
std::array<Eigen::VectorXd, 3> plate_energy_gradient(const Framework& fw, int plate,
                                                     const Configuration& cfg);

}  // namespace snapkit
