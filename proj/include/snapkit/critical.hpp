#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "snapkit/homotopy.hpp"
#include "snapkit/model.hpp"
#include "snapkit/strain.hpp"

namespace snapkit {

enum class Classification { Minimum, Saddle, Degenerate };

std::string to_string(Classification c);

/// Hessian inertia over the free coordinates: (n+, n0, n-).
struct Inertia {
    int positive = 0;
    int zero = 0;
    int negative = 0;
};

struct CriticalPoint {
    Configuration cfg;
    double energy = 0.0;
    double density_value = 0.0;
    Classification classification = Classification::Degenerate;
    Inertia inertia;
    double gradient_residual = 0.0;
};

/// Inertia with eigenvalues |lambda| <= tol * max|lambda| counted as zero.
Inertia hessian_inertia(const Eigen::MatrixXd& hessian, double tol = 1e-8);

/// minimum <=> n0 = n- = 0; degenerate <=> n0 >= 1; saddle otherwise
/// (local maxima included).
Classification classify_inertia(const Inertia& inertia);

/// Evaluates energy, density, gradient residual and Hessian inertia at cfg.
CriticalPoint make_critical_point(const EnergyModel& model, const Configuration& cfg);

/// Gradient tolerance used to accept roots: 1e-9 A / L.
double gradient_tolerance(const Framework& fw);

struct NewtonOptions {
    int starts = 20000;
    std::uint64_t seed = 1;
    double box_scale = 1.0;   ///< half-width of the sampling box in units of the diameter
    int threads = 1;
    int max_iterations = 200;
    double dedup_tol = 1e-8;  ///< relative to the diameter
};

struct NewtonStats {
    int starts = 0;
    int converged = 0;
    int dropped = 0;
};

struct NewtonResult {
    std::vector<CriticalPoint> points;
    NewtonStats stats;
};

/// Multi-start damped Newton on grad U = 0 over the gauge's free coordinates.
/// Starts are uniform in a box around base_cfg; converged roots are classified
/// and deduplicated (in canonical coordinates) in start order.
NewtonResult solve_critical_newton(const Framework& fw, const Configuration& base_cfg,
                                   const NewtonOptions& opts);

struct CriticalHomotopyOptions {
    HomotopyOptions tracking;
    double real_tol = 1e-8;   ///< max |Im| (relative) for a real endpoint
    double dedup_tol = 1e-8;  ///< relative to the diameter
};

struct CriticalHomotopyStats {
    long long tracked_paths = 0;
    int finite = 0;
    int infinite = 0;
    int failed = 0;
    int real_finite = 0;
    int distinct_finite = 0;
    int retracked = 0;
    std::map<int, int> residual_histogram;  ///< floor(log10 residual) -> count
    std::map<int, int> winding_histogram;
};

struct CriticalHomotopyResult {
    std::vector<CriticalPoint> points;            ///< real, distinct, classified
    std::vector<Eigen::VectorXcd> finite_solutions;  ///< affine endpoints of finite paths
    CriticalHomotopyStats stats;
};

/// The gradient system grad U = 0 of a GL framework over the free coordinates,
/// in homogeneous form (each equation is cubic). Variables are divided by a
/// length scale and each equation by a typical magnitude, so affine solutions
/// map back to coordinates through length_scale().
class GradientSystem : public HomogeneousSystem {
public:
    explicit GradientSystem(const Framework& fw);

    int num_variables() const override;
    std::vector<int> degrees() const override;
    void evaluate(const Eigen::VectorXcd& x, Eigen::VectorXcd& f,
                  Eigen::MatrixXcd& jac) const override;

    double length_scale() const { return scale_; }

    /// Unscaled gradient and Jacobian (X in coordinate units).
    void evaluate_raw(const Eigen::VectorXcd& x, Eigen::VectorXcd& f,
                      Eigen::MatrixXcd& jac) const;

private:
    Framework fw_;
    Gauge gauge_;
    Eigen::MatrixXd m_;
    double scale_ = 1.0;
    Eigen::VectorXd row_scale_;
};

/// Total-degree homotopy on grad U = 0 (GL only; throws PreconditionError for CE).
CriticalHomotopyResult solve_critical_homotopy(const Framework& fw,
                                               const CriticalHomotopyOptions& opts);

struct QuotientOptions {
    bool include_degenerate = true;
    double dedup_tol = 1e-8;  ///< relative to the diameter
};

struct QuotientSet {
    std::vector<CriticalPoint> representatives;  ///< canonical gauge, ascending density
    double dedup_tolerance = 0.0;
};

/// Saddles (and degenerate points, if enabled) modulo direct isometries.
QuotientSet build_quotient_set(const std::vector<CriticalPoint>& points, const Framework& fw,
                               const QuotientOptions& opts = {});

}  // namespace snapkit
