#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snapkit/model.hpp"

namespace snapkit {

/// Lifted-linear length path: L_t,e^2 = (1 - t) L_start,e^2 + t L_target,e^2.
struct LengthPath {
    EdgeLengthVector start;
    EdgeLengthVector target;

    EdgeLengthVector at(double t) const;
    Eigen::VectorXd squared_at(double t) const;
};

/// Throws ValidationError for t outside [0, 1] or mismatched sizes.
EdgeLengthVector interpolate_lengths(const LengthPath& path, double t);

struct TrackOptions {
    double initial_step = 0.01;
    double max_step = 0.05;
    double min_step = 1e-12;
    double residual_tol = 1e-9;     ///< max |Phi_e| relative to L_e^2 at accepted steps
    int corrector_iterations = 8;
    double endgame_start = 0.5;     ///< t at which t_m = 1 - 2^-m sampling takes over
    int endgame_levels = 20;
    double extrapolation_tol = 1e-8;
};

struct PathSample {
    double t = 0.0;
    Configuration cfg;
};

struct PathCertificate {
    bool success = false;
    std::vector<PathSample> samples;
    Configuration endpoint;
    double endpoint_gap = 0.0;               ///< |Phi| at the extrapolated endpoint (max abs)
    double extrapolation_delta = 0.0;        ///< last successive extrapolant difference
    double min_pure_condition_magnitude_before_end = 0.0;
    double max_residual = 0.0;               ///< largest accepted-step residual
    std::string failure;
};

/// Continuation of knot configurations along the length path, over the
/// gauge's free coordinates, with a Richardson endgame toward t = 1.
PathCertificate track_deformation(const Framework& fw, const Configuration& start_cfg,
                                  const LengthPath& path, const TrackOptions& opts = {});

/// True iff cert succeeded and its canonical endpoint lies within tol of the
/// canonical target (tol <= 0 selects 1e-6 times the target diameter).
bool check_endpoint(const Framework& fw, const PathCertificate& cert,
                    const Configuration& target_cfg, double tol = 0.0);

struct ElementTrend {
    int element = 0;        ///< index into element_energies order
    bool bar = true;
    double a = 0.0, b = 0.0, c = 0.0;  ///< E(t) = a t^2 + b t + c
    double vertex = 0.0;    ///< argmin of the parabola (-inf for a <= 0 and b >= 0)
    bool monotone = true;
};

struct MonotonicityReport {
    bool monotone = true;
    double max_fit_error = 0.0;  ///< largest prediction error of the quadratic on extra samples
    std::vector<ElementTrend> elements;
    ElementTrend total;
};

/// Fits each element energy along the path by the quadratic through t = 0,
/// 1/2, 1 and checks it on `samples` evenly spaced points.
MonotonicityReport verify_monotonicity(const Framework& fw, const LengthPath& path,
                                       int samples = 9);

/// Writes t, coordinates and element energies of every sample as CSV.
void write_path_csv(const std::filesystem::path& file, const Framework& fw,
                    const PathCertificate& cert);

}  // namespace snapkit
