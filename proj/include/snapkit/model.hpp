#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace snapkit {

/// Coordinates of all knots, one row per knot (s x n).
using Configuration = Eigen::MatrixXd;

/// Edge lengths of a realization in edge-list order (b entries).
using EdgeLengthVector = Eigen::VectorXd;

enum class StrainModel { GL, CE };

std::string to_string(StrainModel model);
StrainModel strain_model_from_string(const std::string& name);

struct Knot {
    int id = 0;               ///< 1-based, contiguous
    Eigen::VectorXd coords;   ///< declared coordinates
    bool pinned = false;
};

/// Knot indices are 0-based internally; file ids are index + 1.
struct Edge {
    int i = 0;
    int j = 0;
    double rest_length = 0.0;
};

/// Triangular plate over knots i < j < k. `edges` holds the indices of the
/// edges (i,j), (i,k), (j,k) in that order.
struct Plate {
    int i = 0;
    int j = 0;
    int k = 0;
    std::array<int, 3> edges{};
};

/// An isostatic-candidate framework of bars and triangular plates together with
/// its intrinsic metric. Immutable after construction; the constructor enforces
/// every data-model invariant and throws ValidationError otherwise.
class Framework {
public:
    Framework(int dimension, std::vector<Knot> knots, std::vector<Edge> edges,
              const std::vector<std::array<int, 3>>& plate_knots, double cross_section = 1.0,
              StrainModel strain_model = StrainModel::GL);

    int dimension() const { return dimension_; }
    int num_knots() const { return static_cast<int>(knots_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int num_coords() const { return dimension_ * num_knots(); }

    const std::vector<Knot>& knots() const { return knots_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Plate>& plates() const { return plates_; }

    double cross_section() const { return cross_section_; }
    StrainModel strain_model() const { return strain_model_; }

    /// Sum of all rest lengths, each edge counted once.
    double total_length() const { return total_length_; }

    /// Edges that belong to no plate; these are materialized as bars.
    const std::vector<int>& bar_edges() const { return bar_edges_; }
    bool is_plate_edge(int e) const { return plate_count_[e] > 0; }

    /// Index of edge {a,b} (either order) or -1.
    int edge_index(int a, int b) const;

    EdgeLengthVector rest_lengths() const;
    int num_pinned() const;
    bool has_pins() const { return num_pinned() > 0; }

    /// Configuration assembled from the declared knot coordinates.
    Configuration declared_configuration() const;

    /// Copy with another strain model (re-validated).
    Framework with_strain_model(StrainModel model) const;

    /// Copy with all rest lengths and declared coordinates scaled by c.
    Framework scaled(double c) const;

    /// Copy with edge e removed (plates over it are dropped as well).
    Framework without_edge(int e) const;

    std::vector<std::array<int, 3>> plate_knot_triples() const;

private:
    int dimension_;
    std::vector<Knot> knots_;
    std::vector<Edge> edges_;
    std::vector<Plate> plates_;
    double cross_section_;
    StrainModel strain_model_;
    double total_length_ = 0.0;
    std::vector<int> bar_edges_;
    std::vector<int> plate_count_;
};

/// Throws ValidationError unless cfg has one row per knot, the framework
/// dimension as column count, finite entries and pinned rows equal to the
/// declared coordinates.
void validate_configuration(const Framework& fw, const Configuration& cfg);

EdgeLengthVector edge_lengths(const Framework& fw, const Configuration& cfg);
Eigen::VectorXd squared_edge_lengths(const Framework& fw, const Configuration& cfg);

/// Largest pairwise knot distance of cfg.
double diameter(const Configuration& cfg);

/// Rigid-motion count (n^2 + n)/2.
int rigid_motion_count(int dimension);

struct IsostaticReport {
    bool count_ok = false;
    bool rank_ok = false;
    int edges = 0;
    int required_edges = 0;
    int rank = 0;
    std::vector<std::string> reasons;

    bool passed() const { return count_ok && rank_ok; }
};

/// Count condition plus full rank b of the rigidity matrix at cfg.
IsostaticReport validate_isostatic(const Framework& fw, const Configuration& cfg,
                                   double rank_tol = 1e-9);

/// Quotient by direct isometries. A framework is either pinned enough to kill
/// all rigid motions (free coordinates = unpinned coordinates, canonicalizer is
/// the identity) or unpinned, in which case knot 1 is fixed at the origin, knot 2
/// is restricted to the x-axis and, for n = 3, knot 3 to the xy-plane.
class Gauge {
public:
    explicit Gauge(const Framework& fw);

    bool pinned() const { return pinned_; }
    int dimension() const { return dimension_; }
    int num_free() const { return static_cast<int>(free_.size()); }

    /// Flat indices (knot * n + component) of the free coordinates.
    const std::vector<int>& free_indices() const { return free_; }
    const std::vector<int>& fixed_indices() const { return fixed_; }

    /// Values of the fixed coordinates, one per coordinate of the template.
    const Configuration& anchor() const { return anchor_; }

    Eigen::VectorXd free_values(const Configuration& cfg) const;
    Configuration assemble(const Eigen::VectorXd& free) const;

    /// Maps cfg into the gauge by a direct isometry.
    Configuration canonicalize(const Configuration& cfg) const;

private:
    bool pinned_ = false;
    int dimension_ = 2;
    int num_knots_ = 0;
    std::vector<int> free_;
    std::vector<int> fixed_;
    Configuration anchor_;
};

/// Gauss-Newton projection of cfg onto the rest lengths over the gauge's free
/// coordinates. Returns the polished configuration and its max absolute edge
/// residual.
struct PolishResult {
    Configuration cfg;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    int iterations = 0;
};
PolishResult polish_to_lengths(const Framework& fw, const Configuration& cfg,
                               const EdgeLengthVector& target_lengths, int max_iterations = 50);

}  // namespace snapkit
