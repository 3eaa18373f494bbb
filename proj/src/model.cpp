#include "snapkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

#include "snapkit/errors.hpp"
#include "snapkit/rigidity.hpp"

namespace snapkit {

namespace {

std::string edge_name(const Edge& e) {
    std::ostringstream os;
    os << "edge (" << e.i + 1 << "," << e.j + 1 << ")";
    return os.str();
}

// Affine dimension of a point set, with a relative tolerance.
int affine_span_dimension(const std::vector<Eigen::VectorXd>& pts) {
    if (pts.empty()) return -1;
    if (pts.size() == 1) return 0;
    const int n = static_cast<int>(pts[0].size());
    Eigen::MatrixXd d(n, static_cast<Eigen::Index>(pts.size() - 1));
    double scale = 0.0;
    for (std::size_t p = 1; p < pts.size(); ++p) {
        d.col(static_cast<Eigen::Index>(p - 1)) = pts[p] - pts[0];
        scale = std::max(scale, d.col(static_cast<Eigen::Index>(p - 1)).norm());
    }
    if (scale == 0.0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) > 1e-12 * scale) ++rank;
    return rank;
}

}  // namespace

std::string to_string(StrainModel model) { return model == StrainModel::GL ? "gl" : "ce"; }

StrainModel strain_model_from_string(const std::string& name) {
    if (name == "gl" || name == "GL") return StrainModel::GL;
    if (name == "ce" || name == "CE") return StrainModel::CE;
    throw ValidationError("unknown strain_model '" + name + "' (expected gl or ce)");
}

Framework::Framework(int dimension, std::vector<Knot> knots, std::vector<Edge> edges,
                     const std::vector<std::array<int, 3>>& plate_knots, double cross_section,
                     StrainModel strain_model)
    : dimension_(dimension),
      knots_(std::move(knots)),
      edges_(std::move(edges)),
      cross_section_(cross_section),
      strain_model_(strain_model) {
    if (dimension_ != 2 && dimension_ != 3)
        throw ValidationError("dimension must be 2 or 3, got " + std::to_string(dimension_));
    if (!(cross_section_ > 0.0) || !std::isfinite(cross_section_))
        throw ValidationError("cross_section must be positive");
    if (knots_.empty()) throw ValidationError("framework has no knots");

    std::sort(knots_.begin(), knots_.end(),
              [](const Knot& a, const Knot& b) { return a.id < b.id; });
    for (std::size_t k = 0; k < knots_.size(); ++k) {
        const Knot& knot = knots_[k];
        if (knot.id != static_cast<int>(k) + 1)
            throw ValidationError("knot ids must be unique and contiguous from 1 (offending id " +
                                  std::to_string(knot.id) + ")");
        if (knot.coords.size() != dimension_)
            throw ValidationError("knot " + std::to_string(knot.id) + ": coords length " +
                                  std::to_string(knot.coords.size()) +
                                  " does not match dimension " + std::to_string(dimension_));
        if (!knot.coords.allFinite())
            throw ValidationError("knot " + std::to_string(knot.id) + ": non-finite coordinate");
    }

    const int s = num_knots();
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges_) {
        if (e.i < 0 || e.j < 0 || e.i >= s || e.j >= s)
            throw ValidationError(edge_name(e) + " references an unknown knot");
        if (!(e.i < e.j)) throw ValidationError(edge_name(e) + ": require i < j");
        if (!seen.insert({e.i, e.j}).second) throw ValidationError("duplicate " + edge_name(e));
        if (!(e.rest_length > 0.0) || !std::isfinite(e.rest_length))
            throw ValidationError(edge_name(e) + ": rest_length must be positive");
        total_length_ += e.rest_length;
    }

    plate_count_.assign(edges_.size(), 0);
    std::set<std::array<int, 3>> seen_plates;
    for (auto triple : plate_knots) {
        std::sort(triple.begin(), triple.end());
        if (triple[0] == triple[1] || triple[1] == triple[2])
            throw ValidationError("plate with repeated knots");
        if (!seen_plates.insert(triple).second) throw ValidationError("duplicate plate");
        Plate p;
        p.i = triple[0];
        p.j = triple[1];
        p.k = triple[2];
        const std::array<std::pair<int, int>, 3> pairs{{{p.i, p.j}, {p.i, p.k}, {p.j, p.k}}};
        for (int m = 0; m < 3; ++m) {
            const int e = edge_index(pairs[m].first, pairs[m].second);
            if (e < 0) {
                std::ostringstream os;
                os << "plate (" << p.i + 1 << "," << p.j + 1 << "," << p.k + 1 << "): edge ("
                   << pairs[m].first + 1 << "," << pairs[m].second + 1 << ") not in edge list";
                throw ValidationError(os.str());
            }
            p.edges[m] = e;
        }
        const double a = edges_[p.edges[0]].rest_length;
        const double b = edges_[p.edges[1]].rest_length;
        const double c = edges_[p.edges[2]].rest_length;
        if (!(a < b + c && b < a + c && c < a + b)) {
            std::ostringstream os;
            os << "plate (" << p.i + 1 << "," << p.j + 1 << "," << p.k + 1
               << "): triangle inequality violated";
            throw ValidationError(os.str());
        }
        for (int e : p.edges) {
            if (++plate_count_[e] > 2)
                throw ValidationError(edge_name(edges_[e]) + " belongs to more than two plates");
        }
        plates_.push_back(p);
    }
    if (strain_model_ == StrainModel::CE && !plates_.empty())
        throw ValidationError("CE strain model is defined for bars only (framework has plates)");

    for (int e = 0; e < num_edges(); ++e)
        if (plate_count_[e] == 0) bar_edges_.push_back(e);

    if (!(total_length_ > 0.0)) throw ValidationError("total length must be positive");

    std::vector<Eigen::VectorXd> pinned;
    for (const Knot& k : knots_)
        if (k.pinned) pinned.push_back(k.coords);
    if (!pinned.empty() && affine_span_dimension(pinned) < dimension_ - 1)
        throw ValidationError(
            "pinned knots leave a continuous isometry group; pin none or enough to fix all rigid "
            "motions");
}

int Framework::edge_index(int a, int b) const {
    if (a > b) std::swap(a, b);
    for (int e = 0; e < num_edges(); ++e)
        if (edges_[e].i == a && edges_[e].j == b) return e;
    return -1;
}

EdgeLengthVector Framework::rest_lengths() const {
    EdgeLengthVector l(num_edges());
    for (int e = 0; e < num_edges(); ++e) l(e) = edges_[e].rest_length;
    return l;
}

int Framework::num_pinned() const {
    return static_cast<int>(
        std::count_if(knots_.begin(), knots_.end(), [](const Knot& k) { return k.pinned; }));
}

Configuration Framework::declared_configuration() const {
    Configuration cfg(num_knots(), dimension_);
    for (int k = 0; k < num_knots(); ++k) cfg.row(k) = knots_[k].coords.transpose();
    return cfg;
}

std::vector<std::array<int, 3>> Framework::plate_knot_triples() const {
    std::vector<std::array<int, 3>> out;
    for (const Plate& p : plates_) out.push_back({p.i, p.j, p.k});
    return out;
}

Framework Framework::with_strain_model(StrainModel model) const {
    return Framework(dimension_, knots_, edges_, plate_knot_triples(), cross_section_, model);
}

Framework Framework::scaled(double c) const {
    auto knots = knots_;
    for (auto& k : knots) k.coords *= c;
    auto edges = edges_;
    for (auto& e : edges) e.rest_length *= c;
    return Framework(dimension_, knots, edges, plate_knot_triples(), cross_section_,
                     strain_model_);
}

Framework Framework::without_edge(int e) const {
    auto edges = edges_;
    edges.erase(edges.begin() + e);
    std::vector<std::array<int, 3>> plates;
    for (const Plate& p : plates_)
        if (std::find(p.edges.begin(), p.edges.end(), e) == p.edges.end())
            plates.push_back({p.i, p.j, p.k});
    return Framework(dimension_, knots_, edges, plates, cross_section_, strain_model_);
}

void validate_configuration(const Framework& fw, const Configuration& cfg) {
    if (cfg.rows() != fw.num_knots())
        throw ValidationError("configuration has " + std::to_string(cfg.rows()) +
                              " rows, framework has " + std::to_string(fw.num_knots()) +
                              " knots");
    if (cfg.cols() != fw.dimension())
        throw ValidationError("configuration dimension " + std::to_string(cfg.cols()) +
                              " does not match framework dimension " +
                              std::to_string(fw.dimension()));
    if (!cfg.allFinite()) throw ValidationError("configuration has non-finite coordinates");
    for (int k = 0; k < fw.num_knots(); ++k) {
        const Knot& knot = fw.knots()[k];
        if (knot.pinned && cfg.row(k).transpose() != knot.coords)
            throw ValidationError("configuration moves pinned knot " + std::to_string(knot.id));
    }
}

Eigen::VectorXd squared_edge_lengths(const Framework& fw, const Configuration& cfg) {
    Eigen::VectorXd l(fw.num_edges());
    for (int e = 0; e < fw.num_edges(); ++e) {
        const Edge& edge = fw.edges()[e];
        l(e) = (cfg.row(edge.i) - cfg.row(edge.j)).squaredNorm();
    }
    return l;
}

EdgeLengthVector edge_lengths(const Framework& fw, const Configuration& cfg) {
    return squared_edge_lengths(fw, cfg).cwiseSqrt();
}

double diameter(const Configuration& cfg) {
    double d = 0.0;
    for (Eigen::Index a = 0; a < cfg.rows(); ++a)
        for (Eigen::Index b = a + 1; b < cfg.rows(); ++b)
            d = std::max(d, (cfg.row(a) - cfg.row(b)).norm());
    return d;
}

int rigid_motion_count(int dimension) { return (dimension * dimension + dimension) / 2; }

IsostaticReport validate_isostatic(const Framework& fw, const Configuration& cfg,
                                   double rank_tol) {
    validate_configuration(fw, cfg);
    IsostaticReport report;
    report.edges = fw.num_edges();
    const int n = fw.dimension();
    if (fw.has_pins()) {
        report.required_edges = n * (fw.num_knots() - fw.num_pinned());
    } else {
        report.required_edges = fw.num_knots() * n - rigid_motion_count(n);
    }
    report.count_ok = report.edges == report.required_edges;
    if (!report.count_ok) {
        report.reasons.push_back("count condition failed: b = " + std::to_string(report.edges) +
                                 ", required " + std::to_string(report.required_edges));
    }
    const ShakinessReport shaky = is_shaky(fw, cfg, rank_tol);
    report.rank = shaky.rank;
    report.rank_ok = report.count_ok && shaky.rank == report.edges;
    if (report.count_ok && !report.rank_ok) {
        report.reasons.push_back("rigidity matrix rank " + std::to_string(shaky.rank) +
                                 " is below b = " + std::to_string(report.edges));
    }
    return report;
}

Gauge::Gauge(const Framework& fw)
    : pinned_(fw.has_pins()), dimension_(fw.dimension()), num_knots_(fw.num_knots()) {
    const int n = dimension_;
    anchor_ = Configuration::Zero(num_knots_, n);
    if (pinned_) {
        for (int k = 0; k < num_knots_; ++k) {
            const Knot& knot = fw.knots()[k];
            for (int c = 0; c < n; ++c) {
                if (knot.pinned) {
                    fixed_.push_back(k * n + c);
                    anchor_(k, c) = knot.coords(c);
                } else {
                    free_.push_back(k * n + c);
                }
            }
        }
        return;
    }
    if (num_knots_ < 3) throw ValidationError("gauge needs at least 3 knots");
    // knot 1: all fixed; knot 2: only x free; knot 3 (n = 3): z fixed.
    for (int k = 0; k < num_knots_; ++k) {
        for (int c = 0; c < n; ++c) {
            bool fixed = (k == 0) || (k == 1 && c > 0) || (n == 3 && k == 2 && c == 2);
            (fixed ? fixed_ : free_).push_back(k * n + c);
        }
    }
}

Eigen::VectorXd Gauge::free_values(const Configuration& cfg) const {
    Eigen::VectorXd x(num_free());
    for (int m = 0; m < num_free(); ++m)
        x(m) = cfg(free_[m] / dimension_, free_[m] % dimension_);
    return x;
}

Configuration Gauge::assemble(const Eigen::VectorXd& free) const {
    Configuration cfg = anchor_;
    for (int m = 0; m < num_free(); ++m)
        cfg(free_[m] / dimension_, free_[m] % dimension_) = free(m);
    return cfg;
}

Configuration Gauge::canonicalize(const Configuration& cfg) const {
    if (pinned_) return cfg;
    const int n = dimension_;
    Configuration out = cfg.rowwise() - cfg.row(0);
    // Rotation taking knot 2 onto the positive x-axis.
    Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd u = out.row(1).transpose();
    const double un = u.norm();
    if (un > 0.0) {
        const Eigen::VectorXd e1 = u / un;
        if (n == 2) {
            rot << e1(0), e1(1), -e1(1), e1(0);
        } else {
            // Complete e1 to a right-handed frame using knot 3.
            Eigen::Vector3d a = e1;
            Eigen::Vector3d w = out.row(2).transpose();
            Eigen::Vector3d b = w - w.dot(a) * a;
            if (b.norm() <= 1e-14 * std::max(1.0, w.norm())) {
                // knot 3 on the axis: any completion works
                b = std::abs(a(0)) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
                b -= b.dot(a) * a;
            }
            b.normalize();
            const Eigen::Vector3d c = a.cross(b);
            rot.row(0) = a.transpose();
            rot.row(1) = b.transpose();
            rot.row(2) = c.transpose();
        }
    }
    out = out * rot.transpose();
    // Exact zeros on the gauge-fixed coordinates.
    for (int idx : fixed_) out(idx / n, idx % n) = 0.0;
    return out;
}

PolishResult polish_to_lengths(const Framework& fw, const Configuration& cfg,
                               const EdgeLengthVector& target_lengths, int max_iterations) {
    // Minimum-norm Gauss-Newton over all unpinned coordinates; the caller's frame
    // is kept because rigid motions lie in the step's orthogonal complement.
    const int n = fw.dimension();
    std::vector<int> vars;
    for (int k = 0; k < fw.num_knots(); ++k)
        if (!fw.knots()[k].pinned)
            for (int c = 0; c < n; ++c) vars.push_back(k * n + c);

    PolishResult res;
    res.cfg = cfg;
    res.initial_residual = (edge_lengths(fw, cfg) - target_lengths).cwiseAbs().maxCoeff();
    const Eigen::VectorXd target_sq = target_lengths.array().square();
    for (int it = 0; it < max_iterations; ++it) {
        const Eigen::VectorXd phi = squared_edge_lengths(fw, res.cfg) - target_sq;
        if (phi.cwiseAbs().maxCoeff() <= 1e-15 * target_sq.maxCoeff()) break;
        const Eigen::MatrixXd r = rigidity_matrix(fw, res.cfg);
        Eigen::MatrixXd jac(fw.num_edges(), static_cast<Eigen::Index>(vars.size()));
        for (std::size_t m = 0; m < vars.size(); ++m)
            jac.col(static_cast<Eigen::Index>(m)) = 2.0 * r.row(vars[m]).transpose();
        const Eigen::VectorXd dx = jac.completeOrthogonalDecomposition().solve(-phi);
        for (std::size_t m = 0; m < vars.size(); ++m)
            res.cfg(vars[m] / n, vars[m] % n) += dx(static_cast<Eigen::Index>(m));
        res.iterations = it + 1;
        if (dx.norm() <= 1e-15 * (1.0 + res.cfg.norm())) break;
    }
    res.final_residual = (edge_lengths(fw, res.cfg) - target_lengths).cwiseAbs().maxCoeff();
    return res;
}

}  // namespace snapkit
