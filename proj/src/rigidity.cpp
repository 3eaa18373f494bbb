#include "snapkit/rigidity.hpp"

#include <cmath>

#include "snapkit/errors.hpp"

namespace snapkit {

Eigen::MatrixXd rigidity_matrix(const Framework& fw, const Configuration& cfg) {
    const int n = fw.dimension();
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(fw.num_coords(), fw.num_edges());
    for (int e = 0; e < fw.num_edges(); ++e) {
        const Edge& edge = fw.edges()[e];
        const Eigen::RowVectorXd d = cfg.row(edge.i) - cfg.row(edge.j);
        r.block(edge.i * n, e, n, 1) = d.transpose();
        r.block(edge.j * n, e, n, 1) = -d.transpose();
    }
    return r;
}

Eigen::MatrixXd rigidity_matrix_free(const Framework& fw, const Gauge& gauge,
                                     const Configuration& cfg) {
    const Eigen::MatrixXd full = rigidity_matrix(fw, cfg);
    Eigen::MatrixXd r(gauge.num_free(), fw.num_edges());
    for (int m = 0; m < gauge.num_free(); ++m) r.row(m) = full.row(gauge.free_indices()[m]);
    return r;
}

namespace {

// Matrix whose rank decides shakiness, and the rank it must reach.
std::pair<Eigen::MatrixXd, int> rank_matrix(const Framework& fw, const Configuration& cfg) {
    if (fw.has_pins()) {
        const Gauge gauge(fw);
        return {rigidity_matrix_free(fw, gauge, cfg), fw.num_edges()};
    }
    const int n = fw.dimension();
    const int r = fw.num_knots() * n - rigid_motion_count(n);
    return {rigidity_matrix(fw, cfg), std::min(r, fw.num_edges())};
}

}  // namespace

ShakinessReport is_shaky(const Framework& fw, const Configuration& cfg, double tol) {
    validate_configuration(fw, cfg);
    auto [mat, expected] = rank_matrix(fw, cfg);
    ShakinessReport rep;
    rep.expected_rank = expected;
    if (mat.size() == 0) {
        rep.shaky = expected > 0;
        return rep;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
    rep.singular_values = svd.singularValues();
    rep.sigma_max = rep.singular_values.size() ? rep.singular_values(0) : 0.0;
    rep.threshold = tol * rep.sigma_max;
    for (Eigen::Index k = 0; k < rep.singular_values.size(); ++k)
        if (rep.singular_values(k) > rep.threshold) ++rep.rank;
    if (expected > 0 && expected <= rep.singular_values.size())
        rep.sigma_min = rep.singular_values(expected - 1);
    rep.shaky = rep.rank < expected;
    return rep;
}

std::vector<Eigen::VectorXd> self_stress_basis(const Framework& fw, const Configuration& cfg,
                                               double tol) {
    auto [mat, expected] = rank_matrix(fw, cfg);
    (void)expected;
    std::vector<Eigen::VectorXd> basis;
    const int b = fw.num_edges();
    if (b == 0) return basis;
    // Pad to at least b rows so the SVD exposes the full right-singular basis.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(mat.rows(), b), b);
    a.topRows(mat.rows()) = mat;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double thresh = tol * (sv.size() ? sv(0) : 0.0);
    for (int k = 0; k < b; ++k) {
        if (sv(k) <= thresh) {
            Eigen::VectorXd w = svd.matrixV().col(k);
            // Deterministic sign: largest-magnitude entry positive.
            Eigen::Index imax = 0;
            w.cwiseAbs().maxCoeff(&imax);
            if (w(imax) < 0) w = -w;
            basis.push_back(w);
        }
    }
    return basis;
}

namespace {

// Configurations already on the gauge slice are used as they are.
Configuration gauged(const Gauge& gauge, const Configuration& cfg) {
    const int n = gauge.dimension();
    for (int idx : gauge.fixed_indices())
        if (cfg(idx / n, idx % n) != gauge.anchor()(idx / n, idx % n))
            return gauge.canonicalize(cfg);
    return cfg;
}

double rest_length_product(const Framework& fw) {
    double p = 1.0;
    for (const Edge& e : fw.edges()) p *= e.rest_length;
    return p;
}

Eigen::MatrixXd gauged_square(const Framework& fw, const Gauge& gauge, const Configuration& cfg) {
    Eigen::MatrixXd r = rigidity_matrix_free(fw, gauge, cfg);
    if (r.rows() != r.cols())
        throw PreconditionError("gauged rigidity matrix is " + std::to_string(r.rows()) + "x" +
                                std::to_string(r.cols()) + "; framework is not isostatic");
    return r;
}

}  // namespace

double pure_condition(const Framework& fw, const Configuration& cfg) {
    const Gauge gauge(fw);
    const Eigen::MatrixXd r = gauged_square(fw, gauge, gauged(gauge, cfg));
    return r.fullPivLu().determinant() / rest_length_product(fw);
}

Eigen::VectorXd pure_condition_gradient(const Framework& fw, const Configuration& cfg) {
    const Gauge gauge(fw);
    const Configuration canon = gauged(gauge, cfg);
    const Eigen::MatrixXd r = gauged_square(fw, gauge, canon);
    const int b = static_cast<int>(r.rows());
    // adj(R) = det(U) det(V) V diag(prod_{j != i} s_j) U^T
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::VectorXd cof(b);
    for (int i = 0; i < b; ++i) {
        double p = 1.0;
        for (int j = 0; j < b; ++j)
            if (j != i) p *= s(j);
        cof(i) = p;
    }
    const double sign = svd.matrixU().determinant() * svd.matrixV().determinant();
    const Eigen::MatrixXd adj =
        sign * svd.matrixV() * cof.asDiagonal() * svd.matrixU().transpose();

    // Row position of each free coordinate, -1 if fixed.
    const int n = fw.dimension();
    std::vector<int> row_of(fw.num_coords(), -1);
    for (int m = 0; m < gauge.num_free(); ++m) row_of[gauge.free_indices()[m]] = m;

    // d det / d x = tr(adj dR/dx); R[(a,c), e] = (k_a - k_other)_c for e incident to a.
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(gauge.num_free());
    for (int e = 0; e < fw.num_edges(); ++e) {
        const Edge& edge = fw.edges()[e];
        for (int c = 0; c < n; ++c) {
            const int ri = row_of[edge.i * n + c];
            const int rj = row_of[edge.j * n + c];
            // derivative wrt k_{i,c}: +1 at row (i,c), -1 at row (j,c)
            const double di = (ri >= 0 ? adj(e, ri) : 0.0) - (rj >= 0 ? adj(e, rj) : 0.0);
            if (ri >= 0) grad(ri) += di;
            if (rj >= 0) grad(rj) -= di;
        }
    }
    return grad / rest_length_product(fw);
}

double equilibrium_residual(const Framework& fw, const Configuration& cfg,
                            const Eigen::VectorXd& omega) {
    const Gauge gauge(fw);
    const Eigen::MatrixXd r =
        gauge.pinned() ? rigidity_matrix_free(fw, gauge, cfg) : rigidity_matrix(fw, cfg);
    const double denom = r.norm() * omega.norm();
    if (denom == 0.0) return 0.0;
    return (r * omega).norm() / denom;
}

PlateStressRecovery recover_plate_stress(const Eigen::VectorXd& ki, const Eigen::VectorXd& kj,
                                         const Eigen::VectorXd& kk,
                                         const std::array<Eigen::VectorXd, 3>& gradient_blocks) {
    const int n = static_cast<int>(ki.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * n, 3);
    Eigen::VectorXd rhs(3 * n);
    a.block(0, 0, n, 1) = ki - kj;
    a.block(0, 1, n, 1) = ki - kk;
    a.block(n, 0, n, 1) = kj - ki;
    a.block(n, 2, n, 1) = kj - kk;
    a.block(2 * n, 1, n, 1) = kk - ki;
    a.block(2 * n, 2, n, 1) = kk - kj;
    rhs << gradient_blocks[0], gradient_blocks[1], gradient_blocks[2];
    const auto cod = a.completeOrthogonalDecomposition();
    PlateStressRecovery out;
    out.omega = cod.solve(rhs);
    out.residual = (a * out.omega - rhs).norm();
    out.rank = static_cast<int>(cod.rank());
    return out;
}

}  // namespace snapkit
