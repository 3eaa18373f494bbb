#include "snapkit/strain.hpp"

#include <cmath>

#include "snapkit/detail/gl_kernel.hpp"
#include "snapkit/errors.hpp"

namespace snapkit {

namespace {

bool strict_triangle(double a, double b, double c) {
    return a > 0 && b > 0 && c > 0 && a < b + c && b < a + c && c < a + b;
}

TriangleLengths plate_rest(const Framework& fw, const Plate& p) {
    return {fw.edges()[p.edges[0]].rest_length, fw.edges()[p.edges[1]].rest_length,
            fw.edges()[p.edges[2]].rest_length};
}

Eigen::Matrix2d edge_frame(const TrianglePoints& t) {
    Eigen::Matrix2d p;
    p.col(0) = t.j - t.i;
    p.col(1) = t.k - t.i;
    return p;
}

// GL bar block on lifted indices {0, e}: A (l^2 - L^2)^2 / (8 L^3).
Eigen::Matrix2d bar_block(double rest, double area) {
    Eigen::Matrix2d blk;
    blk << area * rest / 8.0, -area / (8.0 * rest), -area / (8.0 * rest),
        area / (8.0 * rest * rest * rest);
    return blk;
}

}  // namespace

TrianglePoints local_triangle_coords(double lij, double lik, double ljk) {
    if (!strict_triangle(lij, lik, ljk))
        throw ValidationError("triangle inequality violated");
    const double x = (lij * lij + lik * lik - ljk * ljk) / (2.0 * lij);
    const double h = std::sqrt((lij + lik + ljk) * (lij - lik + ljk) * (lij + lik - ljk) *
                               (lik + ljk - lij)) /
                     (2.0 * lij);
    return {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(lij, 0.0), Eigen::Vector2d(x, h)};
}

Eigen::Matrix2d plate_affine_matrix(const TriangleLengths& rest, const TriangleLengths& deformed) {
    const Eigen::Matrix2d p = edge_frame(local_triangle_coords(rest[0], rest[1], rest[2]));
    const Eigen::Matrix2d q =
        edge_frame(local_triangle_coords(deformed[0], deformed[1], deformed[2]));
    return q * p.inverse();
}

Eigen::Vector3d gl_strain(const Eigen::Matrix2d& a) {
    const Eigen::Matrix2d e = 0.5 * (a.transpose() * a - Eigen::Matrix2d::Identity());
    return {e(0, 0), e(1, 1), 2.0 * e(0, 1)};
}

const Eigen::Matrix3d& constitutive_matrix() {
    static const Eigen::Matrix3d d = [] {
        const double nu = 0.5;
        const double e = 1.0;
        Eigen::Matrix3d m;
        m << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, (1.0 - nu) / 2.0;
        return Eigen::Matrix3d(e / (1.0 - nu * nu) * m);
    }();
    return d;
}

double plate_volume(const TriangleLengths& rest, double area) {
    return area * (rest[0] + rest[1] + rest[2]);
}

double plate_energy(const TriangleLengths& rest, const TriangleLengths& deformed, double area) {
    const Eigen::Vector3d e = gl_strain(plate_affine_matrix(rest, deformed));
    return plate_volume(rest, area) * 0.5 * e.dot(constitutive_matrix() * e);
}

double bar_energy_gl(double rest, double deformed, double area) {
    const double d = deformed * deformed - rest * rest;
    return area * d * d / (8.0 * rest * rest * rest);
}

double bar_energy_ce(double rest, double deformed, double area) {
    const double d = deformed - rest;
    return area * d * d / (2.0 * rest);
}

Eigen::Matrix<double, 3, 4> plate_strain_map(const TriangleLengths& rest) {
    // Metric tensor C = A^T A is fixed by u^T C u = l_ij^2, v^T C v = l_ik^2,
    // (v-u)^T C (v-u) = l_jk^2 with u = (a,0), v = (c,d) the rest edge vectors.
    const TrianglePoints t = local_triangle_coords(rest[0], rest[1], rest[2]);
    const double a = t.j(0);
    const double c = t.k(0);
    const double d = t.k(1);
    using Row = Eigen::Matrix<double, 1, 4>;
    const Row c11 = Row(0.0, 1.0, 0.0, 0.0) / (a * a);
    const Row c12 = (Row(0.0, 0.0, 1.0, -1.0) - (2.0 * a * c - a * a) * c11) / (2.0 * a * d);
    const Row c22 = (Row(0.0, 0.0, 1.0, 0.0) - c * c * c11 - 2.0 * c * d * c12) / (d * d);
    const Row one(1.0, 0.0, 0.0, 0.0);
    Eigen::Matrix<double, 3, 4> map;
    map.row(0) = 0.5 * (c11 - one);
    map.row(1) = 0.5 * (c22 - one);
    map.row(2) = c12;
    return map;
}

Eigen::Matrix4d plate_energy_block(const TriangleLengths& rest, double area) {
    const Eigen::Matrix<double, 3, 4> t = plate_strain_map(rest);
    const Eigen::Matrix4d blk = 0.5 * plate_volume(rest, area) * t.transpose() *
                                constitutive_matrix() * t;
    return 0.5 * (blk + blk.transpose());
}

double plate_energy_closed_form(const TriangleLengths& rest,
                                const Eigen::Vector3d& deformed_squared, double area) {
    const Eigen::Vector3d e = plate_strain_map(rest) *
                              Eigen::Vector4d(1.0, deformed_squared(0), deformed_squared(1),
                                              deformed_squared(2));
    return plate_volume(rest, area) * 0.5 * e.dot(constitutive_matrix() * e);
}

Eigen::VectorXd lifted_lengths(const EdgeLengthVector& lengths) {
    Eigen::VectorXd l(lengths.size() + 1);
    l(0) = 1.0;
    l.tail(lengths.size()) = lengths.array().square();
    return l;
}

EnergyMatrix energy_matrix(const Framework& fw) {
    if (fw.strain_model() != StrainModel::GL)
        throw PreconditionError("energy matrix requires the GL strain model");
    const int b = fw.num_edges();
    const double area = fw.cross_section();
    EnergyMatrix em{Eigen::MatrixXd::Zero(b + 1, b + 1)};
    for (int e : fw.bar_edges()) {
        const Eigen::Matrix2d blk = bar_block(fw.edges()[e].rest_length, area);
        const int idx[2] = {0, e + 1};
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) em.m(idx[r], idx[c]) += blk(r, c);
    }
    for (const Plate& p : fw.plates()) {
        const Eigen::Matrix4d blk = plate_energy_block(plate_rest(fw, p), area);
        const int idx[4] = {0, p.edges[0] + 1, p.edges[1] + 1, p.edges[2] + 1};
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) em.m(idx[r], idx[c]) += blk(r, c);
    }
    return em;
}

std::vector<ElementEnergy> element_energies(const Framework& fw, const EdgeLengthVector& lengths) {
    if (lengths.size() != fw.num_edges())
        throw ValidationError("length vector size does not match edge count");
    const double area = fw.cross_section();
    std::vector<ElementEnergy> out;
    for (int e : fw.bar_edges()) {
        const double rest = fw.edges()[e].rest_length;
        const double u = fw.strain_model() == StrainModel::GL
                             ? bar_energy_gl(rest, lengths(e), area)
                             : bar_energy_ce(rest, lengths(e), area);
        out.push_back({ElementEnergy::Kind::Bar, e, u});
    }
    for (int p = 0; p < static_cast<int>(fw.plates().size()); ++p) {
        const Plate& plate = fw.plates()[p];
        const double a = lengths(plate.edges[0]);
        const double b = lengths(plate.edges[1]);
        const double c = lengths(plate.edges[2]);
        const double slack = 1e-12 * (a + b + c);
        if (a > b + c + slack || b > a + c + slack || c > a + b + slack)
            throw ValidationError("infeasible plate lengths: triangle inequality violated");
        const Eigen::Vector3d sq(a * a, b * b, c * c);
        out.push_back({ElementEnergy::Kind::Plate, p,
                       plate_energy_closed_form(plate_rest(fw, plate), sq, area)});
    }
    return out;
}

double total_energy_of_lengths(const Framework& fw, const EdgeLengthVector& lengths) {
    double u = 0.0;
    for (const ElementEnergy& el : element_energies(fw, lengths)) u += el.energy;
    return u;
}

double total_energy_by_elements(const Framework& fw, const EdgeLengthVector& lengths) {
    const double area = fw.cross_section();
    double u = 0.0;
    for (int e : fw.bar_edges()) {
        const double rest = fw.edges()[e].rest_length;
        u += fw.strain_model() == StrainModel::GL ? bar_energy_gl(rest, lengths(e), area)
                                                  : bar_energy_ce(rest, lengths(e), area);
    }
    for (const Plate& p : fw.plates()) {
        u += plate_energy(plate_rest(fw, p),
                          {lengths(p.edges[0]), lengths(p.edges[1]), lengths(p.edges[2])}, area);
    }
    return u;
}

double total_energy(const Framework& fw, const Configuration& cfg) {
    if (fw.strain_model() == StrainModel::GL)
        return energy_matrix(fw).evaluate(lifted_lengths(edge_lengths(fw, cfg)));
    return total_energy_of_lengths(fw, edge_lengths(fw, cfg));
}

double density_of_lengths(const Framework& fw, const EdgeLengthVector& lengths) {
    return total_energy_of_lengths(fw, lengths) / (fw.cross_section() * fw.total_length());
}

double density(const Framework& fw, const Configuration& cfg) {
    return total_energy(fw, cfg) / (fw.cross_section() * fw.total_length());
}

double pseudometric(const Framework& fw, const EdgeLengthVector& a, const EdgeLengthVector& b) {
    return std::abs(density_of_lengths(fw, a) - density_of_lengths(fw, b));
}

EnergyModel::EnergyModel(const Framework& fw) : fw_(fw), gauge_(fw) {
    if (fw_.strain_model() == StrainModel::GL) matrix_ = energy_matrix(fw_);
}

double EnergyModel::energy(const Configuration& cfg) const {
    if (fw_.strain_model() == StrainModel::GL) {
        Eigen::VectorXd lifted(fw_.num_edges() + 1);
        lifted(0) = 1.0;
        lifted.tail(fw_.num_edges()) = squared_edge_lengths(fw_, cfg);
        return matrix_.evaluate(lifted);
    }
    return total_energy_of_lengths(fw_, edge_lengths(fw_, cfg));
}

double EnergyModel::density(const Configuration& cfg) const {
    return energy(cfg) / (fw_.cross_section() * fw_.total_length());
}

Eigen::VectorXd EnergyModel::stresses(const Configuration& cfg) const {
    if (fw_.strain_model() == StrainModel::GL) {
        return detail::evaluate_gl<double>(matrix_.m, fw_.edges(), fw_.dimension(), cfg, 1.0,
                                           false)
            .stress;
    }
    const Eigen::VectorXd d = edge_lengths(fw_, cfg);
    Eigen::VectorXd w(fw_.num_edges());
    for (int e = 0; e < fw_.num_edges(); ++e) {
        const double rest = fw_.edges()[e].rest_length;
        w(e) = fw_.cross_section() * (d(e) - rest) / (rest * d(e));
    }
    return w;
}

Eigen::VectorXd EnergyModel::gradient_full(const Configuration& cfg) const {
    if (fw_.strain_model() == StrainModel::GL) {
        return detail::evaluate_gl<double>(matrix_.m, fw_.edges(), fw_.dimension(), cfg, 1.0,
                                           false)
            .gradient;
    }
    const int n = fw_.dimension();
    const Eigen::VectorXd w = stresses(cfg);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(fw_.num_coords());
    for (int e = 0; e < fw_.num_edges(); ++e) {
        const Edge& edge = fw_.edges()[e];
        const Eigen::RowVectorXd f = w(e) * (cfg.row(edge.i) - cfg.row(edge.j));
        g.segment(edge.i * n, n) += f.transpose();
        g.segment(edge.j * n, n) -= f.transpose();
    }
    return g;
}

Eigen::MatrixXd EnergyModel::hessian_full(const Configuration& cfg) const {
    if (fw_.strain_model() == StrainModel::GL) {
        return detail::evaluate_gl<double>(matrix_.m, fw_.edges(), fw_.dimension(), cfg, 1.0,
                                           true)
            .hessian;
    }
    // CE bar: grad = (A/L)(1 - L/d) x with x = k_i - k_j, d = |x|.
    const int n = fw_.dimension();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(fw_.num_coords(), fw_.num_coords());
    for (const Edge& edge : fw_.edges()) {
        const Eigen::VectorXd x = (cfg.row(edge.i) - cfg.row(edge.j)).transpose();
        const double d = x.norm();
        const double rest = edge.rest_length;
        const double c = fw_.cross_section() / rest;
        const Eigen::MatrixXd blk =
            c * ((1.0 - rest / d) * Eigen::MatrixXd::Identity(n, n) +
                 (rest / (d * d * d)) * x * x.transpose());
        h.block(edge.i * n, edge.i * n, n, n) += blk;
        h.block(edge.j * n, edge.j * n, n, n) += blk;
        h.block(edge.i * n, edge.j * n, n, n) -= blk;
        h.block(edge.j * n, edge.i * n, n, n) -= blk;
    }
    return h;
}

Eigen::VectorXd EnergyModel::gradient(const Configuration& cfg) const {
    const Eigen::VectorXd full = gradient_full(cfg);
    const auto& idx = gauge_.free_indices();
    Eigen::VectorXd g(gauge_.num_free());
    for (int m = 0; m < gauge_.num_free(); ++m) g(m) = full(idx[m]);
    return g;
}

Eigen::MatrixXd EnergyModel::hessian(const Configuration& cfg) const {
    const Eigen::MatrixXd full = hessian_full(cfg);
    const auto& idx = gauge_.free_indices();
    const int f = gauge_.num_free();
    Eigen::MatrixXd h(f, f);
    for (int r = 0; r < f; ++r)
        for (int c = 0; c < f; ++c) h(r, c) = full(idx[r], idx[c]);
    return h;
}

Eigen::VectorXd EnergyModel::gradient_at(const Eigen::VectorXd& free) const {
    return gradient(gauge_.assemble(free));
}

Eigen::MatrixXd EnergyModel::hessian_at(const Eigen::VectorXd& free) const {
    return hessian(gauge_.assemble(free));
}

Eigen::VectorXd energy_gradient(const Framework& fw, const Configuration& cfg) {
    return EnergyModel(fw).gradient(cfg);
}

Eigen::MatrixXd energy_hessian(const Framework& fw, const Configuration& cfg) {
    return EnergyModel(fw).hessian(cfg);
}

std::array<Eigen::VectorXd, 3> plate_energy_gradient(const Framework& fw, int plate,
                                                     const Configuration& cfg) {
    const Plate& p = fw.plates().at(plate);
    const Eigen::Matrix4d blk = plate_energy_block(plate_rest(fw, p), fw.cross_section());
    const Eigen::RowVectorXd ki = cfg.row(p.i);
    const Eigen::RowVectorXd kj = cfg.row(p.j);
    const Eigen::RowVectorXd kk = cfg.row(p.k);
    const Eigen::Vector4d lifted(1.0, (ki - kj).squaredNorm(), (ki - kk).squaredNorm(),
                                 (kj - kk).squaredNorm());
    const Eigen::Vector4d q = 4.0 * blk * lifted;  // stresses in q(1..3)
    return {((q(1) * (ki - kj)) + q(2) * (ki - kk)).transpose(),
            ((q(1) * (kj - ki)) + q(3) * (kj - kk)).transpose(),
            ((q(2) * (kk - ki)) + q(3) * (kk - kj)).transpose()};
}

}  // namespace snapkit
