#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "snapkit/io.hpp"
#include "snapkit/model.hpp"

namespace testsupport {

inline std::string fixture(const std::string& name) {
    return std::string(SNAPKIT_FIXTURE_DIR) + "/" + name;
}

inline snapkit::FrameworkFile load(const std::string& name) {
    return snapkit::load_framework(fixture(name));
}

// Direct isometry x -> R x + t.
struct Isometry {
    Eigen::MatrixXd rotation;
    Eigen::VectorXd translation;
};

inline Isometry random_isometry(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ();
    if (q.determinant() < 0) q.col(0) *= -1.0;
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) t(i) = 5.0 * g(rng);
    return {q, t};
}

inline snapkit::Configuration apply(const Isometry& iso, const snapkit::Configuration& cfg) {
    snapkit::Configuration out = (cfg * iso.rotation.transpose()).rowwise() + iso.translation.transpose();
    return out;
}

// Unpinned knots moved by uniform noise of the given amplitude.
inline snapkit::Configuration perturb(const snapkit::Framework& fw, const snapkit::Configuration& cfg,
                                      double amplitude, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    snapkit::Configuration out = cfg;
    for (int k = 0; k < fw.num_knots(); ++k)
        if (!fw.knots()[k].pinned)
            for (int c = 0; c < fw.dimension(); ++c) out(k, c) += u(rng);
    return out;
}

inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Eigen::VectorXd a = x, b = x;
        a(i) += h;
        b(i) -= h;
        g(i) = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

inline Eigen::MatrixXd central_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd j(f0.size(), x.size());
    for (int i = 0; i < x.size(); ++i) {
        Eigen::VectorXd a = x, b = x;
        a(i) += h;
        b(i) -= h;
        j.col(i) = (f(a) - f(b)) / (2.0 * h);
    }
    return j;
}

// Green-Lagrange bar energy from lengths.
inline double oracle_bar_gl(double rest, double deformed, double area) {
    const double d = deformed * deformed - rest * rest;
    return area * d * d / (8.0 * rest * rest * rest);
}

inline double oracle_bar_ce(double rest, double deformed, double area) {
    return area * (deformed - rest) * (deformed - rest) / (2.0 * rest);
}

// Triangle with lengths (ij, ik, jk): i at the origin, j on the x-axis.
inline Eigen::Matrix2d oracle_frame(double lij, double lik, double ljk) {
    const double x = (lij * lij + lik * lik - ljk * ljk) / (2.0 * lij);
    const double y = std::sqrt(std::max(lik * lik - x * x, 0.0));
    Eigen::Matrix2d p;
    p << lij, x, 0.0, y;
    return p;
}

// GL plate energy, plane stress with E = 1, nu = 1/2, volume A times perimeter.
inline double oracle_plate_gl(const std::array<double, 3>& rest, const std::array<double, 3>& def,
                              double area) {
    const Eigen::Matrix2d p = oracle_frame(rest[0], rest[1], rest[2]);
    const Eigen::Matrix2d q = oracle_frame(def[0], def[1], def[2]);
    const Eigen::Matrix2d a = q * p.inverse();
    const Eigen::Matrix2d e = 0.5 * (a.transpose() * a - Eigen::Matrix2d::Identity());
    const Eigen::Vector3d v(e(0, 0), e(1, 1), 2.0 * e(0, 1));
    const double nu = 0.5;
    Eigen::Matrix3d d;
    d << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, (1.0 - nu) / 2.0;
    d /= 1.0 - nu * nu;
    const double volume = area * (rest[0] + rest[1] + rest[2]);
    return 0.5 * volume * v.dot(d * v);
}

inline double oracle_energy(const snapkit::Framework& fw, const snapkit::Configuration& cfg) {
    const auto& edges = fw.edges();
    auto len = [&](int a, int b) { return (cfg.row(a) - cfg.row(b)).norm(); };
    double u = 0.0;
    for (int e = 0; e < fw.num_edges(); ++e) {
        if (fw.is_plate_edge(e)) continue;
        const double l = len(edges[e].i, edges[e].j);
        u += fw.strain_model() == snapkit::StrainModel::GL
                 ? oracle_bar_gl(edges[e].rest_length, l, fw.cross_section())
                 : oracle_bar_ce(edges[e].rest_length, l, fw.cross_section());
    }
    for (const auto& p : fw.plates()) {
        std::array<double, 3> rest, def;
        for (int s = 0; s < 3; ++s) {
            const auto& e = edges[p.edges[s]];
            rest[s] = e.rest_length;
            def[s] = len(e.i, e.j);
        }
        u += oracle_plate_gl(rest, def, fw.cross_section());
    }
    return u;
}

// Canonical comparison of two configurations.
inline double canonical_gap(const snapkit::Framework& fw, const snapkit::Configuration& a,
                            const snapkit::Configuration& b) {
    const snapkit::Gauge gauge(fw);
    return (gauge.canonicalize(a) - gauge.canonicalize(b)).cwiseAbs().maxCoeff();
}

}  // namespace testsupport
