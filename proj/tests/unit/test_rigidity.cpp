#include <doctest.h>

#include "snapkit/critical.hpp"
#include "snapkit/errors.hpp"
#include "snapkit/rigidity.hpp"
#include "snapkit/strain.hpp"
#include "support.hpp"

using namespace snapkit;
using testsupport::load;

namespace {

Configuration polished(const FrameworkFile& ff) {
    return polish_to_lengths(ff.framework, ff.configuration, ff.framework.rest_lengths()).cfg;
}

// Lowest-density saddle from a small Newton run.
CriticalPoint lowest_saddle(const FrameworkFile& ff) {
    NewtonOptions o;
    o.starts = 3000;
    const auto res = solve_critical_newton(ff.framework, ff.configuration, o);
    const auto q = build_quotient_set(res.points, ff.framework);
    REQUIRE_FALSE(q.representatives.empty());
    return q.representatives.front();
}

}  // namespace

TEST_CASE("rigidity matrix entries") {
    const auto ff = load("ex1_bars_gl.json");
    const Eigen::MatrixXd r = rigidity_matrix(ff.framework, ff.configuration);
    CHECK(r.rows() == 12);
    CHECK(r.cols() == 6);
    for (int e = 0; e < 6; ++e) {
        const Edge& ed = ff.framework.edges()[e];
        for (int c = 0; c < 2; ++c) {
            const double d = ff.configuration(ed.i, c) - ff.configuration(ed.j, c);
            CHECK(r(2 * ed.i + c, e) == d);
            CHECK(r(2 * ed.j + c, e) == -d);
        }
        CHECK(r.col(e).cwiseAbs().sum() > 0.0);
    }
    const Eigen::MatrixXd rf = rigidity_matrix_free(ff.framework, Gauge(ff.framework), ff.configuration);
    CHECK(rf.rows() == 6);
    CHECK(rf == r.bottomRows(6));
}

TEST_CASE("collinear triangle is shaky with the expected self-stress") {
    const auto ff = load("collinear_triangle.json");
    const auto rep = is_shaky(ff.framework, ff.configuration);
    CHECK(rep.shaky);
    CHECK(rep.rank == 2);
    CHECK(rep.expected_rank == 3);
    const auto basis = self_stress_basis(ff.framework, ff.configuration);
    REQUIRE(basis.size() == 1);
    // edges (1,2), (1,3), (2,3)
    Eigen::Vector3d want(-2.0, 1.0, -2.0);
    want.normalize();
    const Eigen::Vector3d got = basis[0];
    CHECK(std::min((got - want).norm(), (got + want).norm()) < 1e-10);
    CHECK(equilibrium_residual(ff.framework, ff.configuration, basis[0]) < 1e-14);
    CHECK(std::abs(pure_condition(ff.framework, ff.configuration)) < 1e-14);
}

TEST_CASE("generic realizations are not shaky") {
    const auto tri = load("triangle.json");
    CHECK_FALSE(is_shaky(tri.framework, tri.configuration).shaky);
    CHECK(self_stress_basis(tri.framework, tri.configuration).empty());
    const auto ff = load("ex1_bars_gl.json");
    const auto rep = is_shaky(ff.framework, ff.configuration);
    CHECK_FALSE(rep.shaky);
    CHECK(rep.rank == 6);
    CHECK(std::abs(pure_condition(ff.framework, ff.configuration)) > 1e-6);
}

TEST_CASE("shakiness is isometry invariant") {
    std::mt19937_64 rng(31);
    for (const char* name : {"triangle.json", "collinear_triangle.json"}) {
        const auto ff = load(name);
        const bool shaky = is_shaky(ff.framework, ff.configuration).shaky;
        for (int trial = 0; trial < 30; ++trial) {
            const Configuration moved =
                testsupport::apply(testsupport::random_isometry(2, rng), ff.configuration);
            CHECK(is_shaky(ff.framework, moved).shaky == shaky);
            CHECK(std::abs(pure_condition(ff.framework, moved) -
                           pure_condition(ff.framework, ff.configuration)) < 1e-12);
        }
    }
}

TEST_CASE("bar stresses satisfy R w = grad U") {
    std::mt19937_64 rng(32);
    for (const char* name : {"ex1_bars_gl.json", "ex1_bars_ce.json", "triangle.json"}) {
        const auto ff = load(name);
        const EnergyModel model(ff.framework);
        for (int trial = 0; trial < 20; ++trial) {
            const Configuration cfg = testsupport::perturb(ff.framework, ff.configuration, 0.4, rng);
            const Eigen::VectorXd rw = rigidity_matrix(ff.framework, cfg) * model.stresses(cfg);
            const Eigen::VectorXd g = model.gradient_full(cfg);
            CHECK((rw - g).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + g.norm()));
        }
    }
}

TEST_CASE("pure condition gradient against finite differences") {
    std::mt19937_64 rng(33);
    for (const char* name : {"ex1_bars_gl.json", "triangle.json"}) {
        const auto ff = load(name);
        const Gauge g(ff.framework);
        for (int trial = 0; trial < 10; ++trial) {
            const Configuration cfg =
                g.canonicalize(testsupport::perturb(ff.framework, ff.configuration, 0.3, rng));
            const Eigen::VectorXd x = g.free_values(cfg);
            const Eigen::VectorXd fd = testsupport::central_difference(
                [&](const Eigen::VectorXd& y) { return pure_condition(ff.framework, g.assemble(y)); },
                x, 1e-6);
            const Eigen::VectorXd an = pure_condition_gradient(ff.framework, cfg);
            CHECK((an - fd).norm() < 1e-6 * (1.0 + an.norm()));
        }
    }
}

TEST_CASE("pure condition vanishes at the lowest saddle") {
    const auto ff = load("ex1_bars_gl.json");
    const double green = pure_condition(ff.framework, polished(ff));
    const CriticalPoint cyan = lowest_saddle(ff);
    CHECK(std::abs(cyan.cfg(3, 0) - 10.1071) < 1e-3);
    CHECK(std::abs(pure_condition(ff.framework, cyan.cfg)) < 1e-6 * std::abs(green));
    CHECK(is_shaky(ff.framework, cyan.cfg).shaky);
}

TEST_CASE("pure condition keeps its sign away from the shakiness variety") {
    std::mt19937_64 rng(34);
    const auto ff = load("ex1_bars_gl.json");
    const Configuration a = polished(ff);
    const double s0 = pure_condition(ff.framework, a);
    for (int trial = 0; trial < 10; ++trial) {
        const Configuration b = testsupport::perturb(ff.framework, a, 0.2, rng);
        bool clear = true;
        bool same = true;
        for (int k = 0; k <= 50; ++k) {
            const double t = k / 50.0;
            const Configuration c = a + t * (b - a);
            clear = clear && !is_shaky(ff.framework, c).shaky;
            same = same && std::signbit(pure_condition(ff.framework, c)) == std::signbit(s0);
        }
        if (clear) CHECK(same);
    }
}

TEST_CASE("pure condition needs an isostatic framework") {
    const auto ff = load("ex1_missing_edge.json");
    CHECK_THROWS_AS(pure_condition(ff.framework, ff.configuration), PreconditionError);
}
