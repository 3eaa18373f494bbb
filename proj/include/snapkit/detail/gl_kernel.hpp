#pragma once

#include <vector>

#include <Eigen/Dense>

#include "snapkit/model.hpp"

namespace snapkit::detail {

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
struct GlEvaluation {
    Vec<Scalar> lifted;    // (lift0, l_1^2, ..., l_b^2)
    Vec<Scalar> stress;    // w_e = 4 (M lifted)_e
    Vec<Scalar> gradient;  // over all s*n coordinates
    Mat<Scalar> hessian;   // over all s*n coordinates, if requested
};

// U = lifted^T M lifted with l_e^2 = |k_i - k_j|^2 (no conjugation, so the
// same code serves the complex homotopy). dU/dl_e^2 = 2 (M lifted)_e and
// d^2 l_e^2 / dk^2 = 2 [[I,-I],[-I,I]].
template <class Scalar>
GlEvaluation<Scalar> evaluate_gl(const Eigen::MatrixXd& m, const std::vector<Edge>& edges, int n,
                                 const Mat<Scalar>& coords, const Scalar& lift0,
                                 bool with_hessian) {
    const int b = static_cast<int>(edges.size());
    const int dofs = static_cast<int>(coords.rows()) * n;
    GlEvaluation<Scalar> out;
    Mat<Scalar> diff(b, n);
    out.lifted.resize(b + 1);
    out.lifted(0) = lift0;
    for (int e = 0; e < b; ++e) {
        diff.row(e) = coords.row(edges[e].i) - coords.row(edges[e].j);
        Scalar l2(0);
        for (int c = 0; c < n; ++c) l2 += diff(e, c) * diff(e, c);
        out.lifted(e + 1) = l2;
    }
    const Vec<Scalar> q = m.cast<Scalar>() * out.lifted;
    out.stress = Scalar(4) * q.tail(b);
    out.gradient = Vec<Scalar>::Zero(dofs);
    for (int e = 0; e < b; ++e) {
        for (int c = 0; c < n; ++c) {
            const Scalar f = out.stress(e) * diff(e, c);
            out.gradient(edges[e].i * n + c) += f;
            out.gradient(edges[e].j * n + c) -= f;
        }
    }
    if (!with_hessian) return out;

    Mat<Scalar> jac = Mat<Scalar>::Zero(b, dofs);
    for (int e = 0; e < b; ++e) {
        for (int c = 0; c < n; ++c) {
            jac(e, edges[e].i * n + c) = Scalar(2) * diff(e, c);
            jac(e, edges[e].j * n + c) = Scalar(-2) * diff(e, c);
        }
    }
    const Mat<Scalar> m11 = (2.0 * m.bottomRightCorner(b, b)).cast<Scalar>();
    out.hessian = jac.transpose() * m11 * jac;
    for (int e = 0; e < b; ++e) {
        const int i = edges[e].i;
        const int j = edges[e].j;
        for (int c = 0; c < n; ++c) {
            out.hessian(i * n + c, i * n + c) += out.stress(e);
            out.hessian(j * n + c, j * n + c) += out.stress(e);
            out.hessian(i * n + c, j * n + c) -= out.stress(e);
            out.hessian(j * n + c, i * n + c) -= out.stress(e);
        }
    }
    return out;
}

}  // namespace snapkit::detail
