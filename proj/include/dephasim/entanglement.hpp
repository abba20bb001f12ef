#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "dephasim/error.hpp"
#include "dephasim/qubits.hpp"

namespace dephasim {

struct ConcurrenceResult {
    double value = 0.0;
    std::array<double, 4> lambdas{};  // descending, nonnegative
};

namespace detail {

/// sigma_y (x) sigma_y in the (+,+), (+,-), (-,+), (-,-) basis.
inline Eigen::Matrix4cd sigma_yy() {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 3) = -1.0;
    m(1, 2) = 1.0;
    m(2, 1) = 1.0;
    m(3, 0) = -1.0;
    return m;
}

inline ConcurrenceResult from_lambdas(std::array<double, 4> l) {
    std::sort(l.begin(), l.end(), std::greater<>());
    ConcurrenceResult r;
    r.lambdas = l;
    r.value = std::clamp(l[0] - l[1] - l[2] - l[3], 0.0, 1.0);
    return r;
}

}  // namespace detail

/// Wootters spin flip (sigma_y x sigma_y) rho* (sigma_y x sigma_y).
inline DensityMatrix4 spin_flip(const DensityMatrix4& rho) {
    const Eigen::Matrix4cd yy = detail::sigma_yy();
    return yy * rho.conjugate() * yy;
}

/// C = max(0, l1 - l2 - l3 - l4), l_i the square roots of the eigenvalues of
/// rho * spin_flip(rho) (real parts clipped at zero), descending.
inline ConcurrenceResult concurrence(const DensityMatrix4& rho) {
    const Eigen::Matrix4cd product = rho * spin_flip(rho);
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(product, false);
    if (es.info() != Eigen::Success) throw NumericalError("concurrence eigensolver did not converge");
    std::array<double, 4> l{};
    for (int i = 0; i < 4; ++i) l[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
    return detail::from_lambdas(l);
}

/// Same quantity from the Hermitian R = sqrt(sqrt(rho) rho~ sqrt(rho)).
/// Slower; kept as an independent route for cross-checks.
inline ConcurrenceResult concurrence_hermitian(const DensityMatrix4& rho) {
    const DensityMatrix4 h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<DensityMatrix4> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("density eigensolver did not converge");
    const Eigen::Vector4d root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const DensityMatrix4 sqrt_rho = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
    DensityMatrix4 inner = sqrt_rho * spin_flip(h) * sqrt_rho;
    inner = 0.5 * (inner + inner.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<DensityMatrix4> inner_es(inner, Eigen::EigenvaluesOnly);
    if (inner_es.info() != Eigen::Success) throw NumericalError("R eigensolver did not converge");
    std::array<double, 4> l{};
    for (int i = 0; i < 4; ++i) l[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, inner_es.eigenvalues()[i]));
    return detail::from_lambdas(l);
}

}  // namespace dephasim
