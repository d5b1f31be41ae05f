// Copyright 2026 The qkscreen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/// Small dense helpers shared by the kernel code. Templated on the scalar
/// so they accept any Eigen dense expression.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace qkscreen::linalg {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
Matrix<typename Derived::Scalar> gram(const Eigen::MatrixBase<Derived>& rows) {
    return rows * rows.transpose();
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, typename Derived::RealScalar tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

template <typename Derived>
Matrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& m) {
    return (m + m.transpose()) / typename Derived::Scalar(2);
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
template <typename Derived>
Eigen::SelfAdjointEigenSolver<Matrix<typename Derived::Scalar>> eigh(const Eigen::MatrixBase<Derived>& m) {
    Eigen::SelfAdjointEigenSolver<Matrix<typename Derived::Scalar>> solver(symmetrized(m));
    if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric eigendecomposition failed");
    return solver;
}

/// Rebuilds V f(D) V^T from a symmetric decomposition.
template <typename Scalar, typename F>
Matrix<Scalar> spectral_apply(const Eigen::SelfAdjointEigenSolver<Matrix<Scalar>>& es, F&& f) {
    Vector<Scalar> d = es.eigenvalues().unaryExpr(std::forward<F>(f));
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Principal square root with negative eigenvalues clipped to zero.
template <typename Derived>
Matrix<typename Derived::Scalar> psd_sqrt(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    return spectral_apply<Scalar>(eigh(m), [](Scalar v) { return std::sqrt(std::max(v, Scalar(0))); });
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues set to zero).
template <typename Derived>
Matrix<typename Derived::Scalar> clip_psd(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    return spectral_apply<Scalar>(eigh(m), [](Scalar v) { return std::max(v, Scalar(0)); });
}

}  // namespace qkscreen::linalg
