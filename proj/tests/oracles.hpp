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

// Independent reference implementations used by the unit and acceptance
// tests. None of these share code paths with the library under test.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qkscreen/qsim.hpp"

namespace oracle {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline CMatrix single_qubit_matrix(qkscreen::GateKind kind, double theta) {
    using qkscreen::GateKind;
    const cd i(0.0, 1.0);
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    CMatrix m(2, 2);
    switch (kind) {
        case GateKind::H: m << 1, 1, 1, -1; return m / std::sqrt(2.0);
        case GateKind::RX: m << c, -i * s, -i * s, c; return m;
        case GateKind::RY: m << c, -s, s, c; return m;
        case GateKind::RZ: m << std::exp(-i * (theta / 2)), 0, 0, std::exp(i * (theta / 2)); return m;
        default: break;
    }
    throw std::invalid_argument("not a single-qubit kind");
}

/// Kronecker product of per-qubit operators; qubit n-1 is the leftmost
/// factor, so basis index bit q belongs to qubit q.
inline CMatrix embed(int n, const std::map<int, CMatrix>& ops) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (int q = n - 1; q >= 0; --q) {
        const auto it = ops.find(q);
        const CMatrix f = it != ops.end() ? it->second : CMatrix::Identity(2, 2);
        CMatrix next(out.rows() * 2, out.cols() * 2);
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            for (Eigen::Index c = 0; c < out.cols(); ++c) next.block(r * 2, c * 2, 2, 2) = out(r, c) * f;
        out = next;
    }
    return out;
}

inline CMatrix gate_matrix(const qkscreen::Gate& g, int n) {
    using qkscreen::GateKind;
    CMatrix P0 = CMatrix::Zero(2, 2), P1 = CMatrix::Zero(2, 2), X(2, 2), Z(2, 2);
    P0(0, 0) = 1;
    P1(1, 1) = 1;
    X << 0, 1, 1, 0;
    Z << 1, 0, 0, -1;
    const int a = g.targets[0], b = g.targets[1];
    switch (g.kind) {
        case GateKind::CZ: return embed(n, {{a, P0}}) + embed(n, {{a, P1}, {b, Z}});
        case GateKind::CNOT: return embed(n, {{a, P0}}) + embed(n, {{a, P1}, {b, X}});
        case GateKind::RZZ: {
            const cd i(0.0, 1.0);
            const CMatrix I = CMatrix::Identity(1 << n, 1 << n);
            return std::cos(g.angle / 2) * I - i * std::sin(g.angle / 2) * embed(n, {{a, Z}, {b, Z}});
        }
        default: return embed(n, {{a, single_qubit_matrix(g.kind, g.angle)}});
    }
}

inline CVector run_dense(const qkscreen::Circuit& c) {
    CVector psi = CVector::Zero(1 << c.n_qubits);
    psi[0] = 1;
    for (const auto& g : c.gates) psi = gate_matrix(g, c.n_qubits) * psi;
    return psi;
}

/// Principal-component scores via the covariance eigendecomposition,
/// descending eigenvalues, no sign convention.
inline Eigen::MatrixXd pca_scores(const Eigen::MatrixXd& X, int M) {
    const Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
    const Eigen::MatrixXd cov = C.transpose() * C / double(X.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::MatrixXd scores(X.rows(), M);
    for (int k = 0; k < M; ++k) scores.col(k) = C * es.eigenvectors().col(cov.rows() - 1 - k);
    return scores;
}

/// g via a general (non-symmetric) eigensolver on Q^{1/2} (K_C + lambda I)^{-1} Q^{1/2},
/// with the square root taken from a separate eigen decomposition and the
/// inverse from a full-pivot LU.
inline double geometric_difference(const Eigen::MatrixXd& K_C, const Eigen::MatrixXd& K_Q, double lambda) {
    const Eigen::Index N = K_C.rows();
    Eigen::EigenSolver<Eigen::MatrixXd> eq(K_Q);
    const Eigen::MatrixXcd V = eq.eigenvectors();
    Eigen::VectorXcd d = eq.eigenvalues();
    for (Eigen::Index i = 0; i < N; ++i) d[i] = std::sqrt(std::max(d[i].real(), 0.0));
    const Eigen::MatrixXd sq = (V * d.asDiagonal() * V.inverse()).real();
    const Eigen::MatrixXd inv = (K_C + lambda * Eigen::MatrixXd::Identity(N, N)).fullPivLu().inverse();
    Eigen::EigenSolver<Eigen::MatrixXd> es(sq * inv * sq, false);
    double top = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) top = std::max(top, es.eigenvalues()[i].real());
    return std::sqrt(top);
}

/// Exact SVM dual optimum by enumerating every active set: each alpha_i is
/// pinned at 0, pinned at C, or free; free variables solve the equality-
/// constrained stationarity system. Feasible to N <= 10.
inline double svm_dual_optimum(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double C) {
    const int N = static_cast<int>(K.rows());
    const Eigen::MatrixXd Q = y.asDiagonal() * K * y.asDiagonal();
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> state(N, 0);  // 0 lower, 1 upper, 2 free
    long total = 1;
    for (int i = 0; i < N; ++i) total *= 3;
    for (long code = 0; code < total; ++code) {
        long rem = code;
        std::vector<int> free_idx;
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(N);
        for (int i = 0; i < N; ++i) {
            state[i] = static_cast<int>(rem % 3);
            rem /= 3;
            if (state[i] == 1) alpha[i] = C;
            if (state[i] == 2) free_idx.push_back(i);
        }
        const int F = static_cast<int>(free_idx.size());
        if (F > 0) {
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(F + 1, F + 1);
            Eigen::VectorXd rhs(F + 1);
            const Eigen::VectorXd Qa = Q * alpha;
            double ya = y.dot(alpha);
            for (int r = 0; r < F; ++r) {
                for (int c = 0; c < F; ++c) A(r, c) = Q(free_idx[r], free_idx[c]);
                A(r, F) = y[free_idx[r]];
                A(F, r) = y[free_idx[r]];
                rhs[r] = 1.0 - Qa[free_idx[r]];
            }
            rhs[F] = -ya;
            const Eigen::VectorXd sol = A.completeOrthogonalDecomposition().solve(rhs);
            if ((A * sol - rhs).norm() > 1e-8) continue;
            bool ok = true;
            for (int r = 0; r < F; ++r) {
                if (sol[r] < -1e-10 || sol[r] > C + 1e-10) ok = false;
                alpha[free_idx[r]] = std::clamp(sol[r], 0.0, C);
            }
            if (!ok) continue;
        }
        if (std::abs(y.dot(alpha)) > 1e-8) continue;
        best = std::max(best, alpha.sum() - 0.5 * alpha.dot(Q * alpha));
    }
    return best;
}

/// Index of the nearest row (squared Euclidean), ties to the lowest index.
inline Eigen::Index nearest_row(const Eigen::MatrixXd& rows, const Eigen::VectorXd& q) {
    Eigen::Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < rows.rows(); ++k) {
        double d = 0.0;
        for (Eigen::Index j = 0; j < q.size(); ++j) d += (rows(k, j) - q[j]) * (rows(k, j) - q[j]);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

/// Random symmetric PSD matrix with trace N.
template <typename Rng>
Eigen::MatrixXd random_normalized_psd(Eigen::Index N, Rng& rng, bool full_rank = true) {
    Eigen::MatrixXd A(N, full_rank ? N : std::max<Eigen::Index>(1, N / 2));
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
    Eigen::MatrixXd K = A * A.transpose();
    if (full_rank) K += 0.1 * Eigen::MatrixXd::Identity(N, N);
    return K * (double(N) / K.trace());
}

}  // namespace oracle
