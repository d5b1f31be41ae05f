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

/// Soft-margin SVM on a precomputed kernel, solved in the dual with SMO
/// (maximal-violating-pair selection with second-order working set choice).

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace qkscreen {

struct SvmOptions {
    double C = 1.0;
    double tolerance = 1e-4;
    std::size_t max_iterations = 100000;
};

struct SvmModel {
    /// alpha_i * y_i; zero for rows that are not support vectors.
    Eigen::VectorXd dual_coefficients;
    double bias = 0.0;
    double C = 1.0;
    std::vector<Eigen::Index> support_indices;
    std::size_t iterations = 0;
    bool converged = false;

    /// f(x_j) = sum_i coef_i K(i, j) + bias, with `kernel_columns` holding
    /// K(i, j) for training rows i (one column per query).
    Eigen::VectorXd decision_values(const Eigen::Ref<const Eigen::MatrixXd>& kernel_columns) const;
};

/// Throws std::invalid_argument for single-class labels, labels outside
/// {-1, +1}, shape mismatches and non-finite kernel entries.
SvmModel train_svm(const Eigen::Ref<const Eigen::MatrixXd>& kernel, const Eigen::Ref<const Eigen::VectorXd>& labels,
                   const SvmOptions& options = {});

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
double dual_objective(const Eigen::Ref<const Eigen::MatrixXd>& kernel, const Eigen::Ref<const Eigen::VectorXd>& labels,
                      const Eigen::Ref<const Eigen::VectorXd>& alpha);

/// Euclidean norm of the dual coefficients (largest singular value of the
/// 1 x N coefficient matrix).
double model_complexity(const SvmModel& model);

}  // namespace qkscreen
