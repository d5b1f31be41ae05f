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

#include "qkscreen/svm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qkscreen {
namespace {

constexpr double kTau = 1e-12;

void validate(const Eigen::Ref<const Eigen::MatrixXd>& K, const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (K.rows() != K.cols()) throw std::invalid_argument("kernel must be square");
    if (K.rows() != y.size()) throw std::invalid_argument("label count does not match kernel size");
    if (!K.allFinite()) throw std::invalid_argument("kernel has non-finite entries");
    bool pos = false, neg = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] == 1.0)
            pos = true;
        else if (y[i] == -1.0)
            neg = true;
        else
            throw std::invalid_argument("labels must be -1 or +1");
    }
    if (!(pos && neg)) throw std::invalid_argument("both classes must be present to train an SVM");
}

}  // namespace

Eigen::VectorXd SvmModel::decision_values(const Eigen::Ref<const Eigen::MatrixXd>& kernel_columns) const {
    if (kernel_columns.rows() != dual_coefficients.size())
        throw std::invalid_argument("kernel columns do not match training size");
    return (kernel_columns.transpose() * dual_coefficients).array() + bias;
}

SvmModel train_svm(const Eigen::Ref<const Eigen::MatrixXd>& K, const Eigen::Ref<const Eigen::VectorXd>& y,
                   const SvmOptions& options) {
    validate(K, y);
    if (!(options.C > 0.0)) throw std::invalid_argument("C must be positive");
    const Eigen::Index n = K.rows();
    const double C = options.C;

    // Minimisation form: f(a) = 1/2 a^T Q a - e^T a with Q_ij = y_i y_j K_ij.
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
    auto Q = [&](Eigen::Index i, Eigen::Index j) { return y[i] * y[j] * K(i, j); };
    auto in_up = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
    auto in_low = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

    SvmModel model;
    model.C = C;
    std::size_t iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        Eigen::Index i = -1;
        double gmax = -std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            if (in_up(t) && -y[t] * grad[t] > gmax) {
                i = t;
                gmax = -y[t] * grad[t];
            }
        }
        Eigen::Index j = -1;
        double gmin = std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double v = -y[t] * grad[t];
            gmin = std::min(gmin, v);
            if (i < 0) continue;
            const double b = gmax - v;
            if (b > 0) {
                double a = K(i, i) + K(t, t) - 2.0 * K(i, t);
                if (a <= 0) a = kTau;
                const double score = -(b * b) / a;
                if (score < best) {
                    best = score;
                    j = t;
                }
            }
        }
        if (i < 0 || j < 0 || gmax - gmin < options.tolerance) {
            model.converged = true;
            break;
        }

        const double old_i = alpha[i], old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else if (alpha[j] < 0) {
                alpha[j] = 0;
                alpha[i] = sum;
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = sum;
            }
        }
        const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
        for (Eigen::Index t = 0; t < n; ++t) grad[t] += Q(i, t) * di + Q(j, t) * dj;
    }
    model.iterations = iter;

    // Offset: average y*G over free variables, else midpoint of the bounds.
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    int n_free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= C) {
            if (y[t] < 0)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else if (alpha[t] <= 0) {
            if (y[t] > 0)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;
    model.bias = -rho;

    model.dual_coefficients = alpha.cwiseProduct(y);
    for (Eigen::Index t = 0; t < n; ++t)
        if (alpha[t] > 0) model.support_indices.push_back(t);
    return model;
}

double dual_objective(const Eigen::Ref<const Eigen::MatrixXd>& K, const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& alpha) {
    const Eigen::VectorXd ay = alpha.cwiseProduct(y);
    return alpha.sum() - 0.5 * ay.dot(K * ay);
}

double model_complexity(const SvmModel& model) { return model.dual_coefficients.norm(); }

}  // namespace qkscreen
