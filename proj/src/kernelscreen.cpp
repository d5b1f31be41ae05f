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

#include "qkscreen/kernelscreen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/SVD>

#include "qkscreen/linalg.hpp"
#include "qkscreen/parallel.hpp"
#include "qkscreen/rng.hpp"

namespace qkscreen {

DataMatrix::DataMatrix(Eigen::MatrixXd v, std::vector<std::string> ids) : values(std::move(v)), row_ids(std::move(ids)) {
    if (row_ids.empty())
        for (Eigen::Index i = 0; i < values.rows(); ++i) row_ids.push_back(std::to_string(i));
}

void DataMatrix::validate() const {
    if (!values.allFinite()) throw std::invalid_argument("data matrix contains NaN or Inf");
    if (static_cast<Eigen::Index>(row_ids.size()) != values.rows())
        throw std::invalid_argument("row id count does not match data rows");
}

DataMatrix pca_reduce(const DataMatrix& data, int M) {
    data.validate();
    const Eigen::Index n = data.rows(), d = data.cols();
    if (M < 1 || M > std::min(n, d))
        throw std::invalid_argument("requested " + std::to_string(M) + " components but at most min(N, columns) = " +
                                    std::to_string(std::min(n, d)) + " are available");
    const Eigen::RowVectorXd mean = data.values.colwise().mean();
    const Eigen::MatrixXd centered = data.values.rowwise() - mean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double rank_tol = static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon() *
                            (s.size() > 0 ? s[0] : 0.0);

    DataMatrix out;
    out.row_ids = data.row_ids;
    out.column_meaning = ColumnMeaning::PrincipalComponents;
    out.values = Eigen::MatrixXd::Zero(n, M);
    for (int k = 0; k < M; ++k) {
        if (k >= s.size() || !(s[k] > rank_tol)) {
            out.zero_columns.push_back(k);
            continue;
        }
        Eigen::VectorXd axis = svd.matrixV().col(k);
        Eigen::Index arg;
        axis.cwiseAbs().maxCoeff(&arg);
        if (axis[arg] < 0) axis = -axis;
        out.values.col(k) = centered * axis;
    }
    return out;
}

std::string to_string(KernelSource s) {
    switch (s) {
        case KernelSource::Classical: return "classical";
        case KernelSource::QuantumExact: return "quantum_exact";
        case KernelSource::QuantumSampled: return "quantum_sampled";
    }
    return "?";
}

KernelMatrix classical_kernel(const DataMatrix& D) {
    D.validate();
    KernelMatrix K;
    K.values = linalg::gram(D.values);
    K.source = KernelSource::Classical;
    return K;
}

namespace {

// Prepared states above this many bytes fall back to per-pair circuits.
constexpr double kOverlapMemoryBudget = 1024.0 * 1024.0 * 1024.0;

Eigen::MatrixXd exact_fidelities(const Eigen::Ref<const Eigen::MatrixXd>& angles, const EncodingSpec& spec,
                                 KernelRoute route) {
    const Eigen::Index n = angles.rows();
    Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n, n);
    const double state_bytes = static_cast<double>(n) * std::ldexp(16.0, spec.n_qubits);
    if (route == KernelRoute::FidelityCircuit || state_bytes > kOverlapMemoryBudget) {
        std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
        std::vector<double> vals(pairs.size());
        parallel_for(pairs.size(), [&](std::size_t p) {
            const auto [i, j] = pairs[p];
            vals[p] = prob_all_zero(run_circuit(fidelity_circuit(angles.row(i).transpose(), angles.row(j).transpose(), spec)));
        });
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto [i, j] = pairs[p];
            K(i, j) = K(j, i) = vals[p];
        }
        return K;
    }
    std::vector<Statevector> states(static_cast<std::size_t>(n), Statevector(spec.n_qubits));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        states[i] = run_circuit(adjoint(encode(angles.row(static_cast<Eigen::Index>(i)).transpose(), spec)));
    });
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(n); ++j)
            K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::norm(states[i].amplitudes().dot(states[j].amplitudes()));
    });
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) K(j, i) = K(i, j);
    return K;
}

}  // namespace

KernelMatrix quantum_kernel_from_angles(const Eigen::Ref<const Eigen::MatrixXd>& angles, const EncodingSpec& spec,
                                        const KernelMode& mode, KernelRoute route) {
    check_qubit_count(spec.n_qubits);
    if (angles.cols() != spec.n_qubits) throw std::invalid_argument("feature dimension does not match encoding width");
    if (mode.sampled && mode.shots == 0) throw std::invalid_argument("sampled kernel needs shots >= 1");

    KernelMatrix K;
    K.encoding = spec;
    K.values = exact_fidelities(angles, spec, route);
    K.source = KernelSource::QuantumExact;
    if (!mode.sampled) return K;

    K.source = KernelSource::QuantumSampled;
    K.shots = mode.shots;
    K.seed = mode.seed;
    const Eigen::Index n = K.size();
    const double shots = static_cast<double>(mode.shots);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t ui) {
        const auto i = static_cast<Eigen::Index>(ui);
        for (Eigen::Index j = i; j < n; ++j) {
            const auto seed = derive_seed(mode.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
            K.values(i, j) = static_cast<double>(count_all_zero(K.values(i, j), mode.shots, seed)) / shots;
        }
    });
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) K.values(j, i) = K.values(i, j);
    return K;
}

KernelMatrix quantum_kernel(const DataMatrix& D, const EncodingSpec& spec, const KernelMode& mode, KernelRoute route) {
    D.validate();
    const auto scaler = fit_scaler(D.values);
    return quantum_kernel_from_angles(scaler.transform_rows(D.values), spec, mode, route);
}

KernelMatrix normalize_kernel(const KernelMatrix& K) {
    const double tr = K.values.trace();
    if (!(tr > 0.0)) throw std::invalid_argument("cannot normalize a kernel with non-positive trace");
    KernelMatrix out = K;
    out.values *= static_cast<double>(K.size()) / tr;
    out.normalized = true;
    return out;
}

double default_lambda(const KernelMatrix& K_C) {
    return 1e-6 * K_C.values.trace() / static_cast<double>(std::max<Eigen::Index>(K_C.size(), 1));
}

namespace {

struct GeometricOperator {
    Eigen::MatrixXd sqrt_q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
};

GeometricOperator geometric_operator(const Eigen::Ref<const Eigen::MatrixXd>& K_C,
                                     const Eigen::Ref<const Eigen::MatrixXd>& K_Q, double lambda) {
    if (K_C.rows() != K_C.cols() || K_Q.rows() != K_Q.cols() || K_C.rows() != K_Q.rows())
        throw std::invalid_argument("kernels must be square and the same size");
    if (!linalg::is_symmetric(K_C, 1e-9) || !linalg::is_symmetric(K_Q, 1e-9))
        throw std::invalid_argument("kernels must be symmetric");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");

    const Eigen::Index n = K_C.rows();
    const Eigen::MatrixXd reg = K_C + lambda * Eigen::MatrixXd::Identity(n, n);
    const auto reg_eig = linalg::eigh(reg);
    const double lo = reg_eig.eigenvalues()[0];
    const double hi = reg_eig.eigenvalues()[n - 1];
    if (!(lo > 0.0) || hi / lo > 1e14) {
        std::ostringstream msg;
        msg << "K_C + lambda I is numerically singular (eigenvalues " << lo << " .. " << hi << ")";
        throw NumericalError(msg.str());
    }
    const Eigen::MatrixXd inv = linalg::spectral_apply<double>(reg_eig, [](double v) { return 1.0 / v; });

    GeometricOperator op;
    op.sqrt_q = linalg::psd_sqrt(K_Q);
    op.eig = linalg::eigh(op.sqrt_q * inv * op.sqrt_q);
    return op;
}

void require_normalized(const KernelMatrix& K_C, const KernelMatrix& K_Q) {
    if (!K_C.normalized || !K_Q.normalized) throw std::invalid_argument("geometric difference expects normalized kernels");
}

}  // namespace

double geometric_difference(const Eigen::Ref<const Eigen::MatrixXd>& K_C, const Eigen::Ref<const Eigen::MatrixXd>& K_Q,
                            double lambda) {
    const auto op = geometric_operator(K_C, K_Q, lambda);
    return std::sqrt(std::max(op.eig.eigenvalues().maxCoeff(), 0.0));
}

double geometric_difference(const KernelMatrix& K_C, const KernelMatrix& K_Q, double lambda) {
    require_normalized(K_C, K_Q);
    return geometric_difference(K_C.values, K_Q.values, lambda);
}

AdversarialLabels adversarial_labels(const Eigen::Ref<const Eigen::MatrixXd>& K_C,
                                     const Eigen::Ref<const Eigen::MatrixXd>& K_Q, double lambda) {
    const auto op = geometric_operator(K_C, K_Q, lambda);
    const Eigen::Index n = K_C.rows();
    const auto& ev = op.eig.eigenvalues();
    AdversarialLabels out;
    out.g = std::sqrt(std::max(ev[n - 1], 0.0));
    out.degenerate = n > 1 && ev[n - 2] >= ev[n - 1] - 1e-9 * std::max(1.0, std::abs(ev[n - 1]));

    Eigen::VectorXd v = op.eig.eigenvectors().col(n - 1);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    const Eigen::VectorXd score = op.sqrt_q * v;
    const double zero_tol = 1e-12 * std::max(score.cwiseAbs().maxCoeff(), 1e-300);
    out.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) out.labels[i] = score[i] < -zero_tol ? -1.0 : 1.0;
    return out;
}

AdversarialLabels adversarial_labels(const KernelMatrix& K_C, const KernelMatrix& K_Q, double lambda) {
    require_normalized(K_C, K_Q);
    return adversarial_labels(K_C.values, K_Q.values, lambda);
}

SvmModel train_svm(const KernelMatrix& K, const Eigen::Ref<const Eigen::VectorXd>& labels, const SvmOptions& options) {
    if (K.source == KernelSource::QuantumSampled) return train_svm(Eigen::MatrixXd(linalg::clip_psd(K.values)), labels, options);
    return train_svm(K.values, labels, options);
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::PotentialAdvantage: return "PotentialAdvantage";
        case Verdict::ClassicalSufficient: return "ClassicalSufficient";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

Verdict decide_verdict(double g, double s_C, double s_Q, double sqrt_N, double tolerance) {
    if (!std::isfinite(g) || !std::isfinite(s_C) || !std::isfinite(s_Q)) return Verdict::Inconclusive;
    if (g >= sqrt_N * (1.0 - tolerance) && s_C > sqrt_N && s_Q < s_C) return Verdict::PotentialAdvantage;
    return Verdict::ClassicalSufficient;
}

void to_json(nlohmann::json& j, const ScreenRow& row) {
    j = nlohmann::json{{"M", row.M},
                       {"encoding", row.encoding},
                       {"g", row.g},
                       {"s_C", row.s_C},
                       {"s_Q", row.s_Q},
                       {"mode", row.mode},
                       {"shots", row.shots ? nlohmann::json(*row.shots) : nlohmann::json(nullptr)},
                       {"seed", row.seed ? nlohmann::json(*row.seed) : nlohmann::json(nullptr)},
                       {"verdict", to_string(row.verdict)},
                       {"labels", row.labels},
                       {"lambda", row.lambda},
                       {"degenerate", row.degenerate},
                       {"zero_components", row.zero_components},
                       {"note", row.note}};
}

void to_json(nlohmann::json& j, const ScreenReport& report) {
    j = nlohmann::json{{"N", report.N}, {"sqrt_N", report.sqrt_N}, {"rows", report.rows}};
}

namespace {

void check_labels(const Eigen::Ref<const Eigen::VectorXd>& labels, Eigen::Index n) {
    if (labels.size() != n) throw std::invalid_argument("label count does not match data rows");
    for (Eigen::Index i = 0; i < n; ++i)
        if (labels[i] != 1.0 && labels[i] != -1.0) throw std::invalid_argument("labels must be -1 or +1");
}

}  // namespace

ScreenReport screen(const DataMatrix& data, const Eigen::Ref<const Eigen::VectorXd>& labels,
                    const ScreenOptions& options) {
    data.validate();
    check_labels(labels, data.rows());

    ScreenReport report;
    report.N = static_cast<int>(data.rows());
    report.sqrt_N = std::sqrt(static_cast<double>(report.N));

    std::vector<int> Ms = options.Ms;
    std::sort(Ms.begin(), Ms.end());
    Ms.erase(std::unique(Ms.begin(), Ms.end()), Ms.end());
    std::vector<EncodingKind> encodings = options.encodings;
    std::sort(encodings.begin(), encodings.end(),
              [](EncodingKind a, EncodingKind b) { return to_string(a) < to_string(b); });
    encodings.erase(std::unique(encodings.begin(), encodings.end()), encodings.end());

    const SvmOptions svm{.C = options.C};
    for (int M : Ms) {
        for (EncodingKind kind : encodings) {
            ScreenRow row;
            row.M = M;
            row.encoding = EncodingSpec::make(kind, M);
            row.mode = options.mode.name();
            KernelMode mode = options.mode;
            if (mode.sampled) {
                mode.seed = derive_seed(options.mode.seed, static_cast<std::uint64_t>(M), static_cast<std::uint64_t>(kind));
                row.shots = mode.shots;
                row.seed = mode.seed;
            }
            ScreenRow adv;
            bool want_adv = options.adversarial;
            try {
                if (M > kMaxQubits)
                    throw std::invalid_argument(std::to_string(M) + " qubits exceeds the simulator cap of " +
                                                std::to_string(kMaxQubits));
                const DataMatrix pcs = pca_reduce(data, M);
                row.zero_components = static_cast<int>(pcs.zero_columns.size());
                const KernelMatrix K_C = normalize_kernel(classical_kernel(pcs));
                const KernelMatrix K_Q = normalize_kernel(quantum_kernel(pcs, row.encoding, mode));
                row.lambda = options.lambda.value_or(default_lambda(K_C));
                row.g = geometric_difference(K_C, K_Q, row.lambda);

                auto fill_complexities = [&](ScreenRow& r, const Eigen::VectorXd& y) {
                    const SvmModel mc = train_svm(K_C, y, svm);
                    const SvmModel mq = train_svm(K_Q, y, svm);
                    r.s_C = model_complexity(mc);
                    r.s_Q = model_complexity(mq);
                    if (!mc.converged || !mq.converged) r.note = "svm reached the iteration cap before converging";
                    r.verdict = decide_verdict(r.g, r.s_C, r.s_Q, report.sqrt_N, options.verdict_tolerance);
                };
                fill_complexities(row, labels);

                if (want_adv) {
                    adv = row;
                    adv.note.clear();
                    adv.labels = "adversarial";
                    try {
                        const auto al = adversarial_labels(K_C, K_Q, row.lambda);
                        adv.degenerate = al.degenerate;
                        fill_complexities(adv, al.labels);
                        if (al.degenerate) adv.note = "top eigenspace is degenerate; labels from one maximizer";
                    } catch (const std::exception& e) {
                        adv.verdict = Verdict::Inconclusive;
                        adv.s_C = adv.s_Q = std::numeric_limits<double>::quiet_NaN();
                        adv.note = std::string("adversarial labels: ") + e.what();
                    }
                }
            } catch (const std::exception& e) {
                row.verdict = Verdict::Inconclusive;
                row.g = row.s_C = row.s_Q = std::numeric_limits<double>::quiet_NaN();
                row.note = e.what();
                want_adv = false;
            }
            report.rows.push_back(row);
            if (want_adv) report.rows.push_back(adv);
        }
    }
    return report;
}

void write_kernel_csv(const KernelMatrix& K, const std::filesystem::path& path) {
    std::ostringstream csv;
    csv << std::setprecision(17);
    for (Eigen::Index i = 0; i < K.size(); ++i) {
        for (Eigen::Index j = 0; j < K.size(); ++j) {
            if (j) csv << ',';
            csv << K.values(i, j);
        }
        csv << '\n';
    }
    std::ofstream(path, std::ios::binary) << csv.str();

    nlohmann::json meta{{"source", to_string(K.source)},
                        {"N", K.size()},
                        {"normalized", K.normalized},
                        {"encoding", K.encoding ? nlohmann::json(*K.encoding) : nlohmann::json(nullptr)},
                        {"shots", K.shots ? nlohmann::json(*K.shots) : nlohmann::json(nullptr)},
                        {"seed", K.seed ? nlohmann::json(*K.seed) : nlohmann::json(nullptr)}};
    std::ofstream(std::filesystem::path(path.string() + ".json"), std::ios::binary) << meta.dump(2) << '\n';
}

}  // namespace qkscreen
