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

/// Kernel-based advantage screening: PCA restriction, classical and quantum
/// kernels, geometric difference, SVM complexity and the consolidated report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "qkscreen/featuremaps.hpp"
#include "qkscreen/svm.hpp"

namespace qkscreen {

/// Raised when a matrix is too ill-conditioned for the requested operation.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class ColumnMeaning { RawFeatures, PrincipalComponents };

struct DataMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> row_ids;
    ColumnMeaning column_meaning = ColumnMeaning::RawFeatures;
    /// Principal components beyond the numerical rank; zero-filled.
    std::vector<int> zero_columns;

    DataMatrix() = default;
    explicit DataMatrix(Eigen::MatrixXd v, std::vector<std::string> ids = {});

    Eigen::Index rows() const noexcept { return values.rows(); }
    Eigen::Index cols() const noexcept { return values.cols(); }

    /// Throws std::invalid_argument on NaN/Inf or a row-id count mismatch.
    void validate() const;
};

/// Projection onto the top-M principal axes of the column covariance.
/// Each axis is signed so its largest-magnitude loading is positive.
DataMatrix pca_reduce(const DataMatrix& data, int M);

enum class KernelSource { Classical, QuantumExact, QuantumSampled };
std::string to_string(KernelSource s);

struct KernelMatrix {
    Eigen::MatrixXd values;
    KernelSource source = KernelSource::Classical;
    std::optional<EncodingSpec> encoding;
    std::optional<std::uint64_t> shots;
    std::optional<std::uint64_t> seed;
    bool normalized = false;

    Eigen::Index size() const noexcept { return values.rows(); }
};

struct KernelMode {
    bool sampled = false;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;

    static KernelMode exact() { return {}; }
    static KernelMode sampling(std::uint64_t shots, std::uint64_t seed) { return {true, shots, seed}; }
    std::string name() const { return sampled ? "sampled" : "exact"; }
};

/// How exact kernel entries are evaluated. FidelityCircuit runs
/// E(x_i)E^dagger(x_j) per pair; StateOverlap prepares E^dagger(x)|0> once
/// per row and takes |<phi_i|phi_j>|^2, which is the same amplitude.
enum class KernelRoute { StateOverlap, FidelityCircuit };

KernelMatrix classical_kernel(const DataMatrix& D);

/// Fits the [0, pi] scaler on D, then fills K_Q. Sampled entries count
/// all-zero outcomes over `shots` draws from the fidelity state, with a
/// per-entry seed derived from (seed, i, j).
KernelMatrix quantum_kernel(const DataMatrix& D, const EncodingSpec& spec, const KernelMode& mode,
                            KernelRoute route = KernelRoute::StateOverlap);

/// Same, for features that are already scaled angles.
KernelMatrix quantum_kernel_from_angles(const Eigen::Ref<const Eigen::MatrixXd>& angles, const EncodingSpec& spec,
                                        const KernelMode& mode, KernelRoute route = KernelRoute::StateOverlap);

/// K * (N / trace K).
KernelMatrix normalize_kernel(const KernelMatrix& K);

/// 1e-6 * trace(K_C) / N.
double default_lambda(const KernelMatrix& K_C);

/// sqrt(lambda_max(sqrt(K_Q) (K_C + lambda I)^-1 sqrt(K_Q))).
double geometric_difference(const KernelMatrix& K_C, const KernelMatrix& K_Q, double lambda);
double geometric_difference(const Eigen::Ref<const Eigen::MatrixXd>& K_C, const Eigen::Ref<const Eigen::MatrixXd>& K_Q,
                            double lambda);

struct AdversarialLabels {
    Eigen::VectorXd labels;
    double g = 0.0;
    /// Top eigenvalue of the geometric-difference operator was repeated.
    bool degenerate = false;
};

/// y = sign(sqrt(K_Q) v) for the top eigenvector v of the geometric
/// difference operator; zeros map to +1.
AdversarialLabels adversarial_labels(const KernelMatrix& K_C, const KernelMatrix& K_Q, double lambda);
AdversarialLabels adversarial_labels(const Eigen::Ref<const Eigen::MatrixXd>& K_C,
                                     const Eigen::Ref<const Eigen::MatrixXd>& K_Q, double lambda);

/// Trains on K (clipped to PSD first when sampled).
SvmModel train_svm(const KernelMatrix& K, const Eigen::Ref<const Eigen::VectorXd>& labels,
                   const SvmOptions& options = {});

enum class Verdict { PotentialAdvantage, ClassicalSufficient, Inconclusive };
std::string to_string(Verdict v);

/// PotentialAdvantage iff g >= sqrt_N (1 - tol), s_C > sqrt_N and s_Q < s_C.
Verdict decide_verdict(double g, double s_C, double s_Q, double sqrt_N, double tolerance);

struct ScreenRow {
    int M = 0;
    EncodingSpec encoding;
    double g = 0.0;
    double s_C = 0.0;
    double s_Q = 0.0;
    std::string mode = "exact";
    std::optional<std::uint64_t> shots;
    std::optional<std::uint64_t> seed;
    Verdict verdict = Verdict::Inconclusive;
    /// "target" or "adversarial".
    std::string labels = "target";
    double lambda = 0.0;
    bool degenerate = false;
    int zero_components = 0;
    std::string note;
};

struct ScreenReport {
    int N = 0;
    double sqrt_N = 0.0;
    std::vector<ScreenRow> rows;
};

void to_json(nlohmann::json& j, const ScreenRow& row);
void to_json(nlohmann::json& j, const ScreenReport& report);

struct ScreenOptions {
    std::vector<int> Ms{4, 8, 16};
    std::vector<EncodingKind> encodings{EncodingKind::Angle, EncodingKind::IQP};
    KernelMode mode;
    double C = 1.0;
    /// Unset: default_lambda of the normalized classical kernel.
    std::optional<double> lambda;
    double verdict_tolerance = 0.05;
    /// Add one row per (M, encoding) trained on adversarial labels.
    bool adversarial = false;
};

/// Runs the protocol for every (M, encoding). A failing row is recorded as
/// Inconclusive with a note; the batch continues.
ScreenReport screen(const DataMatrix& data, const Eigen::Ref<const Eigen::VectorXd>& labels,
                    const ScreenOptions& options);

/// N lines of N comma-separated values at full precision, plus a sidecar
/// `<path>.json` with the provenance fields.
void write_kernel_csv(const KernelMatrix& K, const std::filesystem::path& path);

}  // namespace qkscreen
