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

/// Generative source replacement: a k-means codebook stands in for the
/// discrete latent of a vector-quantised autoencoder, a quantum circuit Born
/// machine learns the one-hot codeword distribution, and samples are
/// repaired by nearest-codeword lookup and decoded back to patches.
///
/// Codeword i is the one-hot bitstring with character i set (see qsim.hpp
/// for the bit order).

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "qkscreen/qsim.hpp"
#include "qkscreen/wxdata.hpp"

namespace qkscreen {

struct Codebook {
    /// k x (c*h*w), one entry per row, in source units.
    Eigen::MatrixXd entries;
    std::size_t channels = 0, height = 0, width = 0;
    std::vector<std::string> channel_names;
    std::vector<std::string> units;
    /// Training assignment counts per entry.
    std::vector<std::uint64_t> counts;
    std::size_t iterations = 0;
    std::uint64_t seed = 0;

    int k() const noexcept { return static_cast<int>(entries.rows()); }
    int n_qubits() const noexcept { return k(); }
};

/// k-means with k-means++ seeding. Entries are ordered by descending
/// training count (ties by first assigned patch), so index 0 is the most
/// frequent codeword. Throws when fewer than k distinct patches exist.
Codebook fit_codebook(const PatchTensor& patches, int k, std::size_t iters, std::uint64_t seed);

/// Nearest entry per patch; ties go to the lowest index.
std::vector<int> encode(const PatchTensor& patches, const Codebook& codebook);
std::vector<int> encode(const Eigen::Ref<const Eigen::MatrixXd>& rows, const Codebook& codebook);

struct BitstringDistribution {
    std::map<std::string, double> probabilities;
    int n_qubits = 0;

    std::size_t support_size() const noexcept { return probabilities.size(); }
    double probability(const std::string& bits) const;
    /// Dense probabilities indexed by basis state.
    Eigen::VectorXd dense() const;
};

std::string one_hot(int index, int k);

/// P(one_hot(i)) = count(i) / total.
BitstringDistribution empirical_distribution(const std::vector<int>& indices, int k);

/// Frequencies of sampled bitstrings.
BitstringDistribution empirical_distribution(const std::vector<std::string>& samples);

double total_variation(const BitstringDistribution& a, const BitstringDistribution& b);
double total_variation(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q);

/// L layers of [RY(theta), RZ(theta) on every qubit, then CZ ring].
/// Parameters are ordered layer, qubit, (RY, RZ).
Circuit qcbm_ansatz(int n_qubits, int layers, const Eigen::Ref<const Eigen::VectorXd>& theta);

struct ExactWarmStart {};
struct SampledRefine {
    std::uint64_t shots = 1000;
    double noise_p = 0.0;
    Eigen::VectorXd warm_start;
};
using QcbmStage = std::variant<ExactWarmStart, SampledRefine>;

/// SPSA settings: a_k = a / (k + 1 + A)^alpha, c_k = c / (k + 1)^gamma.
struct SpsaOptions {
    std::size_t iterations = 300;
    double a = 0.6;
    double c = 0.15;
    double A = 20.0;
    double alpha = 0.602;
    double gamma = 0.101;
    /// Random initial angles in [-init_scale, init_scale]; 0 starts at zero,
    /// which is a flat saddle of the TV loss for most targets.
    double init_scale = 3.141592653589793;
    /// Exact stage only: first-layer RY angles reproduce the target's
    /// per-qubit marginals and every other angle starts at zero. Overrides
    /// init_scale.
    bool marginal_init = false;
};

struct QcbmModel {
    int n_qubits = 0;
    int layers = 0;
    Eigen::VectorXd theta;
    std::vector<double> training_history;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::string stage;
    std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const QcbmModel& m);
void from_json(const nlohmann::json& j, QcbmModel& m);

/// Exact output distribution of the trained ansatz.
Eigen::VectorXd qcbm_probabilities(const QcbmModel& model);

/// Trains against `target` with total-variation loss and SPSA. Returns the
/// best parameters seen. SampledRefine starts from its warm_start vector and
/// scores with shot frequencies (after optional bit-flip noise).
QcbmModel train_qcbm(const BitstringDistribution& target, int n_qubits, int layers, const QcbmStage& stage,
                     const SpsaOptions& options, std::uint64_t seed);

/// Flips each bit independently with probability noise_p.
void apply_bit_flips(std::vector<std::string>& samples, double noise_p, std::uint64_t seed);

std::vector<std::string> sample_qcbm(const QcbmModel& model, std::uint64_t shots, std::uint64_t seed, double noise_p);

/// Index of the one-hot codeword at minimum Hamming distance; ties to the
/// lowest index.
int mitigate(const std::string& sample, int k);
std::vector<int> mitigate(const std::vector<std::string>& samples, const Codebook& codebook);

PatchTensor decode(const std::vector<int>& indices, const Codebook& codebook);

/// sample -> mitigate -> decode, with generator provenance in the manifest.
PatchTensor synthesize_source(const QcbmModel& model, const Codebook& codebook, std::size_t n, std::uint64_t seed,
                              double noise_p, const std::string& name = "synthetic");

/// Codebook manifest JSON (entries excluded) and its entry tensor.
nlohmann::json codebook_manifest(const Codebook& codebook);
void write_codebook(const Codebook& codebook, const std::filesystem::path& stem);
Codebook read_codebook(const std::filesystem::path& stem);

}  // namespace qkscreen
