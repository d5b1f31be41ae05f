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

/// Data-encoding circuits: angle and IQP-style feature maps, their
/// adjoints, fidelity circuits for kernel entries, and seeded random
/// circuits for quanvolution.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "qkscreen/qsim.hpp"

namespace qkscreen {

enum class EncodingKind { Angle, IQP };
enum class Connectivity { AllPairs, Ring };

std::string to_string(EncodingKind kind);
std::string to_string(Connectivity c);
EncodingKind parse_encoding_kind(const std::string& s);

struct EncodingSpec {
    EncodingKind kind = EncodingKind::Angle;
    int n_qubits = 1;
    int iqp_repetitions = 2;
    Connectivity iqp_connectivity = Connectivity::AllPairs;

    /// Defaults for M features: AllPairs up to 8 qubits, Ring above.
    static EncodingSpec make(EncodingKind kind, int n_qubits);

    /// "angle" or "iqp" (IQP adds "-ring" when not all-pairs).
    std::string label() const;

    bool operator==(const EncodingSpec&) const = default;
};

void to_json(nlohmann::json& j, const EncodingSpec& spec);
void from_json(const nlohmann::json& j, EncodingSpec& spec);

/// Per-feature min-max map onto [0, pi]. Constant columns map to 0.
class FeatureScaler {
  public:
    FeatureScaler() = default;
    FeatureScaler(Eigen::VectorXd min, Eigen::VectorXd max);

    Eigen::Index dim() const noexcept { return min_.size(); }
    const Eigen::VectorXd& min() const noexcept { return min_; }
    const Eigen::VectorXd& max() const noexcept { return max_; }
    bool is_constant(Eigen::Index i) const { return !(max_[i] > min_[i]); }

    /// Values outside the fitted range are clamped so the output always lies
    /// in [0, pi].
    Eigen::VectorXd transform(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::MatrixXd transform_rows(const Eigen::Ref<const Eigen::MatrixXd>& data) const;

  private:
    Eigen::VectorXd min_, max_;
};

FeatureScaler fit_scaler(const Eigen::Ref<const Eigen::MatrixXd>& data);

/// RX(x[i]) on qubit i.
Circuit angle_encoding(const Eigen::Ref<const Eigen::VectorXd>& x);

/// r repetitions of [H on all; RZ(x_i); RZZ(x_i x_j) on connected pairs; H on all].
Circuit iqp_encoding(const Eigen::Ref<const Eigen::VectorXd>& x, const EncodingSpec& spec);

/// Dispatches on spec.kind after checking the feature dimension.
Circuit encode(const Eigen::Ref<const Eigen::VectorXd>& x, const EncodingSpec& spec);

/// Connected pairs (i < j) used by the IQP entangling layer.
std::vector<std::pair<int, int>> iqp_pairs(int n_qubits, Connectivity connectivity);

Circuit adjoint(const Circuit& circuit);

/// E(x_i) E^dagger(x_j): adjoint(E(x_j)) is applied first, then E(x_i).
Circuit fidelity_circuit(const Eigen::Ref<const Eigen::VectorXd>& x_i, const Eigen::Ref<const Eigen::VectorXd>& x_j,
                         const EncodingSpec& spec);

struct RandomCircuitSpec {
    int n_qubits = 4;
    int depth = 4;
    std::uint64_t seed = 0;

    bool operator==(const RandomCircuitSpec&) const = default;
};

void to_json(nlohmann::json& j, const RandomCircuitSpec& spec);
void from_json(const nlohmann::json& j, RandomCircuitSpec& spec);

/// Per layer: one rotation per qubit with kind drawn from {RX, RY, RZ} and
/// angle from [0, 2pi), then CZ(i, i+1 mod n) for every qubit i (omitted
/// when n = 1).
Circuit random_quanv_circuit(const RandomCircuitSpec& spec);

}  // namespace qkscreen
