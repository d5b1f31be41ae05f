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

#include "qkscreen/featuremaps.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

#include "qkscreen/rng.hpp"

namespace qkscreen {

std::string to_string(EncodingKind kind) { return kind == EncodingKind::Angle ? "angle" : "iqp"; }

std::string to_string(Connectivity c) { return c == Connectivity::AllPairs ? "all_pairs" : "ring"; }

EncodingKind parse_encoding_kind(const std::string& s) {
    if (s == "angle") return EncodingKind::Angle;
    if (s == "iqp") return EncodingKind::IQP;
    throw std::invalid_argument("unknown encoding '" + s + "' (expected angle or iqp)");
}

EncodingSpec EncodingSpec::make(EncodingKind kind, int n_qubits) {
    EncodingSpec spec;
    spec.kind = kind;
    spec.n_qubits = n_qubits;
    spec.iqp_connectivity = n_qubits <= 8 ? Connectivity::AllPairs : Connectivity::Ring;
    return spec;
}

std::string EncodingSpec::label() const {
    if (kind == EncodingKind::Angle) return "angle";
    return iqp_connectivity == Connectivity::AllPairs ? "iqp" : "iqp-ring";
}

void to_json(nlohmann::json& j, const EncodingSpec& spec) {
    j = nlohmann::json{{"kind", to_string(spec.kind)},
                       {"n_qubits", spec.n_qubits},
                       {"iqp_repetitions", spec.iqp_repetitions},
                       {"iqp_connectivity", to_string(spec.iqp_connectivity)}};
}

void from_json(const nlohmann::json& j, EncodingSpec& spec) {
    spec.kind = parse_encoding_kind(j.at("kind").get<std::string>());
    spec.n_qubits = j.at("n_qubits").get<int>();
    spec.iqp_repetitions = j.value("iqp_repetitions", 2);
    const auto conn = j.value("iqp_connectivity", std::string("all_pairs"));
    if (conn == "all_pairs")
        spec.iqp_connectivity = Connectivity::AllPairs;
    else if (conn == "ring")
        spec.iqp_connectivity = Connectivity::Ring;
    else
        throw std::invalid_argument("unknown iqp_connectivity '" + conn + "'");
}

FeatureScaler::FeatureScaler(Eigen::VectorXd min, Eigen::VectorXd max) : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) throw std::invalid_argument("scaler bounds differ in length");
    for (Eigen::Index i = 0; i < min_.size(); ++i)
        if (min_[i] > max_[i]) throw std::invalid_argument("scaler min exceeds max");
}

Eigen::VectorXd FeatureScaler::transform(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim()) throw std::invalid_argument("feature dimension does not match scaler");
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (is_constant(i)) {
            out[i] = 0.0;
            continue;
        }
        const double t = (x[i] - min_[i]) / (max_[i] - min_[i]);
        out[i] = std::clamp(t, 0.0, 1.0) * std::numbers::pi;
    }
    return out;
}

Eigen::MatrixXd FeatureScaler::transform_rows(const Eigen::Ref<const Eigen::MatrixXd>& data) const {
    Eigen::MatrixXd out(data.rows(), data.cols());
    for (Eigen::Index r = 0; r < data.rows(); ++r) out.row(r) = transform(data.row(r).transpose()).transpose();
    return out;
}

FeatureScaler fit_scaler(const Eigen::Ref<const Eigen::MatrixXd>& data) {
    if (data.rows() == 0 || data.cols() == 0) throw std::invalid_argument("cannot fit scaler on empty matrix");
    return FeatureScaler(data.colwise().minCoeff().transpose(), data.colwise().maxCoeff().transpose());
}

namespace {

void check_angles(const Eigen::Ref<const Eigen::VectorXd>& x) {
    constexpr double slack = 1e-12;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x[i] >= -slack && x[i] <= std::numbers::pi + slack))
            throw std::domain_error("encoded feature " + std::to_string(i) + " outside [0, pi]");
}

}  // namespace

Circuit angle_encoding(const Eigen::Ref<const Eigen::VectorXd>& x) {
    check_angles(x);
    Circuit c(static_cast<int>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) c.add(Gate::rx(static_cast<int>(i), x[i]));
    return c;
}

std::vector<std::pair<int, int>> iqp_pairs(int n_qubits, Connectivity connectivity) {
    std::vector<std::pair<int, int>> pairs;
    if (connectivity == Connectivity::AllPairs) {
        for (int i = 0; i < n_qubits; ++i)
            for (int j = i + 1; j < n_qubits; ++j) pairs.emplace_back(i, j);
        return pairs;
    }
    for (int i = 0; i < n_qubits; ++i) {
        int a = i, b = (i + 1) % n_qubits;
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (std::find(pairs.begin(), pairs.end(), std::pair{a, b}) == pairs.end()) pairs.emplace_back(a, b);
    }
    return pairs;
}

Circuit iqp_encoding(const Eigen::Ref<const Eigen::VectorXd>& x, const EncodingSpec& spec) {
    if (spec.kind != EncodingKind::IQP) throw std::invalid_argument("iqp_encoding needs an IQP spec");
    if (x.size() != spec.n_qubits) throw std::invalid_argument("feature dimension does not match encoding width");
    if (spec.iqp_repetitions < 1) throw std::invalid_argument("iqp_repetitions must be >= 1");
    check_angles(x);
    const int n = spec.n_qubits;
    const auto pairs = iqp_pairs(n, spec.iqp_connectivity);
    Circuit c(n);
    for (int r = 0; r < spec.iqp_repetitions; ++r) {
        for (int q = 0; q < n; ++q) c.add(Gate::h(q));
        for (int q = 0; q < n; ++q) c.add(Gate::rz(q, x[q]));
        for (const auto& [i, j] : pairs) c.add(Gate::rzz(i, j, x[i] * x[j]));
        for (int q = 0; q < n; ++q) c.add(Gate::h(q));
    }
    return c;
}

Circuit encode(const Eigen::Ref<const Eigen::VectorXd>& x, const EncodingSpec& spec) {
    if (x.size() != spec.n_qubits) throw std::invalid_argument("feature dimension does not match encoding width");
    return spec.kind == EncodingKind::Angle ? angle_encoding(x) : iqp_encoding(x, spec);
}

Circuit adjoint(const Circuit& circuit) {
    Circuit out(circuit.n_qubits);
    out.gates.reserve(circuit.gates.size());
    for (auto it = circuit.gates.rbegin(); it != circuit.gates.rend(); ++it) out.gates.push_back(it->inverse());
    return out;
}

Circuit fidelity_circuit(const Eigen::Ref<const Eigen::VectorXd>& x_i, const Eigen::Ref<const Eigen::VectorXd>& x_j,
                         const EncodingSpec& spec) {
    Circuit c = adjoint(encode(x_j, spec));
    c.append(encode(x_i, spec));
    return c;
}

void to_json(nlohmann::json& j, const RandomCircuitSpec& spec) {
    j = nlohmann::json{{"n_qubits", spec.n_qubits}, {"depth", spec.depth}, {"seed", spec.seed}};
}

void from_json(const nlohmann::json& j, RandomCircuitSpec& spec) {
    spec.n_qubits = j.at("n_qubits").get<int>();
    spec.depth = j.at("depth").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
}

Circuit random_quanv_circuit(const RandomCircuitSpec& spec) {
    check_qubit_count(spec.n_qubits);
    if (spec.depth < 0) throw std::invalid_argument("depth must be non-negative");
    const int n = spec.n_qubits;
    Rng rng(spec.seed);
    Circuit c(n);
    for (int layer = 0; layer < spec.depth; ++layer) {
        for (int q = 0; q < n; ++q) {
            static constexpr GateKind kinds[] = {GateKind::RX, GateKind::RY, GateKind::RZ};
            const GateKind kind = kinds[rng.below(3)];
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            c.add(Gate{kind, {q, -1}, angle});
        }
        if (n > 1)
            for (int q = 0; q < n; ++q) c.add(Gate::cz(q, (q + 1) % n));
    }
    return c;
}

}  // namespace qkscreen
