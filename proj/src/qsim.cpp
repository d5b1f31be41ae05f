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

#include "qkscreen/qsim.hpp"

#include <algorithm>

#include "qkscreen/rng.hpp"

namespace qkscreen {

std::string_view to_string(GateKind kind) {
    switch (kind) {
        case GateKind::H: return "H";
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::CZ: return "CZ";
        case GateKind::CNOT: return "CNOT";
        case GateKind::RZZ: return "RZZ";
    }
    return "?";
}

void validate_gate(const Gate& g, int n_qubits) {
    const int k = arity(g.kind);
    for (int t = 0; t < k; ++t) {
        if (g.targets[t] < 0 || g.targets[t] >= n_qubits)
            throw std::out_of_range(std::string(to_string(g.kind)) + " target " + std::to_string(g.targets[t]) +
                                    " out of range for " + std::to_string(n_qubits) + " qubits");
    }
    if (k == 2 && g.targets[0] == g.targets[1])
        throw std::out_of_range(std::string(to_string(g.kind)) + " targets must be distinct");
}

Circuit& Circuit::append(const Circuit& other) {
    if (other.n_qubits != n_qubits) throw std::invalid_argument("cannot append circuits of different width");
    gates.insert(gates.end(), other.gates.begin(), other.gates.end());
    return *this;
}

Statevector run_circuit(const Circuit& circuit) {
    Statevector state(circuit.n_qubits);
    state.apply(circuit);
    return state;
}

double prob_all_zero(const Statevector& state) { return std::norm(state[0]); }

double expectation_z(const Statevector& state, int qubit) {
    if (qubit < 0 || qubit >= state.n_qubits()) throw std::out_of_range("qubit out of range");
    const std::size_t mask = std::size_t{1} << qubit;
    double acc = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        const double p = std::norm(state[i]);
        acc += (i & mask) ? -p : p;
    }
    return acc;
}

std::string to_bitstring(std::uint64_t index, int n_qubits) {
    std::string s(static_cast<std::size_t>(n_qubits), '0');
    for (int k = 0; k < n_qubits; ++k)
        if ((index >> k) & 1U) s[static_cast<std::size_t>(k)] = '1';
    return s;
}

std::uint64_t from_bitstring(std::string_view bits) {
    std::uint64_t index = 0;
    for (std::size_t k = 0; k < bits.size(); ++k) {
        if (bits[k] == '1')
            index |= std::uint64_t{1} << k;
        else if (bits[k] != '0')
            throw std::invalid_argument("bitstring may only contain '0' and '1'");
    }
    return index;
}

namespace {

std::vector<double> cumulative(const Statevector& state) {
    std::vector<double> cdf(state.dim());
    double acc = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        acc += std::norm(state[i]);
        cdf[i] = acc;
    }
    return cdf;
}

void check_shots(std::uint64_t shots) {
    if (shots == 0) throw std::invalid_argument("shots must be at least 1");
}

}  // namespace

std::vector<std::uint64_t> sample_indices(const Statevector& state, std::uint64_t shots, std::uint64_t seed) {
    check_shots(shots);
    const auto cdf = cumulative(state);
    // Rounding can leave the total slightly below 1; draws past it go to the
    // last outcome with nonzero weight.
    std::size_t last = cdf.size() - 1;
    while (last > 0 && cdf[last] == cdf[last - 1]) --last;
    Rng rng(seed);
    std::vector<std::uint64_t> out(shots);
    for (auto& o : out) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        o = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), last);
    }
    return out;
}

ShotResult sample(const Statevector& state, std::uint64_t shots, std::uint64_t seed) {
    ShotResult result;
    result.shots = shots;
    result.seed = seed;
    std::map<std::uint64_t, std::uint64_t> by_index;
    for (auto i : sample_indices(state, shots, seed)) ++by_index[i];
    for (const auto& [i, c] : by_index) result.counts.emplace(to_bitstring(i, state.n_qubits()), c);
    return result;
}

std::uint64_t count_all_zero(double p_zero, std::uint64_t shots, std::uint64_t seed) {
    check_shots(shots);
    Rng rng(seed);
    std::uint64_t zeros = 0;
    for (std::uint64_t s = 0; s < shots; ++s)
        if (rng.uniform() < p_zero) ++zeros;
    return zeros;
}

std::uint64_t count_all_zero(const Statevector& state, std::uint64_t shots, std::uint64_t seed) {
    return count_all_zero(prob_all_zero(state), shots, seed);
}

}  // namespace qkscreen
