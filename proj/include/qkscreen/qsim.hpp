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

/// Exact statevector simulator.
///
/// Amplitude layout: bit k (little-endian) of the basis index is qubit k.
/// Bitstrings are rendered with character k holding qubit k, so the basis
/// index 1 on three qubits prints as "100".

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace qkscreen {

inline constexpr int kMaxQubits = 20;

enum class GateKind { H, RX, RY, RZ, CZ, CNOT, RZZ };

constexpr int arity(GateKind kind) noexcept {
    switch (kind) {
        case GateKind::CZ:
        case GateKind::CNOT:
        case GateKind::RZZ:
            return 2;
        default:
            return 1;
    }
}

constexpr bool is_rotation(GateKind kind) noexcept {
    return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ ||
           kind == GateKind::RZZ;
}

std::string_view to_string(GateKind kind);

/// One gate. For CNOT, targets[0] is the control. Single-qubit gates leave
/// targets[1] at -1.
struct Gate {
    GateKind kind = GateKind::H;
    std::array<int, 2> targets{0, -1};
    double angle = 0.0;

    static Gate h(int q) { return {GateKind::H, {q, -1}, 0.0}; }
    static Gate rx(int q, double theta) { return {GateKind::RX, {q, -1}, theta}; }
    static Gate ry(int q, double theta) { return {GateKind::RY, {q, -1}, theta}; }
    static Gate rz(int q, double theta) { return {GateKind::RZ, {q, -1}, theta}; }
    static Gate cz(int a, int b) { return {GateKind::CZ, {a, b}, 0.0}; }
    static Gate cnot(int control, int target) { return {GateKind::CNOT, {control, target}, 0.0}; }
    static Gate rzz(int a, int b, double theta) { return {GateKind::RZZ, {a, b}, theta}; }

    /// Inverse gate: rotations negate their angle, the rest are self-inverse.
    Gate inverse() const {
        Gate g = *this;
        if (is_rotation(kind)) g.angle = -angle;
        return g;
    }

    bool operator==(const Gate&) const = default;
};

/// Throws std::out_of_range unless every target of `g` is distinct and
/// below n_qubits.
void validate_gate(const Gate& g, int n_qubits);

/// Ordered gate list; gates[0] acts on the state first.
struct Circuit {
    int n_qubits = 0;
    std::vector<Gate> gates;

    Circuit() = default;
    explicit Circuit(int n) : n_qubits(n) {}

    Circuit& add(const Gate& g) {
        validate_gate(g, n_qubits);
        gates.push_back(g);
        return *this;
    }

    Circuit& append(const Circuit& other);

    std::size_t size() const noexcept { return gates.size(); }
    bool operator==(const Circuit&) const = default;
};

inline void check_qubit_count(int n) {
    if (n < 1 || n > kMaxQubits)
        throw std::invalid_argument("qubit count " + std::to_string(n) + " outside supported range 1.." +
                                    std::to_string(kMaxQubits));
}

template <typename Real>
class BasicStatevector {
  public:
    using Scalar = Real;
    using Complex = std::complex<Real>;
    using Amplitudes = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

    /// |0...0> on n qubits.
    explicit BasicStatevector(int n_qubits) : n_(n_qubits) {
        check_qubit_count(n_qubits);
        amps_ = Amplitudes::Zero(Eigen::Index{1} << n_qubits);
        amps_[0] = Complex(1);
    }

    BasicStatevector(int n_qubits, Amplitudes amplitudes) : n_(n_qubits), amps_(std::move(amplitudes)) {
        check_qubit_count(n_qubits);
        if (amps_.size() != (Eigen::Index{1} << n_qubits))
            throw std::invalid_argument("amplitude count does not match 2^n_qubits");
    }

    int n_qubits() const noexcept { return n_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
    const Amplitudes& amplitudes() const noexcept { return amps_; }
    Complex operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }

    Real norm() const { return amps_.norm(); }

    void apply(const Gate& g) {
        validate_gate(g, n_);
        const int q = g.targets[0];
        const Real half = static_cast<Real>(g.angle) / Real(2);
        switch (g.kind) {
            case GateKind::H: {
                const Real s = Real(1) / std::sqrt(Real(2));
                apply_1q(q, Complex(s), Complex(s), Complex(s), Complex(-s));
                break;
            }
            case GateKind::RX: {
                const Complex c(std::cos(half)), ms(0, -std::sin(half));
                apply_1q(q, c, ms, ms, c);
                break;
            }
            case GateKind::RY: {
                const Complex c(std::cos(half)), s(std::sin(half));
                apply_1q(q, c, -s, s, c);
                break;
            }
            case GateKind::RZ:
                apply_phase_1q(q, std::polar(Real(1), -half), std::polar(Real(1), half));
                break;
            case GateKind::CZ:
                apply_cz(q, g.targets[1]);
                break;
            case GateKind::CNOT:
                apply_cnot(q, g.targets[1]);
                break;
            case GateKind::RZZ:
                apply_rzz(q, g.targets[1], std::polar(Real(1), -half), std::polar(Real(1), half));
                break;
        }
    }

    void apply(const Circuit& c) {
        if (c.n_qubits != n_) throw std::invalid_argument("circuit width does not match state");
        for (const auto& g : c.gates) apply(g);
    }

  private:
    // [[m00, m01], [m10, m11]] acting on qubit q.
    void apply_1q(int q, Complex m00, Complex m01, Complex m10, Complex m11) {
        const std::size_t mask = std::size_t{1} << q;
        const std::size_t d = dim();
        Complex* a = amps_.data();
        for (std::size_t base = 0; base < d; base += 2 * mask) {
            for (std::size_t i = base; i < base + mask; ++i) {
                const Complex a0 = a[i];
                const Complex a1 = a[i | mask];
                a[i] = m00 * a0 + m01 * a1;
                a[i | mask] = m10 * a0 + m11 * a1;
            }
        }
    }

    void apply_phase_1q(int q, Complex p0, Complex p1) {
        const std::size_t mask = std::size_t{1} << q;
        Complex* a = amps_.data();
        for (std::size_t i = 0; i < dim(); ++i) a[i] *= (i & mask) ? p1 : p0;
    }

    void apply_cz(int qa, int qb) {
        const std::size_t both = (std::size_t{1} << qa) | (std::size_t{1} << qb);
        Complex* a = amps_.data();
        for (std::size_t i = 0; i < dim(); ++i)
            if ((i & both) == both) a[i] = -a[i];
    }

    void apply_cnot(int control, int target) {
        const std::size_t cmask = std::size_t{1} << control;
        const std::size_t tmask = std::size_t{1} << target;
        Complex* a = amps_.data();
        for (std::size_t i = 0; i < dim(); ++i)
            if ((i & cmask) && !(i & tmask)) std::swap(a[i], a[i | tmask]);
    }

    void apply_rzz(int qa, int qb, Complex even, Complex odd) {
        const std::size_t ma = std::size_t{1} << qa;
        const std::size_t mb = std::size_t{1} << qb;
        Complex* a = amps_.data();
        for (std::size_t i = 0; i < dim(); ++i) a[i] *= (((i & ma) != 0) == ((i & mb) != 0)) ? even : odd;
    }

    int n_;
    Amplitudes amps_;
};

using Statevector = BasicStatevector<double>;

/// Applies the circuit's gates in order to |0...0>.
Statevector run_circuit(const Circuit& circuit);

double prob_all_zero(const Statevector& state);

/// <Z> on `qubit`: +1 weight where the qubit's bit is 0.
double expectation_z(const Statevector& state, int qubit);

struct ShotResult {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
};

std::string to_bitstring(std::uint64_t index, int n_qubits);
std::uint64_t from_bitstring(std::string_view bits);

/// Basis indices of `shots` independent draws from |amp|^2.
std::vector<std::uint64_t> sample_indices(const Statevector& state, std::uint64_t shots, std::uint64_t seed);

ShotResult sample(const Statevector& state, std::uint64_t shots, std::uint64_t seed);

/// Number of all-zero outcomes among `shots` draws. Consumes the same random
/// stream as sample_indices, so it equals counts["0...0"] of sample() for the
/// same (state, shots, seed).
std::uint64_t count_all_zero(const Statevector& state, std::uint64_t shots, std::uint64_t seed);

/// Same as count_all_zero when only the all-zero probability is known.
std::uint64_t count_all_zero(double p_zero, std::uint64_t shots, std::uint64_t seed);

}  // namespace qkscreen
