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

#include "qkscreen/generative.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "qkscreen/featuremaps.hpp"
#include "qkscreen/rng.hpp"

namespace qkscreen {
namespace {

std::size_t count_distinct(const PatchTensor& patches, std::size_t enough) {
    std::set<std::vector<float>> seen;
    for (std::size_t i = 0; i < patches.n() && seen.size() < enough; ++i) {
        const auto p = patches.patch(i);
        seen.emplace(p.begin(), p.end());
    }
    return seen.size();
}

int nearest(const Eigen::Ref<const Eigen::RowVectorXd>& row, const Eigen::MatrixXd& entries) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index e = 0; e < entries.rows(); ++e) {
        const double d = (entries.row(e) - row).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(e);
        }
    }
    return best;
}

}  // namespace

Codebook fit_codebook(const PatchTensor& patches, int k, std::size_t iters, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("codebook size must be >= 1");
    if (patches.n() < static_cast<std::size_t>(k))
        throw std::invalid_argument("need at least k patches to fit a codebook");
    if (count_distinct(patches, static_cast<std::size_t>(k)) < static_cast<std::size_t>(k))
        throw std::invalid_argument("fewer distinct patches than codebook entries (k = " + std::to_string(k) + ")");

    const Eigen::MatrixXd rows = patches.as_rows();
    const Eigen::Index n = rows.rows();
    Rng rng(seed);

    // k-means++ seeding.
    Eigen::MatrixXd centers(k, rows.cols());
    centers.row(0) = rows.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = (rows.row(i) - centers.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        const double u = rng.uniform() * total;
        double acc = 0.0;
        Eigen::Index pick = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            acc += d2[i];
            pick = i;
            if (acc > u) break;
        }
        centers.row(c) = rows.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (rows.row(i) - centers.row(c)).squaredNorm());
    }

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    std::size_t it = 0;
    for (; it < std::max<std::size_t>(iters, 1); ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int a = nearest(rows.row(i), centers);
            if (a != assign[static_cast<std::size_t>(i)]) {
                assign[static_cast<std::size_t>(i)] = a;
                changed = true;
            }
        }
        if (!changed && it > 0) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, rows.cols());
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assign[static_cast<std::size_t>(i)]) += rows.row(i);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
                continue;
            }
            // Empty cluster: move it onto the point farthest from its center.
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double d = (rows.row(i) - centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            centers.row(c) = rows.row(far);
            assign[static_cast<std::size_t>(far)] = c;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) assign[static_cast<std::size_t>(i)] = nearest(rows.row(i), centers);

    // Order entries by descending count, then by first assigned patch.
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(k), 0);
    std::vector<Eigen::Index> first(static_cast<std::size_t>(k), n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto a = static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
        ++counts[a];
        first[a] = std::min(first[a], i);
    }
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
        if (counts[ua] != counts[ub]) return counts[ua] > counts[ub];
        return first[ua] < first[ub];
    });

    Codebook cb;
    cb.entries.resize(k, rows.cols());
    for (int r = 0; r < k; ++r) {
        cb.entries.row(r) = centers.row(order[static_cast<std::size_t>(r)]);
        cb.counts.push_back(counts[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])]);
    }
    cb.channels = patches.c();
    cb.height = patches.h();
    cb.width = patches.w();
    cb.channel_names = patches.channels;
    cb.units = patches.units;
    cb.iterations = it;
    cb.seed = seed;
    return cb;
}

std::vector<int> encode(const Eigen::Ref<const Eigen::MatrixXd>& rows, const Codebook& codebook) {
    if (rows.cols() != codebook.entries.cols()) throw std::invalid_argument("patch dimension does not match codebook");
    std::vector<int> out(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) out[static_cast<std::size_t>(i)] = nearest(rows.row(i), codebook.entries);
    return out;
}

std::vector<int> encode(const PatchTensor& patches, const Codebook& codebook) {
    if (patches.patch_size() != static_cast<std::size_t>(codebook.entries.cols()))
        throw std::invalid_argument("patch dimension does not match codebook");
    return encode(patches.as_rows(), codebook);
}

double BitstringDistribution::probability(const std::string& bits) const {
    const auto it = probabilities.find(bits);
    return it == probabilities.end() ? 0.0 : it->second;
}

Eigen::VectorXd BitstringDistribution::dense() const {
    check_qubit_count(n_qubits);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(Eigen::Index{1} << n_qubits);
    for (const auto& [bits, prob] : probabilities) {
        if (static_cast<int>(bits.size()) != n_qubits) throw std::invalid_argument("bitstring length mismatch");
        p[static_cast<Eigen::Index>(from_bitstring(bits))] += prob;
    }
    return p;
}

std::string one_hot(int index, int k) {
    if (index < 0 || index >= k) throw std::out_of_range("codeword index out of range");
    std::string s(static_cast<std::size_t>(k), '0');
    s[static_cast<std::size_t>(index)] = '1';
    return s;
}

BitstringDistribution empirical_distribution(const std::vector<int>& indices, int k) {
    if (indices.empty()) throw std::invalid_argument("empirical distribution of an empty index list");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(k), 0);
    for (int i : indices) {
        if (i < 0 || i >= k) throw std::out_of_range("codeword index out of range");
        ++counts[static_cast<std::size_t>(i)];
    }
    BitstringDistribution d;
    d.n_qubits = k;
    for (int i = 0; i < k; ++i)
        if (counts[static_cast<std::size_t>(i)] > 0)
            d.probabilities[one_hot(i, k)] =
                static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(indices.size());
    return d;
}

BitstringDistribution empirical_distribution(const std::vector<std::string>& samples) {
    if (samples.empty()) throw std::invalid_argument("empirical distribution of an empty sample list");
    BitstringDistribution d;
    d.n_qubits = static_cast<int>(samples.front().size());
    for (const auto& s : samples) d.probabilities[s] += 1.0;
    for (auto& [bits, p] : d.probabilities) p /= static_cast<double>(samples.size());
    return d;
}

double total_variation(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("distributions differ in size");
    return 0.5 * (p - q).cwiseAbs().sum();
}

double total_variation(const BitstringDistribution& a, const BitstringDistribution& b) {
    double acc = 0.0;
    for (const auto& [bits, p] : a.probabilities) acc += std::abs(p - b.probability(bits));
    for (const auto& [bits, p] : b.probabilities)
        if (!a.probabilities.count(bits)) acc += p;
    return 0.5 * acc;
}

Circuit qcbm_ansatz(int n_qubits, int layers, const Eigen::Ref<const Eigen::VectorXd>& theta) {
    if (theta.size() != static_cast<Eigen::Index>(layers) * 2 * n_qubits)
        throw std::invalid_argument("parameter count must be layers * 2 * n_qubits");
    Circuit c(n_qubits);
    const auto ring = iqp_pairs(n_qubits, Connectivity::Ring);
    Eigen::Index p = 0;
    for (int l = 0; l < layers; ++l) {
        for (int q = 0; q < n_qubits; ++q) {
            c.add(Gate::ry(q, theta[p++]));
            c.add(Gate::rz(q, theta[p++]));
        }
        for (const auto& [a, b] : ring) c.add(Gate::cz(a, b));
    }
    return c;
}

void to_json(nlohmann::json& j, const QcbmModel& m) {
    j = nlohmann::json{{"n_qubits", m.n_qubits},
                       {"layers", m.layers},
                       {"theta", std::vector<double>(m.theta.data(), m.theta.data() + m.theta.size())},
                       {"training_history", m.training_history},
                       {"initial_loss", m.initial_loss},
                       {"final_loss", m.final_loss},
                       {"stage", m.stage},
                       {"seed", m.seed}};
}

void from_json(const nlohmann::json& j, QcbmModel& m) {
    m.n_qubits = j.at("n_qubits").get<int>();
    m.layers = j.at("layers").get<int>();
    const auto theta = j.at("theta").get<std::vector<double>>();
    m.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    m.training_history = j.value("training_history", std::vector<double>{});
    m.initial_loss = j.value("initial_loss", 0.0);
    m.final_loss = j.value("final_loss", 0.0);
    m.stage = j.value("stage", std::string{});
    m.seed = j.value("seed", std::uint64_t{0});
}

namespace {

Eigen::VectorXd probabilities_of(int n_qubits, int layers, const Eigen::VectorXd& theta) {
    const Statevector s = run_circuit(qcbm_ansatz(n_qubits, layers, theta));
    return s.amplitudes().cwiseAbs2();
}

void check_noise(double noise_p) {
    if (!(noise_p >= 0.0 && noise_p < 0.5)) throw std::invalid_argument("noise_p must lie in [0, 0.5)");
}

}  // namespace

Eigen::VectorXd qcbm_probabilities(const QcbmModel& model) {
    return probabilities_of(model.n_qubits, model.layers, model.theta);
}

QcbmModel train_qcbm(const BitstringDistribution& target, int n_qubits, int layers, const QcbmStage& stage,
                     const SpsaOptions& options, std::uint64_t seed) {
    check_qubit_count(n_qubits);
    if (layers < 1) throw std::invalid_argument("layers must be >= 1");
    if (target.n_qubits != n_qubits) throw std::invalid_argument("target bitstring length does not match n_qubits");
    const Eigen::VectorXd q = target.dense();
    const Eigen::Index n_params = static_cast<Eigen::Index>(layers) * 2 * n_qubits;

    Rng rng(seed);
    Rng perturb = rng.split(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n_params);
    const auto* refine = std::get_if<SampledRefine>(&stage);
    if (refine) {
        if (refine->warm_start.size() != n_params)
            throw std::invalid_argument("warm start has " + std::to_string(refine->warm_start.size()) +
                                        " parameters, ansatz needs " + std::to_string(n_params));
        if (refine->shots == 0) throw std::invalid_argument("sampled refinement needs shots >= 1");
        check_noise(refine->noise_p);
        theta = refine->warm_start;
    } else if (options.marginal_init) {
        for (int b = 0; b < n_qubits; ++b) {
            double m = 0.0;
            for (Eigen::Index x = 0; x < q.size(); ++x)
                if ((static_cast<std::uint64_t>(x) >> b) & 1U) m += q[x];
            theta[2 * b] = 2.0 * std::asin(std::sqrt(std::clamp(m, 0.0, 1.0)));
        }
    } else if (options.init_scale > 0.0) {
        Rng init = rng.split(0);
        for (Eigen::Index i = 0; i < n_params; ++i) theta[i] = init.uniform(-options.init_scale, options.init_scale);
    }

    std::uint64_t eval_counter = 0;
    auto loss = [&](const Eigen::VectorXd& t) {
        if (!refine) return total_variation(probabilities_of(n_qubits, layers, t), q);
        const Statevector state = run_circuit(qcbm_ansatz(n_qubits, layers, t));
        const std::uint64_t s = derive_seed(seed, 2, eval_counter++);
        auto idx = sample_indices(state, refine->shots, s);
        if (refine->noise_p > 0.0) {
            Rng flips(derive_seed(s, 1));
            for (auto& v : idx)
                for (int b = 0; b < n_qubits; ++b)
                    if (flips.bernoulli(refine->noise_p)) v ^= std::uint64_t{1} << b;
        }
        Eigen::VectorXd freq = Eigen::VectorXd::Zero(q.size());
        for (auto v : idx) freq[static_cast<Eigen::Index>(v)] += 1.0;
        freq /= static_cast<double>(refine->shots);
        return total_variation(freq, q);
    };

    QcbmModel model;
    model.n_qubits = n_qubits;
    model.layers = layers;
    model.seed = seed;
    model.stage = refine ? "sampled_refine" : "exact_warm_start";
    model.initial_loss = loss(theta);
    Eigen::VectorXd best = theta;
    double best_loss = model.initial_loss;
    auto consider = [&](const Eigen::VectorXd& t, double l) {
        if (l < best_loss) {
            best_loss = l;
            best = t;
        }
    };

    for (std::size_t k = 0; k < options.iterations; ++k) {
        const double kk = static_cast<double>(k);
        const double ak = options.a / std::pow(kk + 1.0 + options.A, options.alpha);
        const double ck = options.c / std::pow(kk + 1.0, options.gamma);
        Eigen::VectorXd delta(n_params);
        for (Eigen::Index i = 0; i < n_params; ++i) delta[i] = perturb.bernoulli(0.5) ? 1.0 : -1.0;
        const Eigen::VectorXd plus = theta + ck * delta;
        const Eigen::VectorXd minus = theta - ck * delta;
        const double lp = loss(plus), lm = loss(minus);
        consider(plus, lp);
        consider(minus, lm);
        theta -= ak * (lp - lm) / (2.0 * ck) * delta;
        const double l = loss(theta);
        consider(theta, l);
        model.training_history.push_back(l);
    }
    model.theta = best;
    model.final_loss = best_loss;
    return model;
}

void apply_bit_flips(std::vector<std::string>& samples, double noise_p, std::uint64_t seed) {
    check_noise(noise_p);
    if (noise_p == 0.0) return;
    Rng rng(seed);
    for (auto& s : samples)
        for (auto& ch : s)
            if (rng.bernoulli(noise_p)) ch = ch == '0' ? '1' : '0';
}

std::vector<std::string> sample_qcbm(const QcbmModel& model, std::uint64_t shots, std::uint64_t seed, double noise_p) {
    check_noise(noise_p);
    const Statevector state = run_circuit(qcbm_ansatz(model.n_qubits, model.layers, model.theta));
    std::vector<std::string> out;
    out.reserve(shots);
    for (auto idx : sample_indices(state, shots, derive_seed(seed, 0))) out.push_back(to_bitstring(idx, model.n_qubits));
    apply_bit_flips(out, noise_p, derive_seed(seed, 1));
    return out;
}

int mitigate(const std::string& sample, int k) {
    if (static_cast<int>(sample.size()) != k) throw std::invalid_argument("sample length does not match codebook size");
    const auto weight = static_cast<int>(std::count(sample.begin(), sample.end(), '1'));
    int best = 0, best_d = std::numeric_limits<int>::max();
    for (int i = 0; i < k; ++i) {
        const int d = sample[static_cast<std::size_t>(i)] == '1' ? weight - 1 : weight + 1;
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::vector<int> mitigate(const std::vector<std::string>& samples, const Codebook& codebook) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(mitigate(s, codebook.k()));
    return out;
}

PatchTensor decode(const std::vector<int>& indices, const Codebook& codebook) {
    PatchTensor t("decoded", indices.size(), codebook.channels, codebook.height, codebook.width, codebook.channel_names,
                  codebook.units);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= codebook.k())
            throw std::out_of_range("codeword index " + std::to_string(indices[i]) + " outside codebook of size " +
                                    std::to_string(codebook.k()));
        auto dst = t.patch(i);
        const auto row = codebook.entries.row(indices[i]);
        for (std::size_t x = 0; x < dst.size(); ++x) dst[x] = static_cast<float>(row[static_cast<Eigen::Index>(x)]);
    }
    return t;
}

PatchTensor synthesize_source(const QcbmModel& model, const Codebook& codebook, std::size_t n, std::uint64_t seed,
                              double noise_p, const std::string& name) {
    if (model.n_qubits != codebook.k()) throw std::invalid_argument("model width does not match codebook size");
    check_noise(noise_p);
    std::vector<int> indices;
    if (n > 0) indices = mitigate(sample_qcbm(model, n, seed, noise_p), codebook);
    PatchTensor t = decode(indices, codebook);
    t.name = name;
    t.provenance = {{"generator", "qcbm_codebook"},
                    {"seed", seed},
                    {"noise_p", noise_p},
                    {"qcbm_seed", model.seed},
                    {"qcbm_stage", model.stage},
                    {"qcbm_layers", model.layers},
                    {"qcbm_initial_loss", model.initial_loss},
                    {"qcbm_final_loss", model.final_loss},
                    {"codebook_k", codebook.k()},
                    {"codebook_seed", codebook.seed}};
    return t;
}

nlohmann::json codebook_manifest(const Codebook& cb) {
    return {{"k", cb.k()},       {"n_qubits", cb.n_qubits()}, {"counts", cb.counts},
            {"iterations", cb.iterations}, {"seed", cb.seed}, {"scheme", "one_hot"}};
}

void write_codebook(const Codebook& cb, const std::filesystem::path& stem) {
    std::vector<int> all(static_cast<std::size_t>(cb.k()));
    std::iota(all.begin(), all.end(), 0);
    PatchTensor t = decode(all, cb);
    t.name = "codebook";
    t.provenance = {{"codebook", codebook_manifest(cb)}};
    write_tensor(t, stem);
}

Codebook read_codebook(const std::filesystem::path& stem) {
    const PatchTensor t = read_tensor(stem);
    if (!t.provenance.contains("codebook")) throw TensorFormatError("tensor is not a codebook: " + stem.string());
    const auto& meta = t.provenance.at("codebook");
    Codebook cb;
    cb.entries = t.as_rows();
    cb.channels = t.c();
    cb.height = t.h();
    cb.width = t.w();
    cb.channel_names = t.channels;
    cb.units = t.units;
    cb.counts = meta.at("counts").get<std::vector<std::uint64_t>>();
    cb.iterations = meta.value("iterations", std::size_t{0});
    cb.seed = meta.value("seed", std::uint64_t{0});
    return cb;
}

}  // namespace qkscreen
