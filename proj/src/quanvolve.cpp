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

#include "qkscreen/quanvolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "qkscreen/parallel.hpp"
#include "qkscreen/qsim.hpp"
#include "qkscreen/rng.hpp"

namespace qkscreen {

using json = nlohmann::json;

QuanvLayerSpec QuanvLayerSpec::make(EncodingKind kind, int patch_size, int stride, int depth,
                                    std::uint64_t circuit_seed, std::uint64_t shots) {
    QuanvLayerSpec s;
    s.patch_size = patch_size;
    s.stride = stride;
    s.encoding = EncodingSpec::make(kind, patch_size * patch_size);
    s.circuit = RandomCircuitSpec{patch_size * patch_size, depth, circuit_seed};
    s.shots = shots;
    return s;
}

void QuanvLayerSpec::validate() const {
    if (patch_size < 1) throw std::invalid_argument("patch size must be >= 1");
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    check_qubit_count(n_qubits());
    if (encoding.n_qubits != n_qubits() || circuit.n_qubits != n_qubits())
        throw std::invalid_argument("encoding and circuit width must equal patch_size^2 = " +
                                    std::to_string(n_qubits()));
    if (circuit.depth < 0) throw std::invalid_argument("circuit depth must be >= 0");
    if (shots == 0) throw std::invalid_argument("shots must be positive");
}

void to_json(json& j, const QuanvLayerSpec& s) {
    j = json{{"patch_size", s.patch_size}, {"stride", s.stride}, {"encoding", s.encoding},
             {"circuit", s.circuit},       {"shots", s.shots}};
}

void from_json(const json& j, QuanvLayerSpec& s) {
    j.at("patch_size").get_to(s.patch_size);
    j.at("stride").get_to(s.stride);
    j.at("encoding").get_to(s.encoding);
    j.at("circuit").get_to(s.circuit);
    j.at("shots").get_to(s.shots);
}

std::string fingerprint(const QuanvLayerSpec& spec) { return text_digest(json(spec).dump()); }

PatchGrid extract_patches(const std::vector<Eigen::MatrixXd>& channels, int patch_size, int stride) {
    if (channels.empty()) throw std::invalid_argument("extract_patches: no channels");
    if (patch_size < 1 || stride < 1) throw std::invalid_argument("extract_patches: size and stride must be >= 1");
    const Eigen::Index H = channels.front().rows(), W = channels.front().cols();
    for (const auto& c : channels)
        if (c.rows() != H || c.cols() != W) throw std::invalid_argument("extract_patches: channel shapes differ");
    if (H < patch_size || W < patch_size) throw std::invalid_argument("extract_patches: image smaller than patch");

    PatchGrid g;
    g.channels = static_cast<int>(channels.size());
    g.grid_h = static_cast<int>((H - patch_size) / stride + 1);
    g.grid_w = static_cast<int>((W - patch_size) / stride + 1);
    const Eigen::Index cells = static_cast<Eigen::Index>(g.grid_h) * g.grid_w;
    g.patches.resize(g.channels * cells, patch_size * patch_size);
    for (int c = 0; c < g.channels; ++c)
        for (int gy = 0; gy < g.grid_h; ++gy)
            for (int gx = 0; gx < g.grid_w; ++gx) {
                const Eigen::Index row = c * cells + gy * g.grid_w + gx;
                for (int dy = 0; dy < patch_size; ++dy)
                    for (int dx = 0; dx < patch_size; ++dx)
                        g.patches(row, dy * patch_size + dx) = channels[c](gy * stride + dy, gx * stride + dx);
            }
    return g;
}

PatchGrid extract_patches(const PatchTensor& t, std::size_t example, int patch_size, int stride) {
    if (example >= t.n()) throw std::out_of_range("extract_patches: example index out of range");
    std::vector<Eigen::MatrixXd> channels;
    channels.reserve(t.c());
    for (std::size_t c = 0; c < t.c(); ++c) channels.push_back(t.image(example, c).cast<double>());
    return extract_patches(channels, patch_size, stride);
}

Eigen::VectorXd ChannelScaler::transform(const Eigen::Ref<const Eigen::VectorXd>& patch, std::size_t channel) const {
    if (channel >= min.size()) throw std::out_of_range("ChannelScaler: channel out of range");
    const double lo = min[channel], hi = max[channel];
    Eigen::VectorXd out(patch.size());
    for (Eigen::Index i = 0; i < patch.size(); ++i) {
        if (!(hi > lo)) {
            out[i] = 0.0;
            continue;
        }
        out[i] = std::clamp((patch[i] - lo) / (hi - lo), 0.0, 1.0) * std::numbers::pi;
    }
    return out;
}

ChannelScaler fit_channel_scaler(const PatchTensor& train) {
    if (train.n() == 0 || train.c() == 0) throw std::invalid_argument("fit_channel_scaler: empty tensor");
    ChannelScaler s;
    s.min.assign(train.c(), std::numeric_limits<double>::infinity());
    s.max.assign(train.c(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < train.n(); ++i)
        for (std::size_t c = 0; c < train.c(); ++c) {
            const auto img = train.image(i, c);
            s.min[c] = std::min(s.min[c], static_cast<double>(img.minCoeff()));
            s.max[c] = std::max(s.max[c], static_cast<double>(img.maxCoeff()));
        }
    return s;
}

QuanvLayer::QuanvLayer(QuanvLayerSpec spec, ChannelScaler scaler)
    : spec_(std::move(spec)), scaler_(std::move(scaler)) {
    spec_.validate();
    circuit_ = random_quanv_circuit(spec_.circuit);
}

Eigen::VectorXd QuanvLayer::quanvolve_angles(const Eigen::Ref<const Eigen::VectorXd>& angles,
                                             const QuanvMode& mode) const {
    Circuit c = encode(angles, spec_.encoding);
    c.append(circuit_);
    const Statevector state = run_circuit(c);
    const int n = spec_.n_qubits();
    Eigen::VectorXd z(n);
    if (!mode.sampled) {
        for (int q = 0; q < n; ++q) z[q] = expectation_z(state, q);
        return z;
    }
    z.setZero();
    for (const std::uint64_t idx : sample_indices(state, spec_.shots, mode.seed))
        for (int q = 0; q < n; ++q) z[q] += ((idx >> q) & 1U) ? -1.0 : 1.0;
    return z / static_cast<double>(spec_.shots);
}

Eigen::VectorXd QuanvLayer::quanvolve_patch(const Eigen::Ref<const Eigen::VectorXd>& patch, std::size_t channel,
                                            const QuanvMode& mode) const {
    return quanvolve_angles(scaler_.transform(patch, channel), mode);
}

Eigen::MatrixXd patch_population(const PatchTensor& t, const QuanvLayer& layer) {
    const auto& spec = layer.spec();
    std::vector<PatchGrid> grids(t.n());
    parallel_for(t.n(), [&](std::size_t i) { grids[i] = extract_patches(t, i, spec.patch_size, spec.stride); });
    Eigen::Index rows = 0;
    for (const auto& g : grids) rows += g.patches.rows();
    Eigen::MatrixXd out(rows, spec.n_qubits());
    Eigen::Index r = 0;
    for (const auto& g : grids) {
        const Eigen::Index cells = static_cast<Eigen::Index>(g.grid_h) * g.grid_w;
        for (Eigen::Index k = 0; k < g.patches.rows(); ++k)
            out.row(r++) = layer.scaler().transform(g.patches.row(k).transpose(), static_cast<std::size_t>(k / cells));
    }
    return out;
}

FeatureDictionary build_dictionary(const Eigen::Ref<const Eigen::MatrixXd>& population, const QuanvLayer& layer,
                                   Eigen::Index K, std::uint64_t seed, bool sampled) {
    const Eigen::Index P = population.rows();
    if (K < 1) throw std::invalid_argument("dictionary size must be >= 1");
    if (K > P)
        throw std::invalid_argument("dictionary size " + std::to_string(K) + " exceeds the training patch population of " +
                                    std::to_string(P));
    if (population.cols() != layer.spec().n_qubits())
        throw std::invalid_argument("population width does not match the layer");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(P));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(derive_seed(seed, 0));
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto j = k + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(P - k)));
        std::swap(order[k], order[j]);
    }

    FeatureDictionary d;
    d.seed = seed;
    d.spec_fingerprint = fingerprint(layer.spec());
    d.centroids.resize(K, population.cols());
    d.outputs.resize(K, layer.spec().n_qubits());
    for (Eigen::Index k = 0; k < K; ++k) d.centroids.row(k) = population.row(order[k]);
    parallel_for(static_cast<std::size_t>(K), [&](std::size_t k) {
        const QuanvMode mode = sampled ? QuanvMode::sampling(derive_seed(seed, 1, k)) : QuanvMode::exact();
        d.outputs.row(static_cast<Eigen::Index>(k)) =
            layer.quanvolve_angles(d.centroids.row(static_cast<Eigen::Index>(k)).transpose(), mode).transpose();
    });
    return d;
}

Eigen::Index nearest_centroid(const Eigen::Ref<const Eigen::VectorXd>& query, const FeatureDictionary& dict) {
    if (dict.size() == 0) throw std::invalid_argument("empty dictionary");
    if (query.size() != dict.centroids.cols()) throw std::invalid_argument("query width does not match dictionary");
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < dict.size(); ++k) {
        const double dist = (dict.centroids.row(k).transpose() - query).squaredNorm();
        if (dist < best_d) {
            best_d = dist;
            best = k;
        }
    }
    return best;
}

Eigen::VectorXd lookup(const Eigen::Ref<const Eigen::VectorXd>& query, const FeatureDictionary& dict) {
    return dict.outputs.row(nearest_centroid(query, dict)).transpose();
}

void write_dictionary(const FeatureDictionary& dict, const QuanvLayerSpec& spec, const std::filesystem::path& stem) {
    const Eigen::Index K = dict.size(), d = dict.centroids.cols(), o = dict.outputs.cols();
    json m{{"name", "dictionary"},
           {"dtype", "f64le"},
           {"K", K},
           {"input_dim", d},
           {"output_dim", o},
           {"layout", "centroids row-major then outputs row-major"},
           {"spec", spec},
           {"spec_fingerprint", dict.spec_fingerprint},
           {"seed", dict.seed}};
    std::string bytes;
    bytes.reserve(static_cast<std::size_t>(K * (d + o)) * sizeof(double));
    auto put = [&](const Eigen::MatrixXd& mat) {
        for (Eigen::Index r = 0; r < mat.rows(); ++r)
            for (Eigen::Index c = 0; c < mat.cols(); ++c) {
                const double v = mat(r, c);
                bytes.append(reinterpret_cast<const char*>(&v), sizeof v);
            }
    };
    put(dict.centroids);
    put(dict.outputs);
    write_file_atomic(payload_path(stem), bytes);
    write_file_atomic(manifest_path(stem), m.dump(2) + "\n");
}

FeatureDictionary read_dictionary(const std::filesystem::path& stem) {
    std::ifstream mf(manifest_path(stem));
    if (!mf) throw TensorFormatError("cannot open " + manifest_path(stem).string());
    json m;
    try {
        m = json::parse(mf);
    } catch (const json::exception& e) {
        throw TensorFormatError(std::string("bad dictionary manifest: ") + e.what());
    }
    if (m.value("dtype", "") != "f64le") throw TensorFormatError("dictionary dtype must be f64le");
    const auto K = m.at("K").get<Eigen::Index>();
    const auto d = m.at("input_dim").get<Eigen::Index>();
    const auto o = m.at("output_dim").get<Eigen::Index>();
    std::ifstream in(payload_path(stem), std::ios::binary);
    if (!in) throw TensorFormatError("cannot open " + payload_path(stem).string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t expected = static_cast<std::size_t>(K * (d + o)) * sizeof(double);
    if (raw.size() != expected)
        throw TensorFormatError("dictionary payload length mismatch: expected " + std::to_string(expected) +
                                " bytes, found " + std::to_string(raw.size()));
    FeatureDictionary dict;
    dict.seed = m.at("seed").get<std::uint64_t>();
    dict.spec_fingerprint = m.at("spec_fingerprint").get<std::string>();
    dict.centroids.resize(K, d);
    dict.outputs.resize(K, o);
    const char* p = raw.data();
    auto take = [&](Eigen::MatrixXd& mat) {
        for (Eigen::Index r = 0; r < mat.rows(); ++r)
            for (Eigen::Index c = 0; c < mat.cols(); ++c) {
                std::memcpy(&mat(r, c), p, sizeof(double));
                p += sizeof(double);
            }
    };
    take(dict.centroids);
    take(dict.outputs);
    return dict;
}

namespace {

void check_source(const QuanvSource& source, const QuanvLayer& layer) {
    if (source.direct.has_value() == (source.dictionary != nullptr))
        throw std::invalid_argument("quanvolve: exactly one of direct mode or dictionary must be set");
    if (source.dictionary) {
        if (source.dictionary->centroids.cols() != layer.spec().n_qubits())
            throw std::invalid_argument("dictionary width does not match the layer");
        if (source.dictionary->spec_fingerprint != fingerprint(layer.spec()))
            throw std::invalid_argument("dictionary was built for a different layer spec");
    }
}

void fill_example(PatchTensor& out, std::size_t out_index, const PatchTensor& t, std::size_t example,
                  const QuanvLayer& layer, const QuanvSource& source) {
    const auto& spec = layer.spec();
    const PatchGrid g = extract_patches(t, example, spec.patch_size, spec.stride);
    const int nq = spec.n_qubits();
    const Eigen::Index cells = static_cast<Eigen::Index>(g.grid_h) * g.grid_w;
    for (Eigen::Index row = 0; row < g.patches.rows(); ++row) {
        const auto c = static_cast<std::size_t>(row / cells);
        const Eigen::Index cell = row % cells;
        const Eigen::VectorXd angles = layer.scaler().transform(g.patches.row(row).transpose(), c);
        Eigen::VectorXd z;
        if (source.dictionary) {
            z = lookup(angles, *source.dictionary);
        } else {
            QuanvMode mode = *source.direct;
            if (mode.sampled) mode.seed = derive_seed(mode.seed, example, static_cast<std::uint64_t>(row));
            z = layer.quanvolve_angles(angles, mode);
        }
        const auto y = static_cast<std::size_t>(cell / g.grid_w), x = static_cast<std::size_t>(cell % g.grid_w);
        for (int q = 0; q < nq; ++q) out.at(out_index, c * nq + q, y, x) = static_cast<float>(z[q]);
    }
}

PatchTensor feature_layout(const PatchTensor& t, std::size_t n, const QuanvLayer& layer, const std::string& name) {
    const auto& spec = layer.spec();
    if (t.h() < static_cast<std::size_t>(spec.patch_size) || t.w() < static_cast<std::size_t>(spec.patch_size))
        throw std::invalid_argument("quanvolve: image smaller than patch");
    const std::size_t gh = (t.h() - spec.patch_size) / spec.stride + 1;
    const std::size_t gw = (t.w() - spec.patch_size) / spec.stride + 1;
    const int nq = spec.n_qubits();
    std::vector<std::string> names;
    for (std::size_t c = 0; c < t.c(); ++c) {
        const std::string base = c < t.channels.size() ? t.channels[c] : "ch" + std::to_string(c);
        for (int q = 0; q < nq; ++q) names.push_back(base + ":z" + std::to_string(q));
    }
    PatchTensor out(name, n, t.c() * nq, gh, gw, names);
    out.resolution_km = t.resolution_km * spec.stride;
    out.provenance = json{{"layer", spec}, {"spec_fingerprint", fingerprint(spec)}, {"source_tensor", t.name}};
    return out;
}

}  // namespace

PatchTensor quanvolve_image(const PatchTensor& t, std::size_t example, const QuanvLayer& layer,
                            const QuanvSource& source) {
    check_source(source, layer);
    if (example >= t.n()) throw std::out_of_range("quanvolve_image: example index out of range");
    PatchTensor out = feature_layout(t, 1, layer, "features");
    fill_example(out, 0, t, example, layer, source);
    return out;
}

PatchTensor quanvolve_tensor(const PatchTensor& t, const QuanvLayer& layer, const QuanvSource& source,
                             const std::string& name) {
    check_source(source, layer);
    PatchTensor out = feature_layout(t, t.n(), layer, name);
    out.provenance["mode"] = source.dictionary ? "dictionary" : (source.direct->sampled ? "sampled" : "exact");
    parallel_for(t.n(), [&](std::size_t i) { fill_example(out, i, t, i, layer, source); });
    return out;
}

void to_json(json& j, const ReadoutModel& m) {
    std::vector<std::vector<double>> w(static_cast<std::size_t>(m.weights.rows()));
    for (Eigen::Index r = 0; r < m.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < m.weights.cols(); ++c) w[r].push_back(m.weights(r, c));
    j = json{{"ridge", m.ridge}, {"weights", w}};
}

void from_json(const json& j, ReadoutModel& m) {
    j.at("ridge").get_to(m.ridge);
    const auto w = j.at("weights").get<std::vector<std::vector<double>>>();
    const Eigen::Index cols = w.empty() ? 0 : static_cast<Eigen::Index>(w.front().size());
    m.weights.resize(static_cast<Eigen::Index>(w.size()), cols);
    for (std::size_t r = 0; r < w.size(); ++r) {
        if (static_cast<Eigen::Index>(w[r].size()) != cols) throw std::invalid_argument("ragged readout weights");
        for (Eigen::Index c = 0; c < cols; ++c) m.weights(static_cast<Eigen::Index>(r), c) = w[r][c];
    }
}

ReadoutModel fit_readout(const Eigen::Ref<const Eigen::MatrixXd>& features, const Eigen::Ref<const Eigen::MatrixXd>& targets,
                         double ridge) {
    if (!(ridge > 0.0) || !std::isfinite(ridge)) throw std::invalid_argument("ridge must be positive and finite");
    if (!features.allFinite() || !targets.allFinite()) throw std::invalid_argument("fit_readout: non-finite input");
    if (features.rows() != targets.rows()) throw std::invalid_argument("feature/target row counts differ");
    if (features.rows() == 0) throw std::invalid_argument("fit_readout: no rows");
    const Eigen::Index F = features.cols();
    // Normal equations on [X 1] with the bias left unpenalised.
    Eigen::MatrixXd A(F + 1, F + 1);
    A.topLeftCorner(F, F) = features.transpose() * features;
    const Eigen::VectorXd colsum = features.colwise().sum().transpose();
    A.topRightCorner(F, 1) = colsum;
    A.bottomLeftCorner(1, F) = colsum.transpose();
    A(F, F) = static_cast<double>(features.rows());
    A.topLeftCorner(F, F).diagonal().array() += ridge;
    Eigen::MatrixXd B(F + 1, targets.cols());
    B.topRows(F) = features.transpose() * targets;
    B.bottomRows(1) = targets.colwise().sum();
    ReadoutModel m;
    m.ridge = ridge;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("fit_readout: factorisation failed");
    m.weights = ldlt.solve(B);
    if (!m.weights.allFinite()) throw std::runtime_error("fit_readout: singular system; increase the ridge");
    return m;
}

Eigen::MatrixXd predict(const ReadoutModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features) {
    const Eigen::Index F = model.weights.rows() - 1;
    if (features.cols() != F) throw std::invalid_argument("predict: feature width does not match the model");
    Eigen::MatrixXd out = features * model.weights.topRows(F);
    out.rowwise() += model.weights.row(F);
    return out;
}

Eigen::MatrixXd pixel_design(const PatchTensor& features, std::size_t example, std::size_t out_h, std::size_t out_w) {
    if (example >= features.n()) throw std::out_of_range("pixel_design: example index out of range");
    const std::size_t gh = features.h(), gw = features.w();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(out_h * out_w), static_cast<Eigen::Index>(features.c()));
    for (std::size_t y = 0; y < out_h; ++y) {
        const std::size_t cy = std::min(y * gh / out_h, gh - 1);
        for (std::size_t x = 0; x < out_w; ++x) {
            const std::size_t cx = std::min(x * gw / out_w, gw - 1);
            for (std::size_t f = 0; f < features.c(); ++f)
                X(static_cast<Eigen::Index>(y * out_w + x), static_cast<Eigen::Index>(f)) =
                    features.at(example, f, cy, cx);
        }
    }
    return X;
}

ReadoutModel fit_readout(const PatchTensor& features, const PatchTensor& targets, double ridge) {
    if (features.n() != targets.n()) throw std::invalid_argument("feature/target example counts differ");
    const std::size_t px = targets.h() * targets.w();
    const auto rows = static_cast<Eigen::Index>(features.n() * px);
    Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(features.c()));
    Eigen::MatrixXd Y(rows, static_cast<Eigen::Index>(targets.c()));
    parallel_for(features.n(), [&](std::size_t i) {
        const auto r0 = static_cast<Eigen::Index>(i * px);
        X.middleRows(r0, static_cast<Eigen::Index>(px)) = pixel_design(features, i, targets.h(), targets.w());
        for (std::size_t t = 0; t < targets.c(); ++t)
            for (std::size_t k = 0; k < px; ++k)
                Y(r0 + static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) =
                    targets.values[targets.offset(i, t, 0, 0) + k];
    });
    return fit_readout(X, Y, ridge);
}

PatchTensor predict(const ReadoutModel& model, const PatchTensor& features, const PatchTensor& target_layout) {
    PatchTensor out(target_layout.name, features.n(), target_layout.c(), target_layout.h(), target_layout.w(),
                    target_layout.channels, target_layout.units);
    out.resolution_km = target_layout.resolution_km;
    const std::size_t px = out.h() * out.w();
    if (static_cast<std::size_t>(model.weights.cols()) != out.c())
        throw std::invalid_argument("predict: model output width does not match the target layout");
    parallel_for(features.n(), [&](std::size_t i) {
        const Eigen::MatrixXd P = predict(model, pixel_design(features, i, out.h(), out.w()));
        for (std::size_t t = 0; t < out.c(); ++t)
            for (std::size_t k = 0; k < px; ++k)
                out.values[out.offset(i, t, 0, 0) + k] =
                    static_cast<float>(P(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)));
    });
    return out;
}

}  // namespace qkscreen
