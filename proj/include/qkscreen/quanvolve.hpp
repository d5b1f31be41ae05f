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

/// Quanvolutional front end: patch extraction, a fixed random circuit as
/// the filter, a sampled input/output dictionary with nearest-centroid
/// lookup, and a ridge readout standing in for the downstream network.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "qkscreen/featuremaps.hpp"
#include "qkscreen/wxdata.hpp"

namespace qkscreen {

struct QuanvLayerSpec {
    int patch_size = 2;
    int stride = 2;
    EncodingSpec encoding = EncodingSpec::make(EncodingKind::Angle, 4);
    RandomCircuitSpec circuit{4, 4, 0};
    std::uint64_t shots = 1000;

    static QuanvLayerSpec make(EncodingKind kind, int patch_size, int stride, int depth, std::uint64_t circuit_seed,
                               std::uint64_t shots);

    int n_qubits() const noexcept { return patch_size * patch_size; }
    /// Throws std::invalid_argument when widths disagree or stride < 1.
    void validate() const;
};

void to_json(nlohmann::json& j, const QuanvLayerSpec& s);
void from_json(const nlohmann::json& j, QuanvLayerSpec& s);

/// FNV-1a digest of the spec's canonical JSON.
std::string fingerprint(const QuanvLayerSpec& spec);

struct QuanvMode {
    bool sampled = false;
    std::uint64_t seed = 0;

    static QuanvMode exact() { return {}; }
    static QuanvMode sampling(std::uint64_t seed) { return {true, seed}; }
};

/// Patches of every channel of one image, as rows of `patches`.
/// Rows are channel-major, then row-major over the output grid; each row is
/// the window flattened row-major.
struct PatchGrid {
    Eigen::MatrixXd patches;
    int channels = 0;
    int grid_h = 0;
    int grid_w = 0;
};

/// floor((H - size) / stride) + 1 cells per axis.
PatchGrid extract_patches(const std::vector<Eigen::MatrixXd>& channels, int patch_size, int stride);
PatchGrid extract_patches(const PatchTensor& t, std::size_t example, int patch_size, int stride);

/// Per-channel min/max over a training population, mapping pixels to
/// [0, pi]. Constant channels map to 0.
struct ChannelScaler {
    std::vector<double> min, max;

    Eigen::VectorXd transform(const Eigen::Ref<const Eigen::VectorXd>& patch, std::size_t channel) const;
};

ChannelScaler fit_channel_scaler(const PatchTensor& train);

/// A configured layer: spec, scaler and the generated random circuit.
class QuanvLayer {
  public:
    QuanvLayer(QuanvLayerSpec spec, ChannelScaler scaler);

    const QuanvLayerSpec& spec() const noexcept { return spec_; }
    const ChannelScaler& scaler() const noexcept { return scaler_; }
    const Circuit& circuit() const noexcept { return circuit_; }

    /// Encode scaled angles, apply the random circuit, read <Z> per qubit
    /// (exact, or estimated from spec.shots draws).
    Eigen::VectorXd quanvolve_angles(const Eigen::Ref<const Eigen::VectorXd>& angles, const QuanvMode& mode) const;

    /// scale -> quanvolve_angles.
    Eigen::VectorXd quanvolve_patch(const Eigen::Ref<const Eigen::VectorXd>& patch, std::size_t channel,
                                    const QuanvMode& mode) const;

  private:
    QuanvLayerSpec spec_;
    ChannelScaler scaler_;
    Circuit circuit_;
};

struct FeatureDictionary {
    /// K x d scaled input patches.
    Eigen::MatrixXd centroids;
    /// K x d paired outputs.
    Eigen::MatrixXd outputs;
    std::string spec_fingerprint;
    std::uint64_t seed = 0;

    Eigen::Index size() const noexcept { return centroids.rows(); }
};

/// Scaled angle rows of every patch of every channel in `t`.
Eigen::MatrixXd patch_population(const PatchTensor& t, const QuanvLayer& layer);

/// Draws K rows of `population` without replacement and quanvolves each once
/// (sampled by default).
FeatureDictionary build_dictionary(const Eigen::Ref<const Eigen::MatrixXd>& population, const QuanvLayer& layer,
                                   Eigen::Index K, std::uint64_t seed, bool sampled = true);

/// Nearest centroid by Euclidean distance, ties to the lowest index.
Eigen::Index nearest_centroid(const Eigen::Ref<const Eigen::VectorXd>& query, const FeatureDictionary& dict);
Eigen::VectorXd lookup(const Eigen::Ref<const Eigen::VectorXd>& query, const FeatureDictionary& dict);

void write_dictionary(const FeatureDictionary& dict, const QuanvLayerSpec& spec, const std::filesystem::path& stem);
FeatureDictionary read_dictionary(const std::filesystem::path& stem);

struct QuanvSource {
    std::optional<QuanvMode> direct;
    const FeatureDictionary* dictionary = nullptr;

    static QuanvSource Direct(QuanvMode mode) { return {mode, nullptr}; }
    static QuanvSource Dictionary(const FeatureDictionary& d) { return {std::nullopt, &d}; }
};

/// (C * d) x H' x W' features for one example; feature row c*d + q holds
/// qubit q of channel c.
PatchTensor quanvolve_image(const PatchTensor& t, std::size_t example, const QuanvLayer& layer,
                            const QuanvSource& source);

/// All examples of `t`.
PatchTensor quanvolve_tensor(const PatchTensor& t, const QuanvLayer& layer, const QuanvSource& source,
                             const std::string& name = "features");

struct ReadoutModel {
    /// (F + 1) x T; the last row is the bias.
    Eigen::MatrixXd weights;
    double ridge = 1.0;
};

void to_json(nlohmann::json& j, const ReadoutModel& m);
void from_json(const nlohmann::json& j, ReadoutModel& m);

/// Ridge regression with an unpenalised bias column.
ReadoutModel fit_readout(const Eigen::Ref<const Eigen::MatrixXd>& features, const Eigen::Ref<const Eigen::MatrixXd>& targets,
                         double ridge);

Eigen::MatrixXd predict(const ReadoutModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features);

/// One row per output pixel of one example: the feature vector of the cell
/// covering that pixel (nearest upsampling).
Eigen::MatrixXd pixel_design(const PatchTensor& features, std::size_t example, std::size_t out_h, std::size_t out_w);

/// Stacked pixel_design / target rows over all examples.
ReadoutModel fit_readout(const PatchTensor& features, const PatchTensor& targets, double ridge);

/// Predictions in the target layout (n x T x out_h x out_w).
PatchTensor predict(const ReadoutModel& model, const PatchTensor& features, const PatchTensor& target_layout);

}  // namespace qkscreen
