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

/// Patch tensors, their manifest + raw float32 file format, the synthetic
/// weather-scene generator and dataset splits.
///
/// File format: `<stem>.json` holds the manifest
///   {name, dtype: "f32le", shape: [n, c, h, w], channels, units,
///    resolution_km, provenance}
/// and `<stem>.bin` holds n*c*h*w little-endian float32 values, row-major
/// (n slowest, then c, h, w).

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace qkscreen {

class TensorFormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

using ImageMap = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct PatchTensor {
    std::string name;
    std::array<std::size_t, 4> shape{0, 0, 0, 0};
    std::vector<std::string> channels;
    std::vector<std::string> units;
    double resolution_km = 4.0;
    nlohmann::json provenance = nlohmann::json::object();
    std::vector<float> values;

    PatchTensor() = default;
    /// Zero-filled tensor. Units default to "1" when not given.
    PatchTensor(std::string name, std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                std::vector<std::string> channels, std::vector<std::string> units = {});

    std::size_t n() const noexcept { return shape[0]; }
    std::size_t c() const noexcept { return shape[1]; }
    std::size_t h() const noexcept { return shape[2]; }
    std::size_t w() const noexcept { return shape[3]; }
    std::size_t patch_size() const noexcept { return shape[1] * shape[2] * shape[3]; }

    std::size_t offset(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) const noexcept {
        return ((i * shape[1] + ch) * shape[2] + y) * shape[3] + x;
    }
    float& at(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) { return values[offset(i, ch, y, x)]; }
    float at(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) const { return values[offset(i, ch, y, x)]; }

    std::span<const float> patch(std::size_t i) const {
        return {values.data() + i * patch_size(), patch_size()};
    }
    std::span<float> patch(std::size_t i) { return {values.data() + i * patch_size(), patch_size()}; }

    /// H x W view of one channel of one example.
    ImageMap image(std::size_t i, std::size_t ch) const {
        return ImageMap(values.data() + offset(i, ch, 0, 0), static_cast<Eigen::Index>(shape[2]),
                        static_cast<Eigen::Index>(shape[3]));
    }

    /// Flattened examples as rows (n x c*h*w), in double precision.
    Eigen::MatrixXd as_rows() const;

    /// Examples in `indices` order.
    PatchTensor select(const std::vector<std::size_t>& indices) const;

    /// Throws TensorFormatError on shape/value-count/channel inconsistencies
    /// or non-finite values.
    void validate() const;
};

nlohmann::json manifest(const PatchTensor& t);

/// `stem` may be given with or without a .json/.bin extension.
std::filesystem::path manifest_path(const std::filesystem::path& stem);
std::filesystem::path payload_path(const std::filesystem::path& stem);

/// Writes both files atomically (temp file + rename).
void write_tensor(const PatchTensor& t, const std::filesystem::path& stem);
PatchTensor read_tensor(const std::filesystem::path& stem);

/// Writes `text` to `path` via a temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

/// Same digest over an in-memory byte string.
std::string text_digest(std::string_view bytes);

struct SyntheticConfig {
    std::size_t n_scenes = 200;
    std::size_t size = 32;
    double storm_mean = 2.0;
    std::size_t storm_max = 6;
    double intensity_min = 5.0;
    double intensity_max = 60.0;
    double scale_min = 1.5;
    double scale_max = 5.0;
    /// Strikes per pixel per 10 minutes per kg/m^2 of VIL above onset.
    double lightning_rate = 0.05;
    double lightning_onset = 5.0;
    double sat_smoothing_min = 1.0;
    double sat_smoothing_max = 2.5;
    double clutter_amplitude = 0.3;
    /// Highest spatial frequency (cycles per patch) in model fields.
    double model_max_frequency = 2.0;
    double model_coupling = 0.3;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on non-positive or inverted ranges.
    void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticConfig& c);

struct WeatherDataset {
    PatchTensor sat;   // 7 channels
    PatchTensor lght;  // 3 channels
    PatchTensor mod;   // 7 channels
    PatchTensor targ;  // VIL, ET, CR
};

WeatherDataset generate_synthetic(const SyntheticConfig& config);

struct Split {
    std::vector<std::size_t> train, cal, test;
};

void to_json(nlohmann::json& j, const Split& s);
void from_json(const nlohmann::json& j, Split& s);

/// Seeded permutation partition of [0, n). Fractions must be positive and
/// sum to 1 within 1e-9.
Split split(std::size_t n, const std::array<double, 3>& fractions, std::uint64_t seed);

/// Separable Gaussian blur with zero padding.
Eigen::MatrixXd gaussian_blur(const Eigen::Ref<const Eigen::MatrixXd>& image, double sigma);

}  // namespace qkscreen
