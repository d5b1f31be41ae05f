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

#include "qkscreen/wxdata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "qkscreen/parallel.hpp"
#include "qkscreen/rng.hpp"

namespace qkscreen {

PatchTensor::PatchTensor(std::string name_, std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_,
                         std::vector<std::string> channels_, std::vector<std::string> units_)
    : name(std::move(name_)), shape{n_, c_, h_, w_}, channels(std::move(channels_)), units(std::move(units_)) {
    if (units.empty()) units.assign(c_, "1");
    values.assign(n_ * c_ * h_ * w_, 0.0f);
    validate();
}

Eigen::MatrixXd PatchTensor::as_rows() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n()), static_cast<Eigen::Index>(patch_size()));
    for (std::size_t i = 0; i < n(); ++i) {
        const auto p = patch(i);
        for (std::size_t k = 0; k < p.size(); ++k) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = p[k];
    }
    return out;
}

PatchTensor PatchTensor::select(const std::vector<std::size_t>& indices) const {
    PatchTensor out = *this;
    out.shape[0] = indices.size();
    out.values.resize(indices.size() * patch_size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= n()) throw std::out_of_range("example index out of range");
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(indices[k] * patch_size()), patch_size(),
                    out.values.begin() + static_cast<std::ptrdiff_t>(k * patch_size()));
    }
    return out;
}

void PatchTensor::validate() const {
    const std::size_t expected = shape[0] * shape[1] * shape[2] * shape[3];
    if (values.size() != expected)
        throw TensorFormatError("tensor '" + name + "' holds " + std::to_string(values.size()) + " values, shape needs " +
                                std::to_string(expected));
    if (channels.size() != shape[1])
        throw TensorFormatError("tensor '" + name + "' has " + std::to_string(channels.size()) +
                                " channel names for " + std::to_string(shape[1]) + " channels");
    if (units.size() != shape[1]) throw TensorFormatError("tensor '" + name + "' unit count does not match channels");
    for (std::size_t k = 0; k < values.size(); ++k)
        if (!std::isfinite(values[k]))
            throw TensorFormatError("tensor '" + name + "' has a non-finite value at flat index " + std::to_string(k));
}

nlohmann::json manifest(const PatchTensor& t) {
    return {{"name", t.name},
            {"dtype", "f32le"},
            {"shape", t.shape},
            {"channels", t.channels},
            {"units", t.units},
            {"resolution_km", t.resolution_km},
            {"provenance", t.provenance}};
}

namespace {

std::filesystem::path strip(const std::filesystem::path& stem) {
    const auto ext = stem.extension();
    if (ext == ".json" || ext == ".bin") return std::filesystem::path(stem).replace_extension();
    return stem;
}

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TensorFormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& stem) { return strip(stem).string() + ".json"; }
std::filesystem::path payload_path(const std::filesystem::path& stem) { return strip(stem).string() + ".bin"; }

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_tensor(const PatchTensor& t, const std::filesystem::path& stem) {
    t.validate();
    std::string payload(t.values.size() * sizeof(float), '\0');
    if constexpr (std::endian::native == std::endian::little) {
        if (!t.values.empty()) std::memcpy(payload.data(), t.values.data(), payload.size());
    } else {
        for (std::size_t k = 0; k < t.values.size(); ++k) {
            const auto bits = std::bit_cast<std::uint32_t>(t.values[k]);
            for (int b = 0; b < 4; ++b) payload[4 * k + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
        }
    }
    write_file_atomic(payload_path(stem), payload);
    write_file_atomic(manifest_path(stem), manifest(t).dump(2) + "\n");
}

PatchTensor read_tensor(const std::filesystem::path& stem) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_bytes(manifest_path(stem)));
    } catch (const nlohmann::json::exception& e) {
        throw TensorFormatError("malformed manifest " + manifest_path(stem).string() + ": " + e.what());
    }
    PatchTensor t;
    try {
        if (j.at("dtype").get<std::string>() != "f32le")
            throw TensorFormatError("unsupported dtype '" + j.at("dtype").get<std::string>() + "'");
        t.name = j.at("name").get<std::string>();
        t.shape = j.at("shape").get<std::array<std::size_t, 4>>();
        t.channels = j.at("channels").get<std::vector<std::string>>();
        t.units = j.at("units").get<std::vector<std::string>>();
        t.resolution_km = j.value("resolution_km", 4.0);
        t.provenance = j.value("provenance", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw TensorFormatError("malformed manifest " + manifest_path(stem).string() + ": " + e.what());
    }
    const std::string payload = read_bytes(payload_path(stem));
    const std::size_t count = t.shape[0] * t.shape[1] * t.shape[2] * t.shape[3];
    if (payload.size() != count * sizeof(float))
        throw TensorFormatError("payload " + payload_path(stem).string() + " length mismatch: expected " +
                                std::to_string(count * sizeof(float)) + " bytes, found " +
                                std::to_string(payload.size()));
    t.values.resize(count);
    if constexpr (std::endian::native == std::endian::little) {
        if (count) std::memcpy(t.values.data(), payload.data(), payload.size());
    } else {
        for (std::size_t k = 0; k < count; ++k) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= std::uint32_t(static_cast<unsigned char>(payload[4 * k + b])) << (8 * b);
            t.values[k] = std::bit_cast<float>(bits);
        }
    }
    t.validate();
    return t;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

void fnv_update(std::uint64_t& h, const char* data, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        h ^= static_cast<unsigned char>(data[k]);
        h *= 0x100000001b3ULL;
    }
}

std::string hex16(std::uint64_t h) {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

}  // namespace

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::uint64_t h = kFnvOffset;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        fnv_update(h, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return hex16(h);
}

std::string text_digest(std::string_view bytes) {
    std::uint64_t h = kFnvOffset;
    fnv_update(h, bytes.data(), bytes.size());
    return hex16(h);
}

void SyntheticConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("invalid synthetic config: ") + what);
    };
    require(size >= 2, "size must be at least 2");
    require(storm_mean >= 0.0, "storm_mean must be non-negative");
    require(intensity_min > 0.0 && intensity_max >= intensity_min, "intensity range must be positive and ordered");
    require(scale_min > 0.0 && scale_max >= scale_min, "scale range must be positive and ordered");
    require(lightning_rate > 0.0, "lightning_rate must be positive");
    require(lightning_onset >= 0.0, "lightning_onset must be non-negative");
    require(sat_smoothing_min > 0.0 && sat_smoothing_max >= sat_smoothing_min,
            "satellite smoothing range must be positive and ordered");
    require(clutter_amplitude >= 0.0, "clutter_amplitude must be non-negative");
    require(model_max_frequency > 0.0, "model_max_frequency must be positive");
    require(model_coupling >= 0.0, "model_coupling must be non-negative");
}

void to_json(nlohmann::json& j, const SyntheticConfig& c) {
    j = nlohmann::json{{"n_scenes", c.n_scenes},
                       {"size", c.size},
                       {"storm_mean", c.storm_mean},
                       {"storm_max", c.storm_max},
                       {"intensity_min", c.intensity_min},
                       {"intensity_max", c.intensity_max},
                       {"scale_min", c.scale_min},
                       {"scale_max", c.scale_max},
                       {"lightning_rate", c.lightning_rate},
                       {"lightning_onset", c.lightning_onset},
                       {"sat_smoothing_min", c.sat_smoothing_min},
                       {"sat_smoothing_max", c.sat_smoothing_max},
                       {"clutter_amplitude", c.clutter_amplitude},
                       {"model_max_frequency", c.model_max_frequency},
                       {"model_coupling", c.model_coupling},
                       {"seed", c.seed}};
}

Eigen::MatrixXd gaussian_blur(const Eigen::Ref<const Eigen::MatrixXd>& image, double sigma) {
    if (!(sigma > 0.0)) return image;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    Eigen::VectorXd taps(2 * radius + 1);
    for (int k = -radius; k <= radius; ++k) taps[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    taps /= taps.sum();

    const Eigen::Index rows = image.rows(), cols = image.cols();
    Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            for (int k = -radius; k <= radius; ++k) {
                const Eigen::Index cc = c + k;
                if (cc >= 0 && cc < cols) tmp(r, c) += taps[k + radius] * image(r, cc);
            }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            for (int k = -radius; k <= radius; ++k) {
                const Eigen::Index rr = r + k;
                if (rr >= 0 && rr < rows) out(r, c) += taps[k + radius] * tmp(rr, c);
            }
    return out;
}

namespace {

const std::vector<std::string> kSatChannels{"cloud_top_height", "solar_zenith_angle", "visible_600nm", "ir_6.2um",
                                            "ir_7.3um",         "ir_10.3um",          "ir_12.3um"};
const std::vector<std::string> kSatUnits{"km", "deg", "reflectance", "K", "K", "K", "K"};
const std::vector<std::string> kLghtChannels{"lightning_10min", "lightning_20min", "lightning_30min"};
const std::vector<std::string> kModChannels{"temperature", "pressure", "humidity",    "u_wind",
                                            "v_wind",      "cape",     "precip_water"};
const std::vector<std::string> kModUnits{"K", "hPa", "1", "m/s", "m/s", "J/kg", "mm"};
const std::vector<std::string> kTargChannels{"VIL", "ET", "CR"};
const std::vector<std::string> kTargUnits{"kg/m^2", "kft", "dBZ"};

// Smooth zero-mean clutter with roughly unit standard deviation.
Eigen::MatrixXd clutter(Rng& rng, Eigen::Index size, double sigma) {
    Eigen::MatrixXd noise(size, size);
    for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = rng.normal();
    // A blur of width s shrinks white-noise std by about 1 / (2 s sqrt(pi)).
    return gaussian_blur(noise, sigma) * (2.0 * sigma * std::sqrt(std::numbers::pi));
}

Eigen::MatrixXd low_frequency_field(Rng& rng, Eigen::Index size, double max_frequency) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(size, size);
    for (int term = 0; term < 3; ++term) {
        const double u = rng.uniform(-max_frequency, max_frequency);
        const double v = rng.uniform(-max_frequency, max_frequency);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double amp = rng.uniform(0.3, 1.0) / std::sqrt(3.0);
        for (Eigen::Index y = 0; y < size; ++y)
            for (Eigen::Index x = 0; x < size; ++x)
                f(y, x) += amp * std::cos(2.0 * std::numbers::pi * (u * x + v * y) / static_cast<double>(size) + phase);
    }
    return f;
}

void store(PatchTensor& t, std::size_t i, std::size_t ch, const Eigen::MatrixXd& img) {
    for (std::size_t y = 0; y < t.h(); ++y)
        for (std::size_t x = 0; x < t.w(); ++x)
            t.at(i, ch, y, x) = static_cast<float>(img(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)));
}

}  // namespace

WeatherDataset generate_synthetic(const SyntheticConfig& config) {
    config.validate();
    const std::size_t n = config.n_scenes, s = config.size;
    const auto S = static_cast<Eigen::Index>(s);
    WeatherDataset ds{PatchTensor("sat", n, 7, s, s, kSatChannels, kSatUnits),
                      PatchTensor("lght", n, 3, s, s, kLghtChannels, {"strikes", "strikes", "strikes"}),
                      PatchTensor("mod", n, 7, s, s, kModChannels, kModUnits),
                      PatchTensor("targ", n, 3, s, s, kTargChannels, kTargUnits)};

    parallel_for(n, [&](std::size_t scene) {
        Rng rng(derive_seed(config.seed, scene));
        Rng storm_rng = rng.split(0), strike_rng = rng.split(1), sat_rng = rng.split(2), mod_rng = rng.split(3);

        const std::size_t storms = std::min<std::size_t>(storm_rng.poisson(config.storm_mean), config.storm_max);
        Eigen::MatrixXd vil = Eigen::MatrixXd::Zero(S, S);
        for (std::size_t k = 0; k < storms; ++k) {
            const double cx = storm_rng.uniform(-4.0, static_cast<double>(s) + 4.0);
            const double cy = storm_rng.uniform(-4.0, static_cast<double>(s) + 4.0);
            const double sigma = storm_rng.uniform(config.scale_min, config.scale_max);
            const double peak = storm_rng.uniform(config.intensity_min, config.intensity_max);
            for (Eigen::Index y = 0; y < S; ++y)
                for (Eigen::Index x = 0; x < S; ++x) {
                    const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    vil(y, x) += peak * std::exp(-0.5 * r2 / (sigma * sigma));
                }
        }
        const Eigen::MatrixXd et = vil.unaryExpr([](double v) { return 50.0 * (1.0 - std::exp(-v / 12.0)); });
        const Eigen::MatrixXd cr = vil.unaryExpr([](double v) { return 13.0 * std::log1p(v); });
        store(ds.targ, scene, 0, vil);
        store(ds.targ, scene, 1, et);
        store(ds.targ, scene, 2, cr);

        // Lightning: cumulative strike counts over 10/20/30 minute windows.
        Eigen::MatrixXd strikes = Eigen::MatrixXd::Zero(S, S);
        static constexpr double kHistoryBlur[] = {1.0, 1.5, 2.0};
        for (std::size_t window = 0; window < 3; ++window) {
            for (Eigen::Index y = 0; y < S; ++y)
                for (Eigen::Index x = 0; x < S; ++x) {
                    const double rate = config.lightning_rate * std::max(0.0, vil(y, x) - config.lightning_onset);
                    strikes(y, x) += static_cast<double>(strike_rng.poisson(rate));
                }
            store(ds.lght, scene, window, gaussian_blur(strikes, kHistoryBlur[window]));
        }

        // Satellite: smoothed monotone functions of the storm field plus clutter.
        const double blur = sat_rng.uniform(config.sat_smoothing_min, config.sat_smoothing_max);
        const Eigen::MatrixXd vil_s = gaussian_blur(vil, blur);
        const Eigen::MatrixXd et_s = gaussian_blur(et, blur);
        const double amp = config.clutter_amplitude;
        {
            const Eigen::MatrixXd cth = vil_s.unaryExpr([](double v) { return 12.0 * (1.0 - std::exp(-v / 10.0)); }) +
                                        2.0 * amp * clutter(sat_rng, S, 2.0).cwiseAbs();
            store(ds.sat, scene, 0, cth);

            const double zenith = sat_rng.uniform(20.0, 70.0);
            const double gx = sat_rng.uniform(-0.05, 0.05), gy = sat_rng.uniform(-0.05, 0.05);
            Eigen::MatrixXd sza(S, S);
            for (Eigen::Index y = 0; y < S; ++y)
                for (Eigen::Index x = 0; x < S; ++x) sza(y, x) = zenith + gx * x + gy * y;
            store(ds.sat, scene, 1, sza);

            Eigen::MatrixXd vis = vil_s.unaryExpr([](double v) { return 0.1 + 0.8 * (1.0 - std::exp(-v / 8.0)); }) +
                                  0.1 * amp * clutter(sat_rng, S, 2.0);
            store(ds.sat, scene, 2, vis.cwiseMax(0.0).cwiseMin(1.0));

            static constexpr double kIrSlope[] = {1.6, 1.4, 1.2, 1.0};
            for (int band = 0; band < 4; ++band) {
                const Eigen::MatrixXd bt =
                    (290.0 - kIrSlope[band] * et_s.array()).matrix() + 3.0 * amp * clutter(sat_rng, S, 1.5);
                store(ds.sat, scene, 3 + static_cast<std::size_t>(band), bt);
            }
        }

        // Model fields: low-frequency random fields with weak storm coupling.
        const Eigen::MatrixXd coupling = config.model_coupling * gaussian_blur(vil, 6.0) / 20.0;
        static constexpr double kOffset[] = {280.0, 1000.0, 0.6, 0.0, 0.0, 1000.0, 30.0};
        static constexpr double kScale[] = {5.0, 8.0, 0.2, 5.0, 5.0, 800.0, 10.0};
        for (std::size_t ch = 0; ch < 7; ++ch) {
            const Eigen::MatrixXd f = low_frequency_field(mod_rng, S, config.model_max_frequency) + coupling;
            store(ds.mod, scene, ch, (kOffset[ch] + kScale[ch] * f.array()).matrix());
        }
    });

    nlohmann::json prov{{"generator", "synthetic"}, {"seed", config.seed}, {"config", config}};
    for (PatchTensor* t : {&ds.sat, &ds.lght, &ds.mod, &ds.targ}) t->provenance = prov;
    return ds;
}

void to_json(nlohmann::json& j, const Split& s) { j = nlohmann::json{{"train", s.train}, {"cal", s.cal}, {"test", s.test}}; }

void from_json(const nlohmann::json& j, Split& s) {
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.cal = j.at("cal").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
}

Split split(std::size_t n, const std::array<double, 3>& fractions, std::uint64_t seed) {
    for (double f : fractions)
        if (!(f > 0.0)) throw std::invalid_argument("split fractions must be positive");
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1");

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

    const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(fractions[0] * n)));
    const auto n_cal = std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * n)));
    Split out;
    out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.cal.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                   perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_cal));
    out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_cal), perm.end());
    return out;
}

}  // namespace qkscreen
