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

/// Forecast verification: pixel contingency tables, POD/SUCR/CSI/BIAS/MSE,
/// histogram-matching calibration and performance-diagram output.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace qkscreen {

enum class Product { VIL, ET, CR };
std::string to_string(Product p);
Product parse_product(const std::string& s);

/// Ascending event thresholds per product (product units). The defaults are
/// synthetic, non-operational values sized for the synthetic generator.
struct LevelThresholds {
    std::map<Product, std::vector<double>> levels;

    static LevelThresholds defaults();
    const std::vector<double>& of(Product p) const;
    /// Throws std::invalid_argument unless each list is strictly increasing.
    void validate() const;
};

void to_json(nlohmann::json& j, const LevelThresholds& t);
void from_json(const nlohmann::json& j, LevelThresholds& t);

struct ContingencyTable {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t false_alarms = 0;
    std::uint64_t correct_rejections = 0;
    int level = 0;
    Product product = Product::VIL;

    std::uint64_t total() const noexcept { return hits + misses + false_alarms + correct_rejections; }

    /// Counts are additive across patches.
    ContingencyTable& operator+=(const ContingencyTable& other) {
        hits += other.hits;
        misses += other.misses;
        false_alarms += other.false_alarms;
        correct_rejections += other.correct_rejections;
        return *this;
    }
};

/// Ratios are unset when their denominator is zero.
struct VerificationMetrics {
    std::optional<double> pod, sucr, csi, bias;
    std::optional<double> mse;
};

/// A pixel is an event when its value is >= threshold.
template <typename DerivedA, typename DerivedB>
ContingencyTable contingency(const Eigen::DenseBase<DerivedA>& pred, const Eigen::DenseBase<DerivedB>& truth,
                             double threshold) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::invalid_argument("prediction and truth shapes differ");
    ContingencyTable t;
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
        for (Eigen::Index c = 0; c < pred.cols(); ++c) {
            const double p = static_cast<double>(pred(r, c));
            const double o = static_cast<double>(truth(r, c));
            if (std::isnan(p) || std::isnan(o)) throw std::invalid_argument("NaN pixel in contingency input");
            const bool pe = p >= threshold, oe = o >= threshold;
            if (pe && oe)
                ++t.hits;
            else if (oe)
                ++t.misses;
            else if (pe)
                ++t.false_alarms;
            else
                ++t.correct_rejections;
        }
    }
    return t;
}

VerificationMetrics metrics(const ContingencyTable& table);

template <typename DerivedA, typename DerivedB>
double mse(const Eigen::DenseBase<DerivedA>& pred, const Eigen::DenseBase<DerivedB>& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::invalid_argument("prediction and truth shapes differ");
    if (pred.size() == 0) throw std::invalid_argument("mse of an empty field");
    return (pred.derived().template cast<double>().array() - truth.derived().template cast<double>().array())
               .square()
               .mean();
}

/// Monotone piecewise-linear quantile map.
class CalibrationMap {
  public:
    static constexpr int kKnots = 256;

    CalibrationMap() = default;
    CalibrationMap(std::vector<double> inputs, std::vector<double> outputs);

    static CalibrationMap identity();

    const std::vector<double>& inputs() const noexcept { return inputs_; }
    const std::vector<double>& outputs() const noexcept { return outputs_; }
    double fit_min() const { return inputs_.front(); }
    double fit_max() const { return inputs_.back(); }

    /// Linear between knots, clamped to the end knots outside the fit range.
    double operator()(double x) const;

  private:
    std::vector<double> inputs_, outputs_;
};

void to_json(nlohmann::json& j, const CalibrationMap& m);
void from_json(const nlohmann::json& j, CalibrationMap& m);

/// Knot k maps the prediction quantile at k/255 to the truth quantile at
/// k/255. Knots sharing an input value average their outputs.
CalibrationMap fit_calibration(std::vector<double> pred_pixels, std::vector<double> truth_pixels);

std::vector<double> apply_calibration(const CalibrationMap& map, const std::vector<double>& pred);
std::vector<float> apply_calibration(const CalibrationMap& map, const std::vector<float>& pred);

/// 1 / (1/POD + 1/SUCR - 1).
double csi_from_pod_sucr(double pod, double sucr);

struct DiagramPoint {
    std::string label;
    std::optional<double> pod, sucr;
};

struct PerformanceDiagram {
    struct Point {
        std::string label;
        double pod, sucr, csi;
    };
    struct GridCell {
        double sucr, pod, csi;
    };
    std::vector<Point> points;
    std::vector<GridCell> grid;
    std::vector<std::string> warnings;
    int resolution = 0;
};

/// Points with undefined POD or SUCR are skipped with a warning. The CSI
/// grid samples (SUCR, POD) at k/resolution for k = 1..resolution.
PerformanceDiagram performance_diagram(const std::vector<DiagramPoint>& points, int resolution = 50);

/// CSV rows: kind,label,sucr,pod,csi with kind in {point, grid, diagonal}.
std::string diagram_csv(const PerformanceDiagram& d);
/// Standalone SVG: CSI contours, POD = SUCR diagonal and the points.
std::string diagram_svg(const PerformanceDiagram& d, const std::string& title = "Performance diagram");

}  // namespace qkscreen
