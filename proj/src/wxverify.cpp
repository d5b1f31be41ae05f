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

#include "qkscreen/wxverify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace qkscreen {

std::string to_string(Product p) {
    switch (p) {
        case Product::VIL: return "VIL";
        case Product::ET: return "ET";
        case Product::CR: return "CR";
    }
    return "?";
}

Product parse_product(const std::string& s) {
    if (s == "VIL") return Product::VIL;
    if (s == "ET") return Product::ET;
    if (s == "CR") return Product::CR;
    throw std::invalid_argument("unknown product '" + s + "'");
}

LevelThresholds LevelThresholds::defaults() {
    LevelThresholds t;
    t.levels[Product::VIL] = {0.76, 3.5, 6.9, 12.0, 32.0, 70.0};
    t.levels[Product::ET] = {3.0, 12.0, 21.0, 30.0, 40.0, 47.0};
    t.levels[Product::CR] = {7.0, 19.0, 27.0, 33.0, 45.0, 55.0};
    return t;
}

const std::vector<double>& LevelThresholds::of(Product p) const {
    const auto it = levels.find(p);
    if (it == levels.end()) throw std::invalid_argument("no thresholds for product " + to_string(p));
    return it->second;
}

void LevelThresholds::validate() const {
    for (const auto& [p, v] : levels)
        for (std::size_t k = 1; k < v.size(); ++k)
            if (!(v[k] > v[k - 1]))
                throw std::invalid_argument("thresholds for " + to_string(p) + " must be strictly increasing");
}

void to_json(nlohmann::json& j, const LevelThresholds& t) {
    j = nlohmann::json::object();
    for (const auto& [p, v] : t.levels) j[to_string(p)] = v;
}

void from_json(const nlohmann::json& j, LevelThresholds& t) {
    t.levels.clear();
    for (const auto& [key, value] : j.items()) t.levels[parse_product(key)] = value.get<std::vector<double>>();
    t.validate();
}

VerificationMetrics metrics(const ContingencyTable& t) {
    const auto H = static_cast<double>(t.hits), M = static_cast<double>(t.misses),
               F = static_cast<double>(t.false_alarms);
    VerificationMetrics m;
    if (H + M > 0) {
        m.pod = H / (H + M);
        m.bias = (H + F) / (H + M);
    }
    if (H + F > 0) m.sucr = H / (H + F);
    if (H + M + F > 0) m.csi = H / (H + M + F);
    return m;
}

CalibrationMap::CalibrationMap(std::vector<double> inputs, std::vector<double> outputs)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
    if (inputs_.empty() || inputs_.size() != outputs_.size())
        throw std::invalid_argument("calibration map needs matching, non-empty knot lists");
    for (std::size_t k = 1; k < inputs_.size(); ++k) {
        if (!(inputs_[k] > inputs_[k - 1])) throw std::invalid_argument("calibration knot inputs must increase");
        if (outputs_[k] < outputs_[k - 1]) throw std::invalid_argument("calibration knot outputs must not decrease");
    }
}

CalibrationMap CalibrationMap::identity() { return CalibrationMap{}; }

double CalibrationMap::operator()(double x) const {
    if (inputs_.empty()) return x;
    if (x <= inputs_.front()) return outputs_.front();
    if (x >= inputs_.back()) return outputs_.back();
    const auto it = std::upper_bound(inputs_.begin(), inputs_.end(), x);
    const auto k = static_cast<std::size_t>(it - inputs_.begin());
    const double t = (x - inputs_[k - 1]) / (inputs_[k] - inputs_[k - 1]);
    return outputs_[k - 1] + t * (outputs_[k] - outputs_[k - 1]);
}

void to_json(nlohmann::json& j, const CalibrationMap& m) {
    j = nlohmann::json{{"inputs", m.inputs()}, {"outputs", m.outputs()}};
}

void from_json(const nlohmann::json& j, CalibrationMap& m) {
    auto inputs = j.at("inputs").get<std::vector<double>>();
    auto outputs = j.at("outputs").get<std::vector<double>>();
    if (inputs.empty() && outputs.empty()) {
        m = CalibrationMap::identity();
        return;
    }
    m = CalibrationMap(std::move(inputs), std::move(outputs));
}

namespace {

// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

CalibrationMap fit_calibration(std::vector<double> pred, std::vector<double> truth) {
    if (pred.empty() || truth.empty()) throw std::invalid_argument("calibration needs non-empty pixel lists");
    std::sort(pred.begin(), pred.end());
    std::sort(truth.begin(), truth.end());
    std::vector<double> in, out;
    std::size_t k = 0;
    while (k < CalibrationMap::kKnots) {
        const double x = quantile(pred, static_cast<double>(k) / (CalibrationMap::kKnots - 1));
        double sum = 0.0;
        int count = 0;
        while (k < CalibrationMap::kKnots &&
               quantile(pred, static_cast<double>(k) / (CalibrationMap::kKnots - 1)) == x) {
            sum += quantile(truth, static_cast<double>(k) / (CalibrationMap::kKnots - 1));
            ++count;
            ++k;
        }
        in.push_back(x);
        out.push_back(sum / count);
    }
    // Quantiles of sorted data are non-decreasing, but interpolation on
    // nearly-equal neighbours can leave ulp-level inversions in the outputs.
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = std::max(out[i], out[i - 1]);
    return CalibrationMap(std::move(in), std::move(out));
}

std::vector<double> apply_calibration(const CalibrationMap& map, const std::vector<double>& pred) {
    std::vector<double> out(pred.size());
    std::transform(pred.begin(), pred.end(), out.begin(), [&](double v) { return map(v); });
    return out;
}

std::vector<float> apply_calibration(const CalibrationMap& map, const std::vector<float>& pred) {
    std::vector<float> out(pred.size());
    std::transform(pred.begin(), pred.end(), out.begin(), [&](float v) { return static_cast<float>(map(v)); });
    return out;
}

double csi_from_pod_sucr(double pod, double sucr) {
    if (!(pod > 0.0) || !(sucr > 0.0)) return 0.0;
    return 1.0 / (1.0 / pod + 1.0 / sucr - 1.0);
}

PerformanceDiagram performance_diagram(const std::vector<DiagramPoint>& points, int resolution) {
    if (resolution < 1) throw std::invalid_argument("diagram resolution must be >= 1");
    PerformanceDiagram d;
    d.resolution = resolution;
    for (const auto& p : points) {
        if (!p.pod || !p.sucr) {
            d.warnings.push_back("point '" + p.label + "' skipped: POD or SUCR undefined");
            continue;
        }
        d.points.push_back({p.label, *p.pod, *p.sucr, csi_from_pod_sucr(*p.pod, *p.sucr)});
    }
    for (int a = 1; a <= resolution; ++a)
        for (int b = 1; b <= resolution; ++b) {
            const double sucr = static_cast<double>(a) / resolution;
            const double pod = static_cast<double>(b) / resolution;
            d.grid.push_back({sucr, pod, csi_from_pod_sucr(pod, sucr)});
        }
    return d;
}

std::string diagram_csv(const PerformanceDiagram& d) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "kind,label,sucr,pod,csi\n";
    for (const auto& p : d.points) out << "point," << p.label << ',' << p.sucr << ',' << p.pod << ',' << p.csi << '\n';
    for (const auto& g : d.grid) out << "grid,," << g.sucr << ',' << g.pod << ',' << g.csi << '\n';
    for (int k = 0; k <= d.resolution; ++k) {
        const double v = static_cast<double>(k) / d.resolution;
        out << "diagonal,," << v << ',' << v << ',' << (k == 0 ? 0.0 : csi_from_pod_sucr(v, v)) << '\n';
    }
    return out.str();
}

std::string diagram_svg(const PerformanceDiagram& d, const std::string& title) {
    constexpr double size = 400.0, margin = 60.0;
    auto px = [&](double sucr) { return margin + sucr * size; };
    auto py = [&](double pod) { return margin + (1.0 - pod) * size; };

    std::ostringstream svg;
    svg << std::fixed << std::setprecision(2);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin << "\" height=\""
        << size + 2 * margin << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << margin << "\" y=\"" << margin / 2 << "\" font-size=\"14\">" << title << "</text>\n";
    svg << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int c = 1; c <= 9; ++c) {
        const double csi = c / 10.0;
        svg << "<polyline fill=\"none\" stroke=\"#888\" stroke-dasharray=\"3,3\" points=\"";
        double label_x = -1, label_y = -1;
        for (int k = 1; k <= 400; ++k) {
            const double sucr = k / 400.0;
            const double denom = 1.0 / csi + 1.0 - 1.0 / sucr;
            if (denom <= 0.0) continue;
            const double pod = 1.0 / denom;
            if (pod > 1.0) continue;
            svg << px(sucr) << ',' << py(pod) << ' ';
            label_x = px(sucr);
            label_y = py(pod);
        }
        svg << "\"/>\n";
        if (label_x >= 0)
            svg << "<text x=\"" << label_x - 22 << "\" y=\"" << label_y - 3 << "\" fill=\"#666\">" << csi << "</text>\n";
    }
    svg << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
        << "\" stroke=\"black\" stroke-width=\"0.8\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double v = k / 5.0;
        svg << "<text x=\"" << px(v) - 8 << "\" y=\"" << margin + size + 16 << "\">" << v << "</text>\n";
        svg << "<text x=\"" << margin - 34 << "\" y=\"" << py(v) + 4 << "\">" << v << "</text>\n";
    }
    svg << "<text x=\"" << margin + size / 2 - 40 << "\" y=\"" << margin + size + 36
        << "\">Success ratio (SUCR)</text>\n";
    svg << "<text transform=\"translate(" << margin - 44 << ',' << margin + size / 2 + 60
        << ") rotate(-90)\">Probability of detection (POD)</text>\n";
    for (const auto& p : d.points) {
        svg << "<circle cx=\"" << px(p.sucr) << "\" cy=\"" << py(p.pod) << "\" r=\"4\" fill=\"#c33\"/>\n";
        svg << "<text x=\"" << px(p.sucr) + 6 << "\" y=\"" << py(p.pod) - 4 << "\">" << p.label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace qkscreen
