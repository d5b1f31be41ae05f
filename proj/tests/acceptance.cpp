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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "qkscreen/featuremaps.hpp"
#include "qkscreen/generative.hpp"
#include "qkscreen/kernelscreen.hpp"
#include "qkscreen/qsim.hpp"
#include "qkscreen/quanvolve.hpp"
#include "qkscreen/rng.hpp"
#include "qkscreen/svm.hpp"
#include "qkscreen/wxdata.hpp"
#include "qkscreen/wxverify.hpp"

#ifndef QKSCREEN_CLI_PATH
#error "QKSCREEN_CLI_PATH must name the qkscreen executable"
#endif

namespace fs = std::filesystem;
using namespace qkscreen;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(4) << v;
    return s.str();
}

Gate random_gate(int n, Rng& rng) {
    const auto kind = static_cast<GateKind>(rng.below(n > 1 ? 7 : 4));
    const int a = static_cast<int>(rng.below(n));
    int b = static_cast<int>(rng.below(n > 1 ? n - 1 : 1));
    if (b >= a) ++b;
    const double theta = rng.uniform(-2 * kPi, 2 * kPi);
    switch (kind) {
        case GateKind::H: return Gate::h(a);
        case GateKind::RX: return Gate::rx(a, theta);
        case GateKind::RY: return Gate::ry(a, theta);
        case GateKind::RZ: return Gate::rz(a, theta);
        case GateKind::CZ: return Gate::cz(a, b);
        case GateKind::CNOT: return Gate::cnot(a, b);
        case GateKind::RZZ: return Gate::rzz(a, b, theta);
    }
    return Gate::h(a);
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

// ------------------------------------------------------------------ AC1

Outcome ac1_simulator() {
    Rng rng(101);
    double max_err = 0.0;
    for (int n = 1; n <= 3; ++n) {
        for (int trial = 0; trial < 2000; ++trial) {
            Statevector::Amplitudes a(Eigen::Index{1} << n);
            for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = {rng.normal(), rng.normal()};
            a.normalize();
            Statevector s(n, a);
            const Gate g = random_gate(n, rng);
            s.apply(g);
            const oracle::CVector expect = oracle::gate_matrix(g, n) * a;
            max_err = std::max(max_err, (s.amplitudes() - expect).cwiseAbs().maxCoeff());
        }
    }
    double max_drift = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(8));
        Circuit c(n);
        for (int k = 0; k < 30; ++k) c.add(random_gate(n, rng));
        max_drift = std::max(max_drift, std::abs(run_circuit(c).norm() - 1.0));
    }
    return {max_err < 1e-12 && max_drift < 1e-10,
            "max amplitude error " + fmt(max_err) + ", max norm drift " + fmt(max_drift)};
}

// ------------------------------------------------------------------ AC2

Outcome ac2_kernel_identity() {
    Rng rng(202);
    bool ok = true;
    double diag_err = 0.0;
    for (EncodingKind kind : {EncodingKind::Angle, EncodingKind::IQP}) {
        for (int M : {1, 3, 5}) {
            const DataMatrix D(random_matrix(12, M, rng));
            const KernelMatrix K = quantum_kernel(D, EncodingSpec::make(kind, M), KernelMode::exact());
            for (Eigen::Index i = 0; i < K.size(); ++i) {
                diag_err = std::max(diag_err, std::abs(K.values(i, i) - 1.0));
                for (Eigen::Index j = 0; j < K.size(); ++j) ok = ok && K.values(i, j) == K.values(j, i);
            }
        }
    }
    Eigen::MatrixXd theta(20, 1);
    for (int i = 0; i < 20; ++i) theta(i, 0) = kPi * i / 19.0;
    double grid_err = 0.0;
    for (KernelRoute route : {KernelRoute::StateOverlap, KernelRoute::FidelityCircuit}) {
        const KernelMatrix K =
            quantum_kernel_from_angles(theta, EncodingSpec::make(EncodingKind::Angle, 1), KernelMode::exact(), route);
        for (int i = 0; i < 20; ++i)
            for (int j = 0; j < 20; ++j)
                grid_err = std::max(grid_err,
                                    std::abs(K.values(i, j) - std::pow(std::cos((theta(i, 0) - theta(j, 0)) / 2), 2)));
    }
    return {ok && diag_err <= 1e-12 && grid_err < 1e-10,
            std::string("exact symmetry ") + (ok ? "yes" : "no") + ", max |diag-1| " + fmt(diag_err) +
                ", 20x20 grid error " + fmt(grid_err)};
}

// ------------------------------------------------------------------ AC3

Outcome ac3_geometric_difference() {
    Rng rng(303);
    double max_rel = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index N = 2 + static_cast<Eigen::Index>(rng.below(7));
        const Eigen::MatrixXd KC = oracle::random_normalized_psd(N, rng, t % 2 == 0);
        const Eigen::MatrixXd KQ = oracle::random_normalized_psd(N, rng, t % 3 != 0);
        const double lambda = std::pow(10.0, rng.uniform(-6.0, -1.0));
        const double g = geometric_difference(KC, KQ, lambda);
        const double ref = oracle::geometric_difference(KC, KQ, lambda);
        max_rel = std::max(max_rel, std::abs(g - ref) / std::max(1.0, std::abs(ref)));
    }
    double self_err = 0.0;
    for (int t = 0; t < 20; ++t) {
        const Eigen::MatrixXd K = oracle::random_normalized_psd(2 + static_cast<Eigen::Index>(rng.below(7)), rng);
        self_err = std::max(self_err, std::abs(geometric_difference(K, K, 0.0) - 1.0));
    }
    const Eigen::MatrixXd X = random_matrix(74, 5, rng);
    Eigen::VectorXd y(74);
    for (int i = 0; i < 74; ++i) y[i] = X(i, 0) > 0 ? 1.0 : -1.0;
    ScreenOptions opt;
    opt.Ms = {2};
    opt.encodings = {EncodingKind::Angle};
    const ScreenReport r = screen(DataMatrix(X), y, opt);
    const bool threshold_ok = r.N == 74 && r.sqrt_N == std::sqrt(74.0) && std::abs(r.sqrt_N - 8.602) < 1e-3;
    return {max_rel < 1e-8 && self_err < 1e-8 && threshold_ok,
            "max relative error vs oracle " + fmt(max_rel) + ", |g(K||K)-1| " + fmt(self_err) + ", sqrt_N " +
                fmt(r.sqrt_N)};
}

// ------------------------------------------------------------------ AC4

Outcome ac4_svm() {
    double max_gap = 0.0;
    for (int seed = 0; seed < 50; ++seed) {
        Rng rng(derive_seed(404, static_cast<std::uint64_t>(seed)));
        const Eigen::Index N = 2 + static_cast<Eigen::Index>(seed % 9);
        const Eigen::MatrixXd K = oracle::random_normalized_psd(N, rng, seed % 4 != 0);
        Eigen::VectorXd y(N);
        for (Eigen::Index i = 0; i < N; ++i) y[i] = rng.bernoulli(0.5) ? 1.0 : -1.0;
        y[0] = 1.0;
        y[1] = -1.0;
        const SvmModel m = train_svm(K, y);
        const Eigen::VectorXd alpha = m.dual_coefficients.cwiseProduct(y);
        max_gap = std::max(max_gap, std::abs(dual_objective(K, y, alpha) - oracle::svm_dual_optimum(K, y, 1.0)));
    }
    SvmModel fixed;
    fixed.dual_coefficients = Eigen::Vector2d(0.6, -0.8);
    const double s = model_complexity(fixed);
    return {max_gap < 1e-4 && s == 1.0, "max dual objective gap " + fmt(max_gap) + ", complexity([0.6,-0.8]) = " + fmt(s)};
}

// ------------------------------------------------------------------ AC5

Outcome ac5_advantage_construction() {
    const Eigen::Index N = 16;
    const double sqrtN = std::sqrt(double(N));
    // Near hard-margin SVMs: at C = 1 every complexity is capped by sqrt(N) C.
    SvmOptions svm;
    svm.C = 100.0;
    int adv_ok = 0, linear_ok = 0;
    double min_g = 1e300, min_ratio = 1e300, max_linear = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
        Rng rng(derive_seed(505, static_cast<std::uint64_t>(seed)));
        // Two separated clusters along the first feature.
        Eigen::MatrixXd D = 0.3 * random_matrix(N, 2, rng);
        for (Eigen::Index i = 0; i < N; ++i) D(i, 0) += i % 2 ? 1.5 : -1.5;
        KernelMatrix KC;
        KC.values = D * D.transpose();
        KC = normalize_kernel(KC);

        // K_Q lives on the orthogonal complement of range(D), distinct eigenvalues.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(D);
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, N);
        const Eigen::MatrixXd B = Q.rightCols(N - 2);
        Eigen::VectorXd c(N - 2);
        for (Eigen::Index k = 0; k < c.size(); ++k) c[k] = 1.0 + double(k) + 0.1 * rng.uniform();
        KernelMatrix KQ;
        KQ.source = KernelSource::QuantumExact;
        KQ.values = B * c.asDiagonal() * B.transpose();
        KQ.values = 0.5 * (KQ.values + KQ.values.transpose());
        KQ = normalize_kernel(KQ);

        const double lambda = default_lambda(KC);
        const double g = geometric_difference(KC, KQ, lambda);
        min_g = std::min(min_g, g);
        const AdversarialLabels adv = adversarial_labels(KC, KQ, lambda);
        if ((adv.labels.array() > 0).all() || (adv.labels.array() < 0).all()) continue;
        const double sC = model_complexity(train_svm(KC, adv.labels, svm));
        const double sQ = model_complexity(train_svm(KQ, adv.labels, svm));
        min_ratio = std::min(min_ratio, sC / sQ);
        if (g > sqrtN && sC > sQ) ++adv_ok;

        Eigen::VectorXd y = D.col(0);
        for (Eigen::Index i = 0; i < N; ++i) y[i] = y[i] >= 0 ? 1.0 : -1.0;
        const double sLin = model_complexity(train_svm(KC, y, svm));
        max_linear = std::max(max_linear, sLin);
        if (sLin < sqrtN) ++linear_ok;
    }
    return {adv_ok == 10 && linear_ok == 10,
            std::to_string(adv_ok) + "/10 constructions with g > sqrt(N) and s_C > s_Q (min g " + fmt(min_g) +
                ", min s_C/s_Q " + fmt(min_ratio) + "); linear labels s_C < sqrt(N) in " + std::to_string(linear_ok) +
                "/10 (max " + fmt(max_linear) + "); C = 100"};
}

// ------------------------------------------------------------------ AC6

Outcome ac6_shot_noise() {
    std::size_t within = 0, total = 0;
    for (int seed = 0; seed < 20; ++seed) {
        Rng rng(derive_seed(606, static_cast<std::uint64_t>(seed)));
        const EncodingKind kind = seed % 2 ? EncodingKind::IQP : EncodingKind::Angle;
        const DataMatrix D(random_matrix(10, 3, rng));
        const EncodingSpec spec = EncodingSpec::make(kind, 3);
        const KernelMatrix exact = quantum_kernel(D, spec, KernelMode::exact());
        const KernelMatrix sampled =
            quantum_kernel(D, spec, KernelMode::sampling(10000, derive_seed(607, static_cast<std::uint64_t>(seed))));
        for (Eigen::Index i = 0; i < exact.size(); ++i)
            for (Eigen::Index j = 0; j < exact.size(); ++j) {
                if (i == j) continue;
                ++total;
                within += std::abs(sampled.values(i, j) - exact.values(i, j)) <= 0.05;
            }
    }
    const double frac = double(within) / double(total);
    return {frac >= 0.95, fmt(100.0 * frac) + "% of " + std::to_string(total) + " off-diagonal entries within 0.05"};
}

// ------------------------------------------------------------------ AC7

Outcome ac7_generative() {
    // Two tight clusters of 2x2 single-channel patches, weights 0.7 / 0.3.
    Rng rng(707);
    const std::size_t n = 400;
    PatchTensor patches("clusters", n, 1, 2, 2, {"x"});
    for (std::size_t i = 0; i < n; ++i) {
        const bool first = rng.uniform() < 0.7;
        const double base[4] = {first ? 5.0 : 0.0, first ? 5.0 : 0.0, first ? 0.0 : 5.0, first ? 0.0 : 5.0};
        for (int p = 0; p < 4; ++p) patches.values[i * 4 + p] = static_cast<float>(base[p] + 0.4 * rng.normal());
    }
    const int k = 4;
    const Codebook cb = fit_codebook(patches, k, 50, 708);
    const auto assigned = encode(patches, cb);
    const BitstringDistribution target = empirical_distribution(assigned, k);

    SpsaOptions opt;
    opt.iterations = 1500;
    opt.a = 1.5;
    opt.c = 0.1;
    const QcbmModel model = train_qcbm(target, k, 6, ExactWarmStart{}, opt, 709);
    const double exact_tv = total_variation(qcbm_probabilities(model), target.dense());

    const auto samples = sample_qcbm(model, 10000, 710, 0.1);
    const auto repaired = mitigate(samples, cb);
    const double decoded_tv = total_variation(empirical_distribution(repaired, k), target);
    return {exact_tv < 0.1 && decoded_tv <= 0.15,
            "exact TV " + fmt(exact_tv) + ", decoded TV after p=0.1 flips and mitigation " + fmt(decoded_tv)};
}

// ------------------------------------------------------------------ AC8

Outcome ac8_quanvolution() {
    Rng rng(808);
    FeatureDictionary dict;
    dict.centroids = (random_matrix(512, 4, rng).array().abs() * 1.0).matrix();
    dict.outputs = Eigen::MatrixXd::Zero(512, 4);
    int mismatches = 0;
    for (int q = 0; q < 1000; ++q) {
        const Eigen::VectorXd query = random_matrix(4, 1, rng).cwiseAbs();
        mismatches += nearest_centroid(query, dict) != oracle::nearest_row(dict.centroids, query);
    }

    SyntheticConfig cfg;
    cfg.n_scenes = 200;
    cfg.seed = 809;
    const WeatherDataset ds = generate_synthetic(cfg);
    const Split sp = split(ds.lght.n(), {0.8, 0.1, 0.1}, 810);
    const PatchTensor train = ds.lght.select(sp.train), test = ds.lght.select(sp.test);
    const QuanvLayer layer(QuanvLayerSpec::make(EncodingKind::Angle, 2, 2, 4, 811, 1000), fit_channel_scaler(train));
    const FeatureDictionary d = build_dictionary(patch_population(train, layer), layer, 256, 812);
    const PatchTensor f_train = quanvolve_tensor(train, layer, QuanvSource::Dictionary(d));
    const PatchTensor f_test = quanvolve_tensor(test, layer, QuanvSource::Dictionary(d));
    const bool shape_ok = f_test.c() == 12 && f_test.h() == 16 && f_test.w() == 16;
    float lo = 0.0f, hi = 0.0f;
    for (const PatchTensor* f : {&f_train, &f_test})
        for (float v : f->values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }

    const PatchTensor t_train = ds.targ.select(sp.train), t_test = ds.targ.select(sp.test);
    const ReadoutModel model = fit_readout(f_train, t_train, 1.0);
    const PatchTensor pred = predict(model, f_test, t_test);
    bool beats = true;
    std::string mse_detail;
    for (std::size_t c = 0; c < t_test.c(); ++c) {
        double mean = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < t_train.n(); ++i) {
            mean += t_train.image(i, c).cast<double>().sum();
            count += t_train.h() * t_train.w();
        }
        mean /= double(count);
        double m_model = 0.0, m_const = 0.0;
        for (std::size_t i = 0; i < t_test.n(); ++i) {
            m_model += mse(pred.image(i, c), t_test.image(i, c));
            m_const += (t_test.image(i, c).cast<double>().array() - mean).square().mean();
        }
        beats = beats && m_model < m_const;
        mse_detail += " " + t_test.channels[c] + " " + fmt(m_model / t_test.n()) + "<" + fmt(m_const / t_test.n());
    }
    return {mismatches == 0 && shape_ok && lo >= -1.0f && hi <= 1.0f && beats,
            std::to_string(mismatches) + " lookup mismatches; features " + std::to_string(f_test.c()) + "x" +
                std::to_string(f_test.h()) + "x" + std::to_string(f_test.w()) + " in [" + fmt(lo) + ", " + fmt(hi) +
                "]; test MSE model<constant:" + mse_detail};
}

// ------------------------------------------------------------------ AC9

Outcome ac9_metrics() {
    bool ok = true;
    Eigen::Matrix2d p, t;
    p << 5, 0, 5, 0;
    t << 5, 5, 0, 0;
    const ContingencyTable small = contingency(p, t, 1.0);
    ok = ok && small.hits == 1 && small.misses == 1 && small.false_alarms == 1 && small.correct_rejections == 1;

    ContingencyTable fixture;
    fixture.hits = 40;
    fixture.misses = 10;
    fixture.false_alarms = 10;
    const VerificationMetrics m = metrics(fixture);
    ok = ok && m.pod == 0.8 && m.sucr == 0.8 && m.bias == 1.0 && m.csi && std::abs(*m.csi - 2.0 / 3.0) < 1e-15 &&
         std::abs(*m.csi - 0.6667) < 5e-5;

    Rng rng(909);
    double max_err = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        ContingencyTable r;
        r.hits = 1 + rng.below(1000);
        r.misses = rng.below(1000);
        r.false_alarms = rng.below(1000);
        r.correct_rejections = rng.below(1000);
        const VerificationMetrics v = metrics(r);
        max_err = std::max(max_err, std::abs(*v.csi - csi_from_pod_sucr(*v.pod, *v.sucr)));
    }

    Eigen::MatrixXd field = random_matrix(16, 16, rng).cwiseAbs() * 10.0;
    const VerificationMetrics perfect = metrics(contingency(field, field, 5.0));
    ok = ok && perfect.pod == 1.0 && perfect.sucr == 1.0 && perfect.csi == 1.0 && perfect.bias == 1.0;
    return {ok && max_err <= 1e-12, std::string("fixtures ") + (ok ? "exact" : "wrong") +
                                        ", max CSI identity error " + fmt(max_err)};
}

// ----------------------------------------------------------------- AC10

Outcome ac10_calibration() {
    SyntheticConfig cfg;
    cfg.n_scenes = 500;
    cfg.seed = 1010;
    const WeatherDataset ds = generate_synthetic(cfg);
    const PatchTensor& truth = ds.targ;
    // Under-forecast: 0.6 x truth with multiplicative noise.
    PatchTensor pred = truth;
    Rng rng(1011);
    for (float& v : pred.values) v = static_cast<float>(0.6 * v * std::exp(0.2 * rng.normal()));

    const std::size_t n_fit = 250;
    const LevelThresholds levels = LevelThresholds::defaults();
    int checked = 0, improved = 0;
    std::string worst;
    double worst_gain = 1e300;
    for (std::size_t c = 0; c < truth.c(); ++c) {
        std::vector<double> fp, ft;
        for (std::size_t i = 0; i < n_fit; ++i)
            for (std::size_t k = 0; k < truth.h() * truth.w(); ++k) {
                fp.push_back(pred.values[pred.offset(i, c, 0, 0) + k]);
                ft.push_back(truth.values[truth.offset(i, c, 0, 0) + k]);
            }
        const CalibrationMap map = fit_calibration(fp, ft);
        const Product product = parse_product(truth.channels[c]);
        for (double threshold : levels.of(product)) {
            ContingencyTable raw, cal;
            for (std::size_t i = n_fit; i < truth.n(); ++i) {
                const Eigen::MatrixXd tr = truth.image(i, c).cast<double>();
                const Eigen::MatrixXd pr = pred.image(i, c).cast<double>();
                raw += contingency(pr, tr, threshold);
                cal += contingency(pr.unaryExpr([&](double x) { return map(x); }), tr, threshold);
            }
            if (raw.hits + raw.misses < 100) continue;
            ++checked;
            const double before = std::abs(*metrics(raw).bias - 1.0);
            const double after = std::abs(*metrics(cal).bias - 1.0);
            if (after < before) ++improved;
            if (before - after < worst_gain) {
                worst_gain = before - after;
                worst = to_string(product) + "@" + fmt(threshold) + " " + fmt(before) + "->" + fmt(after);
            }
        }
    }
    return {checked > 0 && improved == checked,
            std::to_string(improved) + "/" + std::to_string(checked) +
                " levels with >= 100 event pixels improved; smallest gain " + worst};
}

// ----------------------------------------------------------------- AC11

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + QKSCREEN_CLI_PATH + "\" " + args + " 2>>\"" + log.string() + "\"";
    return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome ac11_reproducibility() {
    const fs::path root = fs::temp_directory_path() / ("qkscreen_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path log = root / "cli.log";
    const std::string r = "\"" + root.string() + "\"";
    const std::vector<std::string> steps{
        "gen-data --scenes 120 --seed 7 --output-dir " + r + "/data",
        "quanvolve --data " + r + "/data --source lght --encoding angle --dict-k 256 --seed 11 --output-dir " + r +
            "/features",
        "fit-readout --features-dir " + r + "/features --ridge 1.0 --output-dir " + r + "/readout",
        "evaluate --pred " + r + "/readout/pred_test --truth " + r + "/features/targ_test --cal-pred " + r +
            "/readout/pred_cal --cal-truth " + r + "/features/targ_cal --model-name quanv --output-dir " + r + "/eval"};
    const std::vector<fs::path> reports{root / "data/gen_data_report.json", root / "features/quanvolve_report.json",
                                        root / "readout/readout_report.json", root / "eval/metrics.json"};
    std::vector<std::string> first;
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& s : steps)
            if (run_cli(s, log) != 0) return {false, "command failed: qkscreen " + s + " (see " + log.string() + ")"};
        std::vector<std::string> bytes;
        for (const auto& p : reports) bytes.push_back(slurp(p));
        if (pass == 0)
            first = bytes;
        else
            for (std::size_t i = 0; i < reports.size(); ++i)
                if (bytes[i] != first[i] || bytes[i].empty())
                    return {false, reports[i].filename().string() + " differs between runs"};
    }
    fs::remove_all(root);
    return {true, std::to_string(reports.size()) + " JSON reports byte-identical across two runs"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"AC1", "simulator correctness", 60, ac1_simulator},
        {"AC2", "kernel identity and symmetry", 0, ac2_kernel_identity},
        {"AC3", "geometric difference oracle", 0, ac3_geometric_difference},
        {"AC4", "SVM oracle equivalence", 0, ac4_svm},
        {"AC5", "advantage construction", 300, ac5_advantage_construction},
        {"AC6", "shot-noise convergence", 0, ac6_shot_noise},
        {"AC7", "generative pipeline", 600, ac7_generative},
        {"AC8", "quanvolution", 0, ac8_quanvolution},
        {"AC9", "verification metrics", 0, ac9_metrics},
        {"AC10", "calibration", 0, ac10_calibration},
        {"AC11", "end-to-end reproducibility", 900, ac11_reproducibility},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_s > 0 && secs > c.limit_s) {
            o.pass = false;
            o.detail += "; exceeded " + fmt(c.limit_s) + " s limit";
        }
        failures += !o.pass;
        std::printf("%s %s: %s (%s; %.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
