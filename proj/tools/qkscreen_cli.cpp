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

// qkscreen command-line front end. Subcommands exchange PatchTensor file
// pairs and JSON reports; reports are byte-stable for identical inputs.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qkscreen/generative.hpp"
#include "qkscreen/kernelscreen.hpp"
#include "qkscreen/parallel.hpp"
#include "qkscreen/quanvolve.hpp"
#include "qkscreen/qsim.hpp"
#include "qkscreen/rng.hpp"
#include "qkscreen/wxdata.hpp"
#include "qkscreen/wxverify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qkscreen;

namespace {

constexpr const char* kTool = "qkscreen";
constexpr const char* kVersion = "0.1.0";

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

bool g_quiet = false;

void log(const std::string& msg) {
    if (!g_quiet) std::cerr << kTool << ": " << msg << "\n";
}

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Every option of a subcommand with its parsed or default value.
json flag_set(const CLI::App& sub) {
    json flags = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
        const std::string name = "--" + opt->get_lnames().front();
        if (opt->count() == 0) {
            flags[name] = opt->get_default_str();
            continue;
        }
        const auto& r = opt->results();
        if (r.size() == 1)
            flags[name] = r.front();
        else
            flags[name] = r;
    }
    return flags;
}

json report_header(const CLI::App& sub) {
    return json{{"tool", kTool}, {"version", kVersion}, {"command", sub.get_name()}, {"flags", flag_set(sub)}};
}

json tensor_digest(const fs::path& stem) {
    return json{{"json", file_digest(manifest_path(stem))}, {"bin", file_digest(payload_path(stem))}};
}

json shape_of(const PatchTensor& t) { return json(t.shape); }

void write_report(const json& report, const fs::path& path) {
    write_file_atomic(path, report.dump(2) + "\n");
    log("wrote " + path.string());
}

std::vector<double> channel_pixels(const PatchTensor& t, std::size_t c) {
    std::vector<double> out;
    out.reserve(t.n() * t.h() * t.w());
    for (std::size_t i = 0; i < t.n(); ++i) {
        const ImageMap img = t.image(i, c);
        for (Eigen::Index k = 0; k < img.size(); ++k) out.push_back(img.data()[k]);
    }
    return out;
}

std::size_t channel_index(const PatchTensor& t, const std::string& name) {
    const auto it = std::find(t.channels.begin(), t.channels.end(), name);
    if (it == t.channels.end()) throw std::runtime_error("tensor '" + t.name + "' has no channel '" + name + "'");
    return static_cast<std::size_t>(it - t.channels.begin());
}

// Seeded draw of `count` distinct indices from [0, n), returned ascending.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, std::uint64_t seed) {
    if (count > n)
        throw std::runtime_error("requested " + std::to_string(count) + " samples from " + std::to_string(n) +
                                 " scenes");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    fs::path output_dir;
    std::size_t scenes = 200;
    std::uint64_t seed = 0;
};

void add_gen_data(CLI::App& app, GenDataArgs& a) {
    auto* sub = app.add_subcommand("gen-data", "Generate a seeded synthetic SAT/LGHT/MOD/TARG dataset");
    sub->add_option("--output-dir", a.output_dir, "Directory for the tensor file pairs")->required();
    sub->add_option("--scenes", a.scenes, "Number of 32x32 scenes")->check(CLI::PositiveNumber);
    sub->add_option("--seed", a.seed, "Generator seed")->required();
}

int run_gen_data(const CLI::App& sub, const GenDataArgs& a) {
    SyntheticConfig cfg;
    cfg.n_scenes = a.scenes;
    cfg.seed = a.seed;
    cfg.validate();
    const WeatherDataset ds = generate_synthetic(cfg);
    fs::create_directories(a.output_dir);

    json report = report_header(sub);
    report["seeds"] = {{"seed", a.seed}};
    report["config"] = cfg;
    json outputs = json::object();
    for (const PatchTensor* t : {&ds.sat, &ds.lght, &ds.mod, &ds.targ}) {
        const fs::path stem = a.output_dir / t->name;
        write_tensor(*t, stem);
        outputs[t->name] = tensor_digest(stem);
        outputs[t->name]["shape"] = shape_of(*t);
    }
    report["outputs"] = outputs;
    write_report(report, a.output_dir / "gen_data_report.json");
    return 0;
}

// ------------------------------------------------------------------ screen

struct ScreenArgs {
    fs::path data;
    std::string source = "lght";
    std::size_t n_samples = 74;
    std::vector<int> pcs{4, 8, 16};
    std::vector<std::string> encodings{"angle", "iqp"};
    std::string mode = "exact";
    std::optional<std::uint64_t> shots;
    int label_level = 2;
    double svm_c = 1.0;
    std::optional<double> lambda;
    std::uint64_t seed = 0;
    bool adversarial = false;
    bool export_kernels = false;
    fs::path output_dir;
};

void add_screen(CLI::App& app, ScreenArgs& a) {
    auto* sub = app.add_subcommand("screen", "Kernel advantage screen over PCA widths and encodings");
    sub->add_option("--data", a.data, "Dataset directory from gen-data")->required();
    sub->add_option("--source", a.source, "Input source")->check(CLI::IsMember({"lght", "sat", "mod"}));
    sub->add_option("--n-samples", a.n_samples, "Scenes sampled as feature vectors")->check(CLI::PositiveNumber);
    sub->add_option("--pcs", a.pcs, "Principal-component counts (qubits)")->delimiter(',');
    sub->add_option("--encoding", a.encodings, "Encodings")->delimiter(',')->check(CLI::IsMember({"angle", "iqp"}));
    sub->add_option("--mode", a.mode, "Kernel evaluation")->check(CLI::IsMember({"exact", "sampled"}));
    sub->add_option("--shots", a.shots, "Shots per kernel entry (sampled mode)");
    sub->add_option("--label-level", a.label_level, "VIL level defining the positive class (1-based)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--svm-c", a.svm_c, "SVM box constraint")->check(CLI::PositiveNumber);
    sub->add_option("--lambda", a.lambda, "Geometric-difference regulariser (default 1e-6 tr/N)");
    sub->add_option("--seed", a.seed, "Seed for scene sampling and shot noise")->required();
    sub->add_flag("--adversarial", a.adversarial, "Add rows trained on adversarial labels");
    sub->add_flag("--export-kernels", a.export_kernels, "Write every kernel matrix as CSV");
    sub->add_option("--output-dir", a.output_dir, "Report directory")->required();
}

int run_screen(const CLI::App& sub, const ScreenArgs& a) {
    for (int M : a.pcs) {
        if (M < 1) throw UsageError("--pcs values must be positive");
        if (M > kMaxQubits)
            throw UsageError("--pcs " + std::to_string(M) + " exceeds the " + std::to_string(kMaxQubits) +
                             "-qubit statevector cap; pick widths <= " + std::to_string(kMaxQubits));
    }
    if (a.mode == "sampled" && !a.shots) throw UsageError("--mode sampled needs --shots");
    if (a.shots && *a.shots == 0) throw UsageError("--shots must be positive");

    const fs::path src_stem = a.data / a.source, targ_stem = a.data / "targ";
    const PatchTensor src = read_tensor(src_stem);
    const PatchTensor targ = read_tensor(targ_stem);
    if (src.n() != targ.n()) throw std::runtime_error("source and target scene counts differ");

    const auto thresholds = LevelThresholds::defaults().of(Product::VIL);
    if (a.label_level > static_cast<int>(thresholds.size()))
        throw UsageError("--label-level must be at most " + std::to_string(thresholds.size()));
    const double threshold = thresholds[static_cast<std::size_t>(a.label_level - 1)];

    const std::uint64_t sample_seed = derive_seed(a.seed, 1), shot_seed = derive_seed(a.seed, 2);
    const auto chosen = sample_without_replacement(src.n(), a.n_samples, sample_seed);
    const PatchTensor picked = src.select(chosen);
    std::vector<std::string> ids;
    for (std::size_t i : chosen) ids.push_back("scene-" + std::to_string(i));
    const DataMatrix data(picked.as_rows(), ids);

    // Label: scene-mean VIL at or above the level threshold.
    const std::size_t vil = channel_index(targ, "VIL");
    Eigen::VectorXd y(static_cast<Eigen::Index>(chosen.size()));
    int positives = 0;
    for (std::size_t r = 0; r < chosen.size(); ++r) {
        const bool event = targ.image(chosen[r], vil).cast<double>().mean() >= threshold;
        y[static_cast<Eigen::Index>(r)] = event ? 1.0 : -1.0;
        positives += event;
    }
    if (positives == 0 || positives == static_cast<int>(chosen.size()))
        throw std::runtime_error("all " + std::to_string(chosen.size()) + " sampled scenes fall in one class at VIL level " +
                                 std::to_string(a.label_level) + "; change --label-level or --n-samples");

    ScreenOptions opt;
    opt.Ms = a.pcs;
    opt.encodings.clear();
    for (const auto& e : a.encodings) opt.encodings.push_back(parse_encoding_kind(e));
    opt.mode = a.mode == "sampled" ? KernelMode::sampling(*a.shots, shot_seed) : KernelMode::exact();
    opt.C = a.svm_c;
    opt.lambda = a.lambda;
    opt.adversarial = a.adversarial;
    const ScreenReport sr = screen(data, y, opt);

    fs::create_directories(a.output_dir);
    json report = report_header(sub);
    report["seeds"] = {{"seed", a.seed}, {"sample_seed", sample_seed}, {"shot_seed", shot_seed}};
    report["inputs"] = {{a.source, tensor_digest(src_stem)}, {"targ", tensor_digest(targ_stem)}};
    report["samples"] = chosen;
    report["labels"] = {{"product", "VIL"},
                        {"statistic", "scene_mean"},
                        {"level", a.label_level},
                        {"threshold", threshold},
                        {"positive", positives},
                        {"negative", static_cast<int>(chosen.size()) - positives}};
    report["screen"] = sr;

    std::ostringstream csv;
    csv << std::setprecision(10) << "M,encoding,labels,mode,shots,g,sqrt_N,s_C,s_Q,verdict,note\n";
    for (const auto& row : sr.rows) {
        csv << row.M << ',' << row.encoding.label() << ',' << row.labels << ',' << row.mode << ','
            << (row.shots ? std::to_string(*row.shots) : "") << ',' << row.g << ',' << sr.sqrt_N << ',' << row.s_C
            << ',' << row.s_Q << ',' << to_string(row.verdict) << ",\"" << row.note << "\"\n";
    }
    write_file_atomic(a.output_dir / "screen_rows.csv", csv.str());

    if (a.export_kernels) {
        const fs::path kdir = a.output_dir / "kernels";
        fs::create_directories(kdir);
        json files = json::array();
        for (int M : opt.Ms) {
            const DataMatrix pcs = pca_reduce(data, M);
            const fs::path kc = kdir / ("K_C_M" + std::to_string(M) + ".csv");
            write_kernel_csv(normalize_kernel(classical_kernel(pcs)), kc);
            files.push_back(kc.filename().string());
            for (EncodingKind kind : opt.encodings) {
                KernelMode mode = opt.mode;
                if (mode.sampled) mode.seed = derive_seed(opt.mode.seed, static_cast<std::uint64_t>(M),
                                                          static_cast<std::uint64_t>(kind));
                const fs::path kq = kdir / ("K_Q_M" + std::to_string(M) + "_" + to_string(kind) + ".csv");
                write_kernel_csv(normalize_kernel(quantum_kernel(pcs, EncodingSpec::make(kind, M), mode)), kq);
                files.push_back(kq.filename().string());
            }
        }
        report["kernel_files"] = files;
    }
    write_report(report, a.output_dir / "screen_report.json");
    return 0;
}

// -------------------------------------------------------------------- qvae

struct QvaeArgs {
    fs::path data;
    std::string source = "lght";
    int codebook_k = 16;
    std::size_t kmeans_iters = 50;
    int layers = 2;
    std::string init = "marginal";
    std::size_t iters = 300;
    std::size_t refine_iters = 40;
    std::uint64_t shots = 2000;
    double noise_p = 0.0;
    std::size_t out = 100;
    std::uint64_t seed = 0;
    fs::path output_dir;
};

void add_qvae(CLI::App& app, QvaeArgs& a) {
    auto* sub = app.add_subcommand("qvae", "Codebook + QCBM generative replacement of an input source");
    sub->add_option("--data", a.data, "Dataset directory from gen-data")->required();
    sub->add_option("--source", a.source, "Source to model")->check(CLI::IsMember({"lght", "sat"}));
    sub->add_option("--codebook-k", a.codebook_k, "Codebook entries (one qubit each)")->check(CLI::PositiveNumber);
    sub->add_option("--kmeans-iters", a.kmeans_iters, "k-means iterations");
    sub->add_option("--layers", a.layers, "QCBM layers")->check(CLI::PositiveNumber);
    sub->add_option("--init", a.init, "Warm-start initial angles")->check(CLI::IsMember({"marginal", "random"}));
    sub->add_option("--iters", a.iters, "Exact warm-start SPSA iterations");
    sub->add_option("--refine-iters", a.refine_iters, "Sampled refinement SPSA iterations");
    sub->add_option("--shots", a.shots, "Shots per sampled loss evaluation")->check(CLI::PositiveNumber);
    sub->add_option("--noise-p", a.noise_p, "Bit-flip probability on samples")->check(CLI::Range(0.0, 0.5));
    sub->add_option("--out", a.out, "Synthetic scenes to emit")->check(CLI::PositiveNumber);
    sub->add_option("--seed", a.seed, "Master seed")->required();
    sub->add_option("--output-dir", a.output_dir, "Artifact directory")->required();
}

int run_qvae(const CLI::App& sub, const QvaeArgs& a) {
    if (a.codebook_k > kMaxQubits)
        throw UsageError("--codebook-k " + std::to_string(a.codebook_k) + " needs one qubit per entry; the cap is " +
                         std::to_string(kMaxQubits));
    if (a.codebook_k < 2) throw UsageError("--codebook-k must be at least 2");

    const fs::path src_stem = a.data / a.source;
    const PatchTensor src = read_tensor(src_stem);
    const std::uint64_t s_codebook = derive_seed(a.seed, 1), s_warm = derive_seed(a.seed, 2),
                        s_refine = derive_seed(a.seed, 3), s_synth = derive_seed(a.seed, 4),
                        s_check = derive_seed(a.seed, 5);

    Stopwatch sw;
    const Codebook cb = fit_codebook(src, a.codebook_k, a.kmeans_iters, s_codebook);
    const int k = cb.k();
    const auto assigned = encode(src, cb);
    const BitstringDistribution target = empirical_distribution(assigned, k);
    log("codebook fitted (" + std::to_string(k) + " entries) in " + std::to_string(sw.seconds()) + " s");

    SpsaOptions warm_opt;
    warm_opt.iterations = a.iters;
    warm_opt.marginal_init = a.init == "marginal";
    const QcbmModel warm = train_qcbm(target, k, a.layers, ExactWarmStart{}, warm_opt, s_warm);
    log("warm start TV " + std::to_string(warm.final_loss) + " after " + std::to_string(sw.seconds()) + " s");

    SpsaOptions refine_opt;
    refine_opt.iterations = a.refine_iters;
    refine_opt.a = 0.1;
    const QcbmModel refined =
        train_qcbm(target, k, a.layers, SampledRefine{a.shots, a.noise_p, warm.theta}, refine_opt, s_refine);
    log("refined sampled TV " + std::to_string(refined.final_loss) + " after " + std::to_string(sw.seconds()) + " s");

    const auto samples = sample_qcbm(refined, a.shots, s_check, a.noise_p);
    std::size_t valid = 0;
    for (const auto& s : samples) valid += std::count(s.begin(), s.end(), '1') == 1;
    const auto repaired = mitigate(samples, cb);
    const double decoded_tv = total_variation(empirical_distribution(repaired, k), target);

    const std::string synth_name = a.source + "_synthetic";
    const PatchTensor synth = synthesize_source(refined, cb, a.out, s_synth, a.noise_p, synth_name);

    fs::create_directories(a.output_dir);
    write_codebook(cb, a.output_dir / "codebook");
    write_file_atomic(a.output_dir / "qcbm_warm.json", json(warm).dump(2) + "\n");
    write_file_atomic(a.output_dir / "qcbm_refine.json", json(refined).dump(2) + "\n");
    write_tensor(synth, a.output_dir / synth_name);

    json report = report_header(sub);
    report["seeds"] = {{"seed", a.seed},     {"codebook", s_codebook}, {"warm_start", s_warm},
                       {"refine", s_refine}, {"synthesize", s_synth},  {"check", s_check}};
    report["inputs"] = {{a.source, tensor_digest(src_stem)}};
    report["codebook"] = {{"k", k}, {"counts", cb.counts}, {"iterations", cb.iterations}};
    report["target_distribution"] = target.probabilities;
    report["warm_start"] = {{"initial_tv", warm.initial_loss}, {"final_tv", warm.final_loss}, {"iterations", a.iters}};
    report["refine"] = {{"initial_tv", refined.initial_loss},
                        {"final_tv", refined.final_loss},
                        {"exact_tv", total_variation(qcbm_probabilities(refined), target.dense())},
                        {"iterations", a.refine_iters},
                        {"shots", a.shots},
                        {"noise_p", a.noise_p},
                        {"warm_start_from", "qcbm_warm.json"}};
    report["mitigation"] = {{"shots", a.shots},
                            {"valid_fraction", static_cast<double>(valid) / static_cast<double>(samples.size())},
                            {"decoded_tv", decoded_tv}};
    report["outputs"] = {{"codebook", tensor_digest(a.output_dir / "codebook")},
                         {synth_name, tensor_digest(a.output_dir / synth_name)},
                         {"qcbm_warm", file_digest(a.output_dir / "qcbm_warm.json")},
                         {"qcbm_refine", file_digest(a.output_dir / "qcbm_refine.json")}};
    report["outputs"][synth_name]["shape"] = shape_of(synth);
    write_report(report, a.output_dir / "qvae_report.json");
    return 0;
}

// --------------------------------------------------------------- quanvolve

struct QuanvolveArgs {
    fs::path data;
    std::string source = "lght";
    std::string encoding = "angle";
    std::size_t dict_k = 256;
    std::uint64_t shots = 1000;
    int patch = 2;
    int stride = 2;
    int depth = 4;
    std::vector<double> split{0.8, 0.1, 0.1};
    std::string mode = "dictionary";
    std::uint64_t seed = 0;
    fs::path output_dir;
};

void add_quanvolve(CLI::App& app, QuanvolveArgs& a) {
    auto* sub = app.add_subcommand("quanvolve", "Quanvolutional features for train/cal/test splits");
    sub->add_option("--data", a.data, "Dataset directory from gen-data")->required();
    sub->add_option("--source", a.source, "Input source")->check(CLI::IsMember({"lght", "sat", "mod"}));
    sub->add_option("--encoding", a.encoding, "Patch encoding")->check(CLI::IsMember({"angle", "iqp"}));
    sub->add_option("--dict-k", a.dict_k, "Dictionary entries")->check(CLI::PositiveNumber);
    sub->add_option("--shots", a.shots, "Shots per quanvolved patch")->check(CLI::PositiveNumber);
    sub->add_option("--patch", a.patch, "Patch edge (qubits = patch^2)")->check(CLI::PositiveNumber);
    sub->add_option("--stride", a.stride, "Patch stride")->check(CLI::PositiveNumber);
    sub->add_option("--depth", a.depth, "Random circuit depth")->check(CLI::NonNegativeNumber);
    sub->add_option("--split", a.split, "train,cal,test fractions")->delimiter(',')->expected(3);
    sub->add_option("--mode", a.mode, "Feature source")->check(CLI::IsMember({"dictionary", "direct", "exact"}));
    sub->add_option("--seed", a.seed, "Master seed")->required();
    sub->add_option("--output-dir", a.output_dir, "Feature directory")->required();
}

int run_quanvolve(const CLI::App& sub, const QuanvolveArgs& a) {
    if (a.patch * a.patch > kMaxQubits)
        throw UsageError("--patch " + std::to_string(a.patch) + " needs " + std::to_string(a.patch * a.patch) +
                         " qubits; the cap is " + std::to_string(kMaxQubits));
    const fs::path src_stem = a.data / a.source, targ_stem = a.data / "targ";
    const PatchTensor src = read_tensor(src_stem);
    const PatchTensor targ = read_tensor(targ_stem);
    if (src.n() != targ.n()) throw std::runtime_error("source and target scene counts differ");

    const std::uint64_t s_circuit = derive_seed(a.seed, 1), s_dict = derive_seed(a.seed, 2),
                        s_split = derive_seed(a.seed, 3), s_direct = derive_seed(a.seed, 4);
    const Split sp = split(src.n(), {a.split[0], a.split[1], a.split[2]}, s_split);
    const PatchTensor train = src.select(sp.train);

    const QuanvLayerSpec spec =
        QuanvLayerSpec::make(parse_encoding_kind(a.encoding), a.patch, a.stride, a.depth, s_circuit, a.shots);
    const QuanvLayer layer(spec, fit_channel_scaler(train));

    fs::create_directories(a.output_dir);
    Stopwatch sw;
    FeatureDictionary dict;
    QuanvSource source = QuanvSource::Direct(a.mode == "exact" ? QuanvMode::exact() : QuanvMode::sampling(s_direct));
    json dict_info = nullptr;
    if (a.mode == "dictionary") {
        const Eigen::MatrixXd population = patch_population(train, layer);
        dict = build_dictionary(population, layer, static_cast<Eigen::Index>(a.dict_k), s_dict);
        write_dictionary(dict, spec, a.output_dir / "dictionary");
        source = QuanvSource::Dictionary(dict);
        dict_info = {{"k", a.dict_k},
                     {"population", population.rows()},
                     {"files", {{"json", file_digest(a.output_dir / "dictionary.json")},
                                {"bin", file_digest(a.output_dir / "dictionary.bin")}}}};
        log("dictionary of " + std::to_string(a.dict_k) + " entries built in " + std::to_string(sw.seconds()) + " s");
    }

    json report = report_header(sub);
    report["seeds"] = {{"seed", a.seed},   {"circuit", s_circuit}, {"dictionary", s_dict},
                       {"split", s_split}, {"direct", s_direct}};
    report["inputs"] = {{a.source, tensor_digest(src_stem)}, {"targ", tensor_digest(targ_stem)}};
    report["layer"] = spec;
    report["layer_fingerprint"] = fingerprint(spec);
    report["scaler"] = {{"min", layer.scaler().min}, {"max", layer.scaler().max}};
    report["dictionary"] = dict_info;
    report["split"] = {{"train", sp.train.size()}, {"cal", sp.cal.size()}, {"test", sp.test.size()}};
    write_file_atomic(a.output_dir / "split.json", json(sp).dump(2) + "\n");

    json outputs = json::object();
    const std::array<std::pair<const char*, const std::vector<std::size_t>*>, 3> parts{
        {{"train", &sp.train}, {"cal", &sp.cal}, {"test", &sp.test}}};
    for (const auto& [part, indices] : parts) {
        const std::string fname = std::string("features_") + part, tname = std::string("targ_") + part;
        const PatchTensor features = quanvolve_tensor(src.select(*indices), layer, source, fname);
        write_tensor(features, a.output_dir / fname);
        write_tensor(targ.select(*indices), a.output_dir / tname);
        outputs[fname] = tensor_digest(a.output_dir / fname);
        outputs[fname]["shape"] = shape_of(features);
        outputs[tname] = tensor_digest(a.output_dir / tname);
        log(std::string(part) + " features written after " + std::to_string(sw.seconds()) + " s");
    }
    outputs["split"] = file_digest(a.output_dir / "split.json");
    report["outputs"] = outputs;
    write_report(report, a.output_dir / "quanvolve_report.json");
    return 0;
}

// ------------------------------------------------------------- fit-readout

struct ReadoutArgs {
    fs::path features_dir;
    double ridge = 1.0;
    fs::path output_dir;
};

void add_fit_readout(CLI::App& app, ReadoutArgs& a) {
    auto* sub = app.add_subcommand("fit-readout", "Ridge readout from quanvolved features to target products");
    sub->add_option("--features-dir", a.features_dir, "Directory from quanvolve")->required();
    sub->add_option("--ridge", a.ridge, "Ridge penalty (bias unpenalised)")->check(CLI::PositiveNumber);
    sub->add_option("--output-dir", a.output_dir, "Prediction directory")->required();
}

json mse_by_channel(const PatchTensor& pred, const PatchTensor& truth) {
    json out = json::object();
    for (std::size_t c = 0; c < truth.c(); ++c) {
        const auto p = channel_pixels(pred, c), t = channel_pixels(truth, c);
        double acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) acc += (p[i] - t[i]) * (p[i] - t[i]);
        out[truth.channels[c]] = p.empty() ? 0.0 : acc / static_cast<double>(p.size());
    }
    return out;
}

int run_fit_readout(const CLI::App& sub, const ReadoutArgs& a) {
    const fs::path d = a.features_dir;
    const PatchTensor f_train = read_tensor(d / "features_train"), t_train = read_tensor(d / "targ_train");
    const PatchTensor f_cal = read_tensor(d / "features_cal"), t_cal = read_tensor(d / "targ_cal");
    const PatchTensor f_test = read_tensor(d / "features_test"), t_test = read_tensor(d / "targ_test");

    const ReadoutModel model = fit_readout(f_train, t_train, a.ridge);
    PatchTensor p_cal = predict(model, f_cal, t_cal), p_test = predict(model, f_test, t_test);
    p_cal.name = "pred_cal";
    p_test.name = "pred_test";

    // Constant baseline: per-product training mean.
    PatchTensor baseline = t_test;
    baseline.name = "baseline_test";
    for (std::size_t c = 0; c < t_train.c(); ++c) {
        const auto px = channel_pixels(t_train, c);
        double mean = 0.0;
        for (double v : px) mean += v;
        mean /= static_cast<double>(px.size());
        for (std::size_t i = 0; i < baseline.n(); ++i)
            for (std::size_t y = 0; y < baseline.h(); ++y)
                for (std::size_t x = 0; x < baseline.w(); ++x) baseline.at(i, c, y, x) = static_cast<float>(mean);
    }

    fs::create_directories(a.output_dir);
    write_tensor(p_cal, a.output_dir / "pred_cal");
    write_tensor(p_test, a.output_dir / "pred_test");
    write_file_atomic(a.output_dir / "readout.json", json(model).dump(2) + "\n");

    json report = report_header(sub);
    report["seeds"] = json::object();
    json inputs = json::object();
    for (const char* stem : {"features_train", "targ_train", "features_cal", "targ_cal", "features_test", "targ_test"})
        inputs[stem] = tensor_digest(d / stem);
    report["inputs"] = inputs;
    report["features"] = f_train.c();
    report["test_mse"] = mse_by_channel(p_test, t_test);
    report["constant_mse"] = mse_by_channel(baseline, t_test);
    report["outputs"] = {{"pred_cal", tensor_digest(a.output_dir / "pred_cal")},
                         {"pred_test", tensor_digest(a.output_dir / "pred_test")},
                         {"readout", file_digest(a.output_dir / "readout.json")}};
    write_report(report, a.output_dir / "readout_report.json");
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    fs::path pred, truth;
    std::optional<fs::path> cal_pred, cal_truth;
    std::optional<fs::path> levels;
    int summary_level = 2;
    int diagram_resolution = 50;
    std::string model_name = "model";
    fs::path output_dir;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
    auto* sub = app.add_subcommand("evaluate", "Verification metrics, calibration and performance diagram");
    sub->add_option("--pred", a.pred, "Predicted TARG tensor stem")->required();
    sub->add_option("--truth", a.truth, "Truth TARG tensor stem")->required();
    sub->add_option("--cal-pred", a.cal_pred, "Calibration-split predictions (enables cal rows)");
    sub->add_option("--cal-truth", a.cal_truth, "Calibration-split truth");
    sub->add_option("--levels", a.levels, "JSON level thresholds {VIL: [...], ET: [...], CR: [...]}");
    sub->add_option("--summary-level", a.summary_level, "Level for the summary table (1-based)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--diagram-resolution", a.diagram_resolution, "CSI grid resolution")->check(CLI::PositiveNumber);
    sub->add_option("--model-name", a.model_name, "Row label in the summary table");
    sub->add_option("--output-dir", a.output_dir, "Metrics directory")->required();
}

void check_aligned(const PatchTensor& pred, const PatchTensor& truth) {
    if (pred.shape != truth.shape || pred.channels != truth.channels)
        throw std::runtime_error("prediction '" + pred.name + "' and truth '" + truth.name +
                                 "' are misaligned (shape or channel names differ)");
}

json opt_value(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int run_evaluate(const CLI::App& sub, const EvaluateArgs& a) {
    if (a.cal_pred.has_value() != a.cal_truth.has_value())
        throw UsageError("--cal-pred and --cal-truth must be given together");
    LevelThresholds levels = LevelThresholds::defaults();
    if (a.levels) {
        std::ifstream in(*a.levels);
        if (!in) throw std::runtime_error("cannot read levels file " + a.levels->string());
        levels = json::parse(in).get<LevelThresholds>();
    }

    const PatchTensor pred = read_tensor(a.pred), truth = read_tensor(a.truth);
    check_aligned(pred, truth);
    std::optional<PatchTensor> cal_pred, cal_truth;
    if (a.cal_pred) {
        cal_pred = read_tensor(*a.cal_pred);
        cal_truth = read_tensor(*a.cal_truth);
        check_aligned(*cal_pred, *cal_truth);
        if (cal_pred->channels != pred.channels) throw std::runtime_error("calibration and test channels differ");
    }

    struct Variant {
        std::string name;
        PatchTensor pred;
    };
    std::vector<Variant> variants{{"uncal", pred}};
    json calibration = json::object();
    if (cal_pred) {
        PatchTensor calibrated = pred;
        for (std::size_t c = 0; c < pred.c(); ++c) {
            const CalibrationMap map = fit_calibration(channel_pixels(*cal_pred, c), channel_pixels(*cal_truth, c));
            calibration[pred.channels[c]] = map;
            for (std::size_t i = 0; i < pred.n(); ++i)
                for (std::size_t y = 0; y < pred.h(); ++y)
                    for (std::size_t x = 0; x < pred.w(); ++x)
                        calibrated.at(i, c, y, x) = static_cast<float>(map(pred.at(i, c, y, x)));
        }
        variants.push_back({"cal", std::move(calibrated)});
    }

    json rows = json::array();
    std::vector<DiagramPoint> points;
    // summary[variant][column] at the summary level
    std::map<std::string, std::map<std::string, json>> summary;
    const json mse_by_variant = [&] {
        json m = json::object();
        for (const auto& v : variants) m[v.name] = mse_by_channel(v.pred, truth);
        return m;
    }();

    for (std::size_t c = 0; c < truth.c(); ++c) {
        const Product product = parse_product(truth.channels[c]);
        const auto& thresholds = levels.of(product);
        const std::string pname = to_string(product);
        for (const auto& v : variants) {
            const double m = mse_by_variant[v.name][truth.channels[c]].get<double>();
            summary[v.name][pname + " MSE"] = m;
            for (std::size_t l = 0; l < thresholds.size(); ++l) {
                ContingencyTable table;
                for (std::size_t i = 0; i < truth.n(); ++i) table += contingency(v.pred.image(i, c), truth.image(i, c), thresholds[l]);
                const VerificationMetrics vm = metrics(table);
                const int level = static_cast<int>(l) + 1;
                rows.push_back({{"model", a.model_name},
                                {"product", pname},
                                {"level", level},
                                {"threshold", thresholds[l]},
                                {"variant", v.name},
                                {"hits", table.hits},
                                {"misses", table.misses},
                                {"false_alarms", table.false_alarms},
                                {"correct_rejections", table.correct_rejections},
                                {"pod", opt_value(vm.pod)},
                                {"sucr", opt_value(vm.sucr)},
                                {"csi", opt_value(vm.csi)},
                                {"bias", opt_value(vm.bias)},
                                {"mse", m}});
                points.push_back({pname + " L" + std::to_string(level) + " " + v.name, vm.pod, vm.sucr});
                if (level == a.summary_level) {
                    summary[v.name][pname + " CSI"] = opt_value(vm.csi);
                    summary[v.name][pname + " BIAS"] = opt_value(vm.bias);
                    summary[v.name][pname + " POD"] = opt_value(vm.pod);
                    summary[v.name][pname + " SUCR"] = opt_value(vm.sucr);
                }
            }
        }
    }

    std::vector<std::string> columns{"model"};
    for (const char* stat : {"MSE", "CSI", "BIAS", "POD", "SUCR"})
        for (const char* p : {"VIL", "ET", "CR"}) columns.push_back(std::string(p) + " " + stat);
    json table_rows = json::array();
    std::ostringstream summary_csv;
    summary_csv << std::setprecision(6);
    for (std::size_t k = 0; k < columns.size(); ++k) summary_csv << (k ? "," : "") << columns[k];
    summary_csv << "\n";
    for (const char* vname : {"cal", "uncal"}) {
        if (!summary.count(vname)) continue;
        json r = json::array({a.model_name + " " + vname});
        summary_csv << a.model_name << ' ' << vname;
        for (std::size_t k = 1; k < columns.size(); ++k) {
            const auto it = summary[vname].find(columns[k]);
            const json cell = it == summary[vname].end() ? json(nullptr) : it->second;
            r.push_back(cell);
            summary_csv << ',';
            if (!cell.is_null()) summary_csv << cell.get<double>();
        }
        summary_csv << "\n";
        table_rows.push_back(r);
    }

    const PerformanceDiagram diagram = performance_diagram(points, a.diagram_resolution);
    fs::create_directories(a.output_dir);
    write_file_atomic(a.output_dir / "diagram.csv", diagram_csv(diagram));
    write_file_atomic(a.output_dir / "diagram.svg", diagram_svg(diagram, a.model_name + " performance diagram"));
    write_file_atomic(a.output_dir / "summary.csv", summary_csv.str());

    json report = report_header(sub);
    report["seeds"] = json::object();
    json inputs = {{"pred", tensor_digest(a.pred)}, {"truth", tensor_digest(a.truth)}};
    if (a.cal_pred) {
        inputs["cal_pred"] = tensor_digest(*a.cal_pred);
        inputs["cal_truth"] = tensor_digest(*a.cal_truth);
    }
    if (a.levels) inputs["levels"] = file_digest(*a.levels);
    report["inputs"] = inputs;
    report["levels"] = levels;
    report["rows"] = rows;
    report["summary"] = {{"level", a.summary_level}, {"columns", columns}, {"rows", table_rows}};
    report["calibration"] = calibration;
    report["diagram_warnings"] = diagram.warnings;
    report["outputs"] = {{"diagram_csv", file_digest(a.output_dir / "diagram.csv")},
                         {"diagram_svg", file_digest(a.output_dir / "diagram.svg")},
                         {"summary_csv", file_digest(a.output_dir / "summary.csv")}};
    write_report(report, a.output_dir / "metrics.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-kernel screening, QCBM source replacement and quanvolution on synthetic weather data",
                 kTool};
    app.set_version_flag("--version", kVersion);
    app.option_defaults()->always_capture_default();
    app.add_flag("-q,--quiet", g_quiet, "Suppress progress messages on stderr");
    app.require_subcommand(1);
    app.fallthrough();

    GenDataArgs gen;
    ScreenArgs scr;
    QvaeArgs qvae;
    QuanvolveArgs quanv;
    ReadoutArgs readout;
    EvaluateArgs eval;
    add_gen_data(app, gen);
    add_screen(app, scr);
    add_qvae(app, qvae);
    add_quanvolve(app, quanv);
    add_fit_readout(app, readout);
    add_evaluate(app, eval);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    Stopwatch sw;
    try {
        int rc = 0;
        if (name == "gen-data")
            rc = run_gen_data(*sub, gen);
        else if (name == "screen")
            rc = run_screen(*sub, scr);
        else if (name == "qvae")
            rc = run_qvae(*sub, qvae);
        else if (name == "quanvolve")
            rc = run_quanvolve(*sub, quanv);
        else if (name == "fit-readout")
            rc = run_fit_readout(*sub, readout);
        else
            rc = run_evaluate(*sub, eval);
        log(name + " finished in " + std::to_string(sw.seconds()) + " s (" + std::to_string(worker_count()) +
            " workers)");
        return rc;
    } catch (const UsageError& e) {
        std::cerr << kTool << " " << name << ": usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << kTool << " " << name << ": error: " << e.what() << "\n";
        return 1;
    }
}
