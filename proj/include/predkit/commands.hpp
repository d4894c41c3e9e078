#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "predkit/bench.hpp"
#include "predkit/errors.hpp"
#include "predkit/estimators.hpp"
#include "predkit/io.hpp"
#include "predkit/labelshift.hpp"
#include "predkit/prediction.hpp"
#include "predkit/synth.hpp"

namespace predkit {

struct ScoreOptions {
    std::string input;
    ScoreKind kind = ScoreKind::Logits;
    double temperature = kDefaultTemperature;
    std::optional<std::string> calibration;
    std::optional<int> k_head;
    bool retemper_probs = false;  // re-temper probability inputs at `temperature`
};

inline PredictionMatrix build_prediction_matrix(const Matrix& values, ScoreKind kind,
                                                double temperature, bool retemper_probs) {
    if (kind == ScoreKind::Logits) {
        return temper_softmax(RawScores::logits(values), temperature);
    }
    PredictionMatrix p = adopt_probabilities(RawScores::probabilities(values));
    if (retemper_probs) return retemper(p, temperature);
    return p;
}

// `score`: full estimator report for one prediction file, as JSON.
inline nlohmann::ordered_json run_score(const ScoreOptions& opt) {
    const auto file = read_prediction_file(opt.input);
    const PredictionMatrix p =
        build_prediction_matrix(file.values, opt.kind, opt.temperature, opt.retemper_probs);

    std::optional<CalibrationFile> cal;
    if (opt.calibration) cal = read_calibration_file(*opt.calibration);

    std::optional<int> k_head = opt.k_head;
    if (!k_head && cal && cal->confusion) {
        const auto est = bbse_estimate(*cal->confusion, predicted_prior(p));
        k_head = imbalance_intensity(est.target_prior).k_head;
    }
    const EstimatorReport r = full_report(p, cal ? &cal->profile : nullptr, k_head);

    nlohmann::ordered_json j;
    j["n"] = r.sample_count;
    j["k"] = r.class_count;
    j["temperature"] = r.temperature;
    j["nuclear_norm"] = r.nuclear_norm;
    j["rectified_nuclear_norm"] = r.rectified_nuclear_norm
                                      ? nlohmann::ordered_json(*r.rectified_nuclear_norm)
                                      : nlohmann::ordered_json(nullptr);
    j["dispersity"] = r.dispersity;
    j["dispersity_normalized"] = r.dispersity_normalized;
    j["mutual_information"] = r.mutual_information;
    j["average_confidence"] = r.average_confidence;
    j["average_negative_entropy"] = r.average_negative_entropy;
    j["atc"] = r.atc ? nlohmann::ordered_json(*r.atc) : nlohmann::ordered_json(nullptr);
    j["doc"] = r.doc ? nlohmann::ordered_json(*r.doc) : nlohmann::ordered_json(nullptr);
    j["warnings"] = r.warnings;
    return j;
}

struct CalibrateOptions {
    std::string val_path;
    std::string labels_col = "label";
    ScoreKind kind = ScoreKind::Logits;
    ConfidenceScore score = ConfidenceScore::MaxConfidence;
    double temperature = kDefaultTemperature;
    std::string out_path;
};

// `calibrate`: fit the ATC threshold and DoC statistics on a labeled
// validation file; the output also carries the confusion counts so that
// consumers can run BBSE.
inline CalibrationProfile run_calibrate(const CalibrateOptions& opt) {
    const auto file = read_prediction_file(opt.val_path, opt.labels_col);
    if (!file.labels) {
        throw InvalidInput(opt.val_path + ": validation file needs a '" + opt.labels_col +
                           "' column");
    }
    PredictionMatrix p = build_prediction_matrix(file.values, opt.kind, opt.temperature, false);
    const LabeledPredictions val(std::move(p), *file.labels);
    const CalibrationProfile cal = calibrate_atc(val, opt.score);
    const Matrix confusion = confusion_counts(val);
    write_calibration_file(opt.out_path, cal, &confusion);
    return cal;
}

struct BenchCommandOptions {
    std::string manifest_path;
    bool scaled = false;
    bool robust = false;
    std::string out_dir = ".";
    std::optional<std::string> calibration_override;
};

inline BenchReport run_bench_command(const BenchCommandOptions& opt) {
    BenchmarkManifest manifest = load_manifest(opt.manifest_path);
    if (opt.calibration_override) {
        // Absolute so it resolves regardless of the manifest directory.
        manifest.calibration = std::filesystem::absolute(*opt.calibration_override).string();
    }
    const BenchReport report = run_bench(manifest, BenchOptions{opt.scaled, opt.robust});
    write_bench_outputs(report, opt.out_dir);
    return report;
}

struct SynthOptions {
    WorldSpec world;
    int grid_families = 3;
    int grid_levels = 5;
    int composed = 0;
    std::optional<double> imbalance;
    std::int64_t per_class = 200;
    double temperature = kDefaultTemperature;
    std::uint64_t benchmark_seed = 7;
    std::string out_dir = ".";
};

// `synth`: write one prediction CSV per scenario plus a clean validation
// set, a ready calibration profile, and a manifest referencing them all.
inline std::vector<std::string> run_synth(const SynthOptions& opt) {
    const World world = build_world(opt.world);
    const auto scenarios =
        make_benchmark(world, opt.grid_families, opt.grid_levels, opt.composed, opt.benchmark_seed,
                       opt.per_class, opt.imbalance.value_or(1.0));

    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);

    nlohmann::ordered_json manifest;
    manifest["class_count"] = opt.world.class_count;
    manifest["temperature"] = opt.temperature;
    manifest["calibration"] = "calibration.json";
    manifest["input_kind"] = "logits";
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();

    std::vector<std::string> names;
    std::size_t composed_ordinal = 0;
    for (const auto& sc : scenarios) {
        const std::string name = scenario_name(sc, composed_ordinal);
        if (!sc.composed.empty()) ++composed_ordinal;
        const GeneratedSet set = generate_set(world, sc);
        const std::string file = name + ".csv";
        write_prediction_file((dir / file).string(), set.logits, &set.labels);

        nlohmann::ordered_json e;
        e["name"] = name;
        e["path"] = file;
        e["kind"] = "synthetic";
        e["group"] = sc.composed.empty() ? shift_family_name(sc.family) : "composed";
        entries.push_back(std::move(e));
        names.push_back(name);
    }
    manifest["entries"] = std::move(entries);

    // Clean balanced validation draw from the source distribution.
    ShiftScenario clean;
    clean.family = ShiftFamily::FeatureNoise;
    clean.intensity_value = 0.0;
    clean.samples_per_class.assign(opt.world.class_count, opt.per_class);
    clean.seed = derive_seed(opt.benchmark_seed, 0x76616cULL);
    const GeneratedSet val = generate_set(world, clean);
    write_prediction_file((dir / "validation.csv").string(), val.logits, &val.labels);

    const LabeledPredictions labeled_val(
        temper_softmax(RawScores::logits(val.logits), opt.temperature), val.labels);
    const CalibrationProfile cal = calibrate_atc(labeled_val);
    const Matrix confusion = confusion_counts(labeled_val);
    write_calibration_file((dir / "calibration.json").string(), cal, &confusion);

    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw InvalidInput(opt.out_dir + "/manifest.json: cannot open for writing");
    out << manifest.dump(2) << '\n';
    return names;
}

struct SubsampleOptions {
    std::string input;
    double fraction = 1.0;
    std::uint64_t seed = 0;
    std::string out_path;
};

// `subsample`: line-level row sampling that keeps selected rows byte-for-byte
// intact (the file is fully validated first).
inline std::size_t run_subsample(const SubsampleOptions& opt) {
    (void)read_prediction_file(opt.input);  // validate format before touching rows

    std::ifstream in(opt.input);
    if (!in) throw InvalidInput(opt.input + ": cannot open file");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lines.empty() || !line.empty()) lines.push_back(line);
    }
    if (lines.size() < 2) throw InvalidInput(opt.input + ": no data rows");

    const std::size_t n = lines.size() - 1;
    const auto idx = subsample_indices(n, opt.fraction, opt.seed);
    if (idx.empty()) throw InvalidInput("subsample produced an empty set");

    std::ofstream out(opt.out_path, std::ios::binary);
    if (!out) throw InvalidInput(opt.out_path + ": cannot open file for writing");
    out << lines[0] << '\n';
    for (std::size_t i : idx) out << lines[1 + i] << '\n';
    if (!out) throw InvalidInput(opt.out_path + ": write failed");
    return idx.size();
}

}  // namespace predkit
