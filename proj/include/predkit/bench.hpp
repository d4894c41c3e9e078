#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "predkit/errors.hpp"
#include "predkit/estimators.hpp"
#include "predkit/io.hpp"
#include "predkit/labelshift.hpp"
#include "predkit/prediction.hpp"
#include "predkit/stats.hpp"
#include "predkit/svg.hpp"

namespace predkit {

struct ManifestEntry {
    std::string name;
    std::string path;
    bool synthetic = true;
    std::string group;
};

// Roster of test sets to score: class count, softmax temperature, optional
// calibration file, and one entry per prediction file.
struct BenchmarkManifest {
    std::size_t class_count = 0;
    double temperature = kDefaultTemperature;
    std::optional<std::string> calibration;
    ScoreKind input_kind = ScoreKind::Logits;
    std::vector<ManifestEntry> entries;
    std::filesystem::path base_dir;  // entry paths resolve against this

    std::string resolve(const std::string& rel) const {
        std::filesystem::path p(rel);
        if (p.is_absolute()) return p.string();
        return (base_dir / p).string();
    }
};

inline BenchmarkManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput(path + ": cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": invalid JSON: " + e.what());
    }

    BenchmarkManifest m;
    m.base_dir = std::filesystem::path(path).parent_path();
    try {
        m.class_count = j.at("class_count").get<std::size_t>();
        m.temperature = j.at("temperature").get<double>();
        if (j.contains("calibration") && !j.at("calibration").is_null()) {
            m.calibration = j.at("calibration").get<std::string>();
        }
        if (j.contains("input_kind")) {
            const auto kind = j.at("input_kind").get<std::string>();
            if (kind == "logits") {
                m.input_kind = ScoreKind::Logits;
            } else if (kind == "probs") {
                m.input_kind = ScoreKind::Probabilities;
            } else {
                throw InvalidInput(path + ": input_kind must be 'logits' or 'probs'");
            }
        }
        for (const auto& e : j.at("entries")) {
            ManifestEntry entry;
            entry.name = e.at("name").get<std::string>();
            entry.path = e.at("path").get<std::string>();
            const auto kind = e.at("kind").get<std::string>();
            if (kind == "synthetic") {
                entry.synthetic = true;
            } else if (kind == "real") {
                entry.synthetic = false;
            } else {
                throw InvalidInput(path + ": entry kind must be 'synthetic' or 'real'");
            }
            if (e.contains("group")) entry.group = e.at("group").get<std::string>();
            m.entries.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": bad manifest: " + e.what());
    }
    if (m.class_count < 2) throw InvalidInput(path + ": class_count must be at least 2");
    if (!(m.temperature > 0.0)) throw InvalidInput(path + ": temperature must be positive");

    std::set<std::string> names;
    for (const auto& e : m.entries) {
        if (!names.insert(e.name).second) {
            throw InvalidInput(path + ": duplicate entry name '" + e.name + "'");
        }
    }
    return m;
}

struct PerSetResult {
    std::string name;
    std::string group;
    bool synthetic = true;
    std::optional<double> accuracy;
    EstimatorReport report;
};

struct BenchOptions {
    bool scaled = false;
    bool robust = false;
};

struct BenchReport {
    BenchOptions options;
    std::vector<PerSetResult> per_set;
    // Keyed by estimator, in the fixed estimator order; only estimators
    // available on every labeled synthetic set get a fit.
    std::vector<std::pair<std::string, CorrelationSummary>> per_estimator;
    // estimator -> real set name -> predicted accuracy.
    std::map<std::string, std::map<std::string, double>> predictions;
    std::vector<std::string> warnings;
};

namespace detail {

struct EstimatorColumn {
    const char* key;
    std::optional<double> (*get)(const EstimatorReport&);
};

inline const std::vector<EstimatorColumn>& estimator_columns() {
    static const std::vector<EstimatorColumn> cols = {
        {"nuclear_norm", [](const EstimatorReport& r) { return std::optional<double>(r.nuclear_norm); }},
        {"rectified_nuclear_norm", [](const EstimatorReport& r) { return r.rectified_nuclear_norm; }},
        {"dispersity", [](const EstimatorReport& r) { return std::optional<double>(r.dispersity_normalized); }},
        {"mutual_information", [](const EstimatorReport& r) { return std::optional<double>(r.mutual_information); }},
        {"average_confidence", [](const EstimatorReport& r) { return std::optional<double>(r.average_confidence); }},
        {"average_negative_entropy", [](const EstimatorReport& r) { return std::optional<double>(r.average_negative_entropy); }},
        {"atc", [](const EstimatorReport& r) { return r.atc; }},
        {"doc", [](const EstimatorReport& r) { return r.doc; }},
    };
    return cols;
}

}  // namespace detail

// Score one prediction matrix the way `bench` does: calibration-dependent
// estimators when a profile is present, rectified nuclear norm when the
// calibration carries a confusion matrix for BBSE.
inline EstimatorReport score_matrix(const PredictionMatrix& p, const CalibrationFile* cal) {
    std::optional<int> k_head;
    if (cal && cal->confusion) {
        const auto est = bbse_estimate(*cal->confusion, predicted_prior(p));
        const auto intensity = imbalance_intensity(est.target_prior);
        k_head = intensity.k_head;
    }
    return full_report(p, cal ? &cal->profile : nullptr, k_head);
}

// Run the whole benchmark: score every entry, fit every estimator against
// accuracy on the labeled synthetic entries, and predict accuracy for the
// real entries along each fitted line.
inline BenchReport run_bench(const BenchmarkManifest& manifest, const BenchOptions& options) {
    BenchReport report;
    report.options = options;

    std::optional<CalibrationFile> cal;
    if (manifest.calibration) {
        cal = read_calibration_file(manifest.resolve(*manifest.calibration));
    }

    for (const auto& entry : manifest.entries) {
        const auto file = read_prediction_file(manifest.resolve(entry.path));
        if (file.values.cols() != manifest.class_count) {
            throw InvalidInput(entry.path + ": has " + std::to_string(file.values.cols()) +
                               " classes, manifest says " + std::to_string(manifest.class_count));
        }
        PredictionMatrix p = manifest.input_kind == ScoreKind::Logits
                                 ? temper_softmax(RawScores::logits(file.values), manifest.temperature)
                                 : adopt_probabilities(RawScores::probabilities(file.values));

        PerSetResult r;
        r.name = entry.name;
        r.group = entry.group;
        r.synthetic = entry.synthetic;
        r.report = score_matrix(p, cal ? &*cal : nullptr);
        if (file.labels) r.accuracy = accuracy(LabeledPredictions(std::move(p), *file.labels));
        for (const auto& w : r.report.warnings) report.warnings.push_back(entry.name + ": " + w);
        report.per_set.push_back(std::move(r));
    }

    // Fit rows: labeled synthetic entries in manifest order.
    std::vector<const PerSetResult*> fit_rows;
    for (const auto& r : report.per_set) {
        if (r.synthetic && r.accuracy) fit_rows.push_back(&r);
    }
    if (fit_rows.size() < 3) {
        throw InsufficientData("need at least 3 labeled synthetic sets to fit, found " +
                               std::to_string(fit_rows.size()));
    }

    for (const auto& col : detail::estimator_columns()) {
        std::vector<double> est, acc;
        bool available = true;
        for (const auto* r : fit_rows) {
            const auto v = col.get(r->report);
            if (!v) {
                available = false;
                break;
            }
            est.push_back(*v);
            acc.push_back(*r->accuracy);
        }
        if (!available) continue;

        CorrelationSummary summary;
        try {
            summary = correlate(est, acc, options.scaled, options.robust);
        } catch (const DegenerateInput& e) {
            report.warnings.push_back(std::string(col.key) + ": fit skipped (" + e.what() + ")");
            continue;
        }
        for (const auto& w : summary.warnings) {
            report.warnings.push_back(std::string(col.key) + ": " + w);
        }
        if (!summary.fit_converged) {
            report.warnings.push_back(std::string(col.key) + ": robust fit did not converge");
        }

        // Predict accuracy for real entries along this fit.
        const LineFit fit{summary.slope, summary.intercept, summary.fit_converged};
        for (const auto& r : report.per_set) {
            if (r.synthetic) continue;
            const auto v = col.get(r.report);
            if (!v) continue;
            bool flagged = false;
            double predicted;
            if (options.scaled) {
                const double mapped = scale_estimate(*v, summary.estimator_min, summary.estimator_max);
                predicted = predict_accuracy(mapped, fit, true, flagged);
            } else {
                predicted = predict_accuracy(*v, fit, false, flagged);
            }
            if (flagged) {
                report.warnings.push_back(std::string(col.key) + ": prediction for '" + r.name +
                                          "' outside the calibrated range");
            }
            report.predictions[col.key][r.name] = predicted;
        }
        report.per_estimator.emplace_back(col.key, std::move(summary));
    }
    return report;
}

namespace detail {

inline nlohmann::ordered_json report_to_json(const BenchReport& report) {
    nlohmann::ordered_json j;
    j["scaled"] = report.options.scaled;
    j["robust"] = report.options.robust;

    nlohmann::ordered_json sets = nlohmann::ordered_json::array();
    for (const auto& r : report.per_set) {
        nlohmann::ordered_json e;
        e["name"] = r.name;
        e["kind"] = r.synthetic ? "synthetic" : "real";
        e["group"] = r.group;
        e["accuracy"] = r.accuracy ? nlohmann::ordered_json(*r.accuracy) : nlohmann::ordered_json(nullptr);
        e["n"] = r.report.sample_count;
        e["k"] = r.report.class_count;
        e["temperature"] = r.report.temperature;
        e["nuclear_norm"] = r.report.nuclear_norm;
        e["rectified_nuclear_norm"] = r.report.rectified_nuclear_norm
                                          ? nlohmann::ordered_json(*r.report.rectified_nuclear_norm)
                                          : nlohmann::ordered_json(nullptr);
        e["dispersity"] = r.report.dispersity;
        e["dispersity_normalized"] = r.report.dispersity_normalized;
        e["mutual_information"] = r.report.mutual_information;
        e["average_confidence"] = r.report.average_confidence;
        e["average_negative_entropy"] = r.report.average_negative_entropy;
        e["atc"] = r.report.atc ? nlohmann::ordered_json(*r.report.atc) : nlohmann::ordered_json(nullptr);
        e["doc"] = r.report.doc ? nlohmann::ordered_json(*r.report.doc) : nlohmann::ordered_json(nullptr);
        sets.push_back(std::move(e));
    }
    j["per_set"] = std::move(sets);

    nlohmann::ordered_json fits;
    for (const auto& [key, s] : report.per_estimator) {
        nlohmann::ordered_json f;
        f["pearson_r"] = s.pearson_r;
        f["spearman_rho"] = s.spearman_rho;
        f["r_squared"] = s.r_squared;
        f["slope"] = s.slope;
        f["intercept"] = s.intercept;
        f["scaled"] = s.scaled;
        f["residuals"] = s.residuals;
        f["estimator_min"] = s.estimator_min;
        f["estimator_max"] = s.estimator_max;
        fits[key] = std::move(f);
    }
    j["per_estimator"] = std::move(fits);

    nlohmann::ordered_json preds;
    for (const auto& [key, by_set] : report.predictions) {
        nlohmann::ordered_json m;
        for (const auto& [name, value] : by_set) m[name] = value;
        preds[key] = std::move(m);
    }
    j["predictions"] = std::move(preds);
    j["warnings"] = report.warnings;
    return j;
}

inline std::string report_table_csv(const BenchReport& report) {
    std::string csv = "name,kind,accuracy";
    for (const auto& col : estimator_columns()) {
        // The table carries both dispersity variants like the JSON does.
        if (std::string_view(col.key) == "dispersity") {
            csv += ",dispersity,dispersity_normalized";
        } else {
            csv += ",";
            csv += col.key;
        }
    }
    csv += '\n';
    for (const auto& r : report.per_set) {
        csv += r.name;
        csv += r.synthetic ? ",synthetic" : ",real";
        csv += ',';
        if (r.accuracy) csv += number_string(*r.accuracy);
        for (const auto& col : estimator_columns()) {
            if (std::string_view(col.key) == "dispersity") {
                csv += ',' + number_string(r.report.dispersity);
                csv += ',' + number_string(r.report.dispersity_normalized);
                continue;
            }
            csv += ',';
            const auto v = col.get(r.report);
            if (v) csv += number_string(*v);
        }
        csv += '\n';
    }
    return csv;
}

}  // namespace detail

// Scatter plot of one estimator in fit space (probit axes when scaled).
inline std::string bench_scatter_svg(const BenchReport& report, const std::string& estimator) {
    const CorrelationSummary* summary = nullptr;
    for (const auto& [key, s] : report.per_estimator) {
        if (key == estimator) summary = &s;
    }
    if (!summary) throw InvalidInput("no fit for estimator '" + estimator + "'");

    const detail::EstimatorColumn* col = nullptr;
    for (const auto& c : detail::estimator_columns()) {
        if (estimator == c.key) col = &c;
    }
    if (!col) throw InvalidInput("unknown estimator '" + estimator + "'");

    ScatterSpec spec;
    spec.x_label = estimator + (summary->scaled ? " (probit of scaled value)" : "");
    spec.y_label = summary->scaled ? "accuracy (probit)" : "accuracy";
    spec.line = LineFit{summary->slope, summary->intercept, true};

    auto to_fit_space = [&](double est, double acc, double& x, double& y) {
        if (summary->scaled) {
            x = probit(scale_estimate(est, summary->estimator_min, summary->estimator_max));
            y = probit(acc);
        } else {
            x = est;
            y = acc;
        }
    };

    std::map<std::string, std::size_t> group_index;
    for (const auto& r : report.per_set) {
        const auto v = col->get(r.report);
        if (!v || !r.accuracy) continue;
        double x, y;
        to_fit_space(*v, *r.accuracy, x, y);
        if (r.synthetic) {
            auto [it, inserted] = group_index.try_emplace(r.group, group_index.size());
            if (inserted) spec.group_names.push_back(r.group);
            spec.synthetic.push_back({x, y, it->second});
        } else {
            spec.real.push_back({x, y, r.name});
        }
    }
    return render_scatter_svg(spec);
}

// Writes report.json, table.csv, and scatter-{estimator}.svg into out_dir.
inline void write_bench_outputs(const BenchReport& report, const std::string& out_dir) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    {
        std::ofstream out(dir / "report.json", std::ios::binary);
        if (!out) throw InvalidInput(out_dir + "/report.json: cannot open for writing");
        out << detail::report_to_json(report).dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "table.csv", std::ios::binary);
        if (!out) throw InvalidInput(out_dir + "/table.csv: cannot open for writing");
        out << detail::report_table_csv(report);
    }
    for (const auto& [key, summary] : report.per_estimator) {
        (void)summary;
        std::ofstream out(dir / ("scatter-" + key + ".svg"), std::ios::binary);
        if (!out) throw InvalidInput(out_dir + "/scatter-" + key + ".svg: cannot open for writing");
        out << bench_scatter_svg(report, key);
    }
}

}  // namespace predkit
