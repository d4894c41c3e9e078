#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "predkit/predkit.hpp"

using namespace predkit;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("predkit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace

TEST_CASE("prediction CSV round trip") {
    TempDir dir;
    RandomStream rng(15);
    Matrix logits(6, 3);
    for (double& v : logits.data()) v = rng.uniform(-50.0, 50.0);
    std::vector<int> labels{0, 1, 2, 0, 1, 2};

    const auto path = dir.file("pred.csv");
    write_prediction_file(path, logits, &labels);
    const auto back = read_prediction_file(path);

    REQUIRE(back.values == logits);  // shortest round-trip formatting is exact
    REQUIRE(back.labels.has_value());
    REQUIRE(*back.labels == labels);

    // Without labels the header has no label column.
    const auto path2 = dir.file("nolabel.csv");
    write_prediction_file(path2, logits);
    const auto back2 = read_prediction_file(path2);
    REQUIRE_FALSE(back2.labels.has_value());
}

TEST_CASE("prediction CSV errors carry line numbers") {
    TempDir dir;
    SECTION("missing file") {
        REQUIRE_THROWS_AS(read_prediction_file(dir.file("nope.csv")), InvalidInput);
    }
    SECTION("bad header") {
        spit(dir.file("h.csv"), "score_0,foo\n0.5,0.5\n");
        REQUIRE_THROWS_WITH(read_prediction_file(dir.file("h.csv")), ContainsSubstring(":1:"));
    }
    SECTION("non-numeric field points at its line") {
        spit(dir.file("f.csv"), "score_0,score_1\n0.5,0.5\n0.5,oops\n");
        REQUIRE_THROWS_WITH(read_prediction_file(dir.file("f.csv")), ContainsSubstring(":3:"));
    }
    SECTION("non-finite values are rejected") {
        spit(dir.file("inf.csv"), "score_0,score_1\ninf,0.5\n");
        REQUIRE_THROWS_AS(read_prediction_file(dir.file("inf.csv")), InvalidInput);
    }
    SECTION("label out of range") {
        spit(dir.file("l.csv"), "score_0,score_1,label\n0.5,0.5,2\n");
        REQUIRE_THROWS_WITH(read_prediction_file(dir.file("l.csv")), ContainsSubstring(":2:"));
    }
    SECTION("missing fields") {
        spit(dir.file("m.csv"), "score_0,score_1\n0.5\n");
        REQUIRE_THROWS_WITH(read_prediction_file(dir.file("m.csv")), ContainsSubstring(":2:"));
    }
}

TEST_CASE("calibration file round trip") {
    TempDir dir;
    CalibrationProfile cal;
    cal.atc_threshold = 0.8125;
    cal.score_kind = ConfidenceScore::NegativeEntropy;
    cal.val_accuracy = 0.9;
    cal.val_average_confidence = 0.87;
    cal.temperature = 0.4;
    Matrix confusion = Matrix::from_rows({{40.0, 3.0}, {2.0, 55.0}});

    const auto path = dir.file("cal.json");
    write_calibration_file(path, cal, &confusion);
    const auto back = read_calibration_file(path);
    REQUIRE(back.profile.atc_threshold == cal.atc_threshold);
    REQUIRE(back.profile.score_kind == ConfidenceScore::NegativeEntropy);
    REQUIRE(back.profile.val_accuracy == cal.val_accuracy);
    REQUIRE(back.profile.val_average_confidence == cal.val_average_confidence);
    REQUIRE(back.profile.temperature == cal.temperature);
    REQUIRE(back.confusion.has_value());
    REQUIRE(*back.confusion == confusion);

    const auto keys = nlohmann::json::parse(slurp(path));
    for (const char* k : {"atc_threshold", "score_kind", "val_accuracy",
                          "val_average_confidence", "temperature", "confusion"}) {
        REQUIRE(keys.contains(k));
    }
}

TEST_CASE("manifest parsing") {
    TempDir dir;
    SECTION("minimal manifest") {
        spit(dir.file("m.json"), R"({
            "class_count": 3,
            "temperature": 0.4,
            "calibration": null,
            "entries": [
                {"name": "a", "path": "a.csv", "kind": "synthetic", "group": "noise"},
                {"name": "b", "path": "b.csv", "kind": "real", "group": ""}
            ]
        })");
        const auto m = load_manifest(dir.file("m.json"));
        REQUIRE(m.class_count == 3);
        REQUIRE(m.temperature == 0.4);
        REQUIRE_FALSE(m.calibration.has_value());
        REQUIRE(m.input_kind == ScoreKind::Logits);
        REQUIRE(m.entries.size() == 2);
        REQUIRE(m.entries[0].synthetic);
        REQUIRE_FALSE(m.entries[1].synthetic);
        REQUIRE(m.resolve("a.csv") == (dir.path / "a.csv").string());
    }
    SECTION("duplicate names are rejected") {
        spit(dir.file("dup.json"), R"({
            "class_count": 3, "temperature": 0.4,
            "entries": [
                {"name": "a", "path": "a.csv", "kind": "synthetic"},
                {"name": "a", "path": "b.csv", "kind": "synthetic"}
            ]
        })");
        REQUIRE_THROWS_AS(load_manifest(dir.file("dup.json")), InvalidInput);
    }
    SECTION("bad kind is rejected") {
        spit(dir.file("bad.json"), R"({
            "class_count": 3, "temperature": 0.4,
            "entries": [{"name": "a", "path": "a.csv", "kind": "weird"}]
        })");
        REQUIRE_THROWS_AS(load_manifest(dir.file("bad.json")), InvalidInput);
    }
}

TEST_CASE("score command emits the full JSON report") {
    TempDir dir;
    spit(dir.file("id.csv"), "score_0,score_1,score_2\n1,0,0\n0,1,0\n0,0,1\n");

    ScoreOptions opt;
    opt.input = dir.file("id.csv");
    opt.kind = ScoreKind::Probabilities;
    const auto j = run_score(opt);

    const std::vector<std::string> expected_keys = {
        "n", "k", "temperature", "nuclear_norm", "rectified_nuclear_norm", "dispersity",
        "dispersity_normalized", "mutual_information", "average_confidence",
        "average_negative_entropy", "atc", "doc", "warnings"};
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        REQUIRE(it.key() == expected_keys[i]);
    }
    REQUIRE(i == expected_keys.size());

    REQUIRE(j["n"] == 3);
    REQUIRE(j["k"] == 3);
    REQUIRE(j["nuclear_norm"].get<double>() == 1.0);
    REQUIRE(j["rectified_nuclear_norm"].is_null());
    REQUIRE(j["atc"].is_null());
    REQUIRE(j["doc"].is_null());

    ScoreOptions with_head = opt;
    with_head.k_head = 2;
    const auto j2 = run_score(with_head);
    REQUIRE_THAT(j2["rectified_nuclear_norm"].get<double>(),
                 Catch::Matchers::WithinAbs(std::sqrt(1.5), 1e-12));
}

TEST_CASE("synth then bench produce a consistent, deterministic pipeline") {
    TempDir dir;
    SynthOptions synth;
    synth.world.class_count = 6;
    synth.world.feature_dim = 16;
    synth.world.seed = 3;
    synth.grid_levels = 3;
    synth.composed = 4;
    synth.per_class = 60;
    synth.benchmark_seed = 12;
    synth.out_dir = dir.file("bench");
    const auto names = run_synth(synth);
    REQUIRE(names.size() == 13);  // 3*3 grid + 4 composed
    REQUIRE(fs::exists(dir.path / "bench" / "manifest.json"));
    REQUIRE(fs::exists(dir.path / "bench" / "validation.csv"));
    REQUIRE(fs::exists(dir.path / "bench" / "calibration.json"));

    BenchCommandOptions bench;
    bench.manifest_path = dir.file("bench/manifest.json");
    bench.scaled = true;
    bench.out_dir = dir.file("out");
    const auto report = run_bench_command(bench);

    SECTION("all estimators get fits, including the BBSE-rectified norm") {
        std::vector<std::string> keys;
        for (const auto& [k, s] : report.per_estimator) keys.push_back(k);
        REQUIRE(keys == std::vector<std::string>{
                            "nuclear_norm", "rectified_nuclear_norm", "dispersity",
                            "mutual_information", "average_confidence",
                            "average_negative_entropy", "atc", "doc"});
        for (const auto& [k, s] : report.per_estimator) {
            REQUIRE(s.residuals.size() == 13);
            REQUIRE(fs::exists(dir.path / "out" / ("scatter-" + k + ".svg")));
        }
    }

    SECTION("report.json and table.csv agree to full serialized precision") {
        const auto j = nlohmann::json::parse(slurp(dir.file("out/report.json")));
        const std::string csv = slurp(dir.file("out/table.csv"));

        std::vector<std::string> lines;
        std::stringstream ss(csv);
        std::string line;
        while (std::getline(ss, line)) lines.push_back(line);
        REQUIRE(lines.size() == 14);  // header + 13 sets

        std::vector<std::string> header;
        {
            std::stringstream hs(lines[0]);
            std::string col;
            while (std::getline(hs, col, ',')) header.push_back(col);
        }
        for (std::size_t row = 0; row < 13; ++row) {
            std::vector<std::string> cells;
            std::stringstream rs(lines[row + 1]);
            std::string cell;
            while (std::getline(rs, cell, ',')) cells.push_back(cell);
            const auto& set = j["per_set"][row];
            for (std::size_t c = 0; c < header.size(); ++c) {
                if (header[c] == "name" || header[c] == "kind") continue;
                if (!set.contains(header[c]) || set[header[c]].is_null()) continue;
                REQUIRE(cells.at(c) == set[header[c]].dump());
            }
        }
    }

    SECTION("reruns are byte-identical") {
        TempDir dir2;
        SynthOptions synth2 = synth;
        synth2.out_dir = dir2.file("bench");
        run_synth(synth2);
        REQUIRE(slurp(dir.file("bench/manifest.json")) == slurp(dir2.file("bench/manifest.json")));
        REQUIRE(slurp(dir.file("bench/noise-l1.csv")) == slurp(dir2.file("bench/noise-l1.csv")));
        REQUIRE(slurp(dir.file("bench/calibration.json")) ==
                slurp(dir2.file("bench/calibration.json")));

        BenchCommandOptions bench2 = bench;
        bench2.manifest_path = dir2.file("bench/manifest.json");
        bench2.out_dir = dir2.file("out");
        run_bench_command(bench2);
        REQUIRE(slurp(dir.file("out/report.json")) == slurp(dir2.file("out/report.json")));
        REQUIRE(slurp(dir.file("out/table.csv")) == slurp(dir2.file("out/table.csv")));
        REQUIRE(slurp(dir.file("out/scatter-nuclear_norm.svg")) ==
                slurp(dir2.file("out/scatter-nuclear_norm.svg")));
    }
}

TEST_CASE("real entries are predicted but never fit") {
    TempDir dir;
    SynthOptions synth;
    synth.world.class_count = 5;
    synth.world.feature_dim = 12;
    synth.world.seed = 8;
    synth.grid_levels = 2;
    synth.composed = 0;
    synth.per_class = 50;
    synth.out_dir = dir.file("bench");
    run_synth(synth);

    // Mark one generated set as "real" by appending a new manifest entry
    // pointing at a copy.
    auto manifest = nlohmann::json::parse(slurp(dir.file("bench/manifest.json")));
    fs::copy_file(dir.path / "bench" / "noise-l2.csv", dir.path / "bench" / "field.csv");
    manifest["entries"].push_back(
        {{"name", "field"}, {"path", "field.csv"}, {"kind", "real"}, {"group", "wild"}});
    spit(dir.file("bench/manifest.json"), manifest.dump(2));

    BenchCommandOptions bench;
    bench.manifest_path = dir.file("bench/manifest.json");
    bench.out_dir = dir.file("out");
    const auto with_real = run_bench_command(bench);

    // Every estimator predicted an accuracy for the real set.
    for (const auto& [key, summary] : with_real.per_estimator) {
        REQUIRE(with_real.predictions.at(key).count("field") == 1);
        REQUIRE(summary.residuals.size() == 6);  // 3 families x 2 levels
    }

    // Dropping the real entry does not move any fit coefficient.
    manifest["entries"].erase(manifest["entries"].size() - 1);
    spit(dir.file("bench/manifest.json"), manifest.dump(2));
    bench.out_dir = dir.file("out2");
    const auto without_real = run_bench_command(bench);
    for (std::size_t e = 0; e < with_real.per_estimator.size(); ++e) {
        REQUIRE(with_real.per_estimator[e].second.slope ==
                without_real.per_estimator[e].second.slope);
        REQUIRE(with_real.per_estimator[e].second.intercept ==
                without_real.per_estimator[e].second.intercept);
    }

    // The real set sits near the fit: its prediction should be sane.
    const double predicted = with_real.predictions.at("nuclear_norm").at("field");
    REQUIRE(predicted > 0.0);
    REQUIRE(predicted < 1.2);
}

TEST_CASE("bench needs three labeled synthetic sets") {
    TempDir dir;
    spit(dir.file("a.csv"), "score_0,score_1,label\n1,0,0\n0,1,1\n");
    spit(dir.file("m.json"), R"({
        "class_count": 2, "temperature": 0.4,
        "entries": [{"name": "a", "path": "a.csv", "kind": "synthetic", "group": "g"}]
    })");
    BenchCommandOptions bench;
    bench.manifest_path = dir.file("m.json");
    bench.out_dir = dir.file("out");
    REQUIRE_THROWS_AS(run_bench_command(bench), InsufficientData);
}

TEST_CASE("subsample command keeps rows verbatim") {
    TempDir dir;
    const std::string body =
        "score_0,score_1,label\n0.25,0.75,1\n0.5,0.5,0\n0.125,0.875,1\n0.75,0.25,0\n";
    spit(dir.file("in.csv"), body);

    SubsampleOptions full;
    full.input = dir.file("in.csv");
    full.fraction = 1.0;
    full.seed = 5;
    full.out_path = dir.file("full.csv");
    REQUIRE(run_subsample(full) == 4);
    REQUIRE(slurp(dir.file("full.csv")) == body);

    SubsampleOptions half = full;
    half.fraction = 0.5;
    half.out_path = dir.file("half.csv");
    REQUIRE(run_subsample(half) == 2);
    const auto idx = subsample_indices(4, 0.5, 5);
    std::vector<std::string> rows{"0.25,0.75,1", "0.5,0.5,0", "0.125,0.875,1", "0.75,0.25,0"};
    std::string expect = "score_0,score_1,label\n";
    for (auto i : idx) expect += rows[i] + "\n";
    REQUIRE(slurp(dir.file("half.csv")) == expect);

    // Same seed, same selection.
    SubsampleOptions again = half;
    again.out_path = dir.file("half2.csv");
    run_subsample(again);
    REQUIRE(slurp(dir.file("half2.csv")) == slurp(dir.file("half.csv")));
}

TEST_CASE("svg renderer is deterministic and structurally sound") {
    ScatterSpec spec;
    spec.x_label = "nuclear_norm";
    spec.group_names = {"noise", "drift"};
    spec.synthetic = {{0.3, 0.4, 0}, {0.5, 0.6, 1}, {0.7, 0.8, 0}};
    spec.real = {{0.6, 0.65, "wild"}};
    spec.line = LineFit{1.0, 0.05, true};

    const auto svg1 = render_scatter_svg(spec);
    const auto svg2 = render_scatter_svg(spec);
    REQUIRE(svg1 == svg2);
    REQUIRE_THAT(svg1, ContainsSubstring("viewBox=\"0 0 800 600\""));
    REQUIRE_THAT(svg1, ContainsSubstring("nuclear_norm"));
    REQUIRE_THAT(svg1, ContainsSubstring("accuracy"));
    REQUIRE_THAT(svg1, ContainsSubstring("wild"));
    REQUIRE_THAT(svg1, ContainsSubstring("<circle"));
    REQUIRE_THAT(svg1, ContainsSubstring("<path"));
}
