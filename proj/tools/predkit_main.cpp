// predkit command-line tool: score prediction matrices, calibrate ATC/DoC,
// run correlation benchmarks, and generate synthetic shifted test sets.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure,
// 4 insufficient data.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "predkit/predkit.hpp"

namespace {

predkit::ScoreKind parse_kind(const std::string& kind) {
    if (kind == "logits") return predkit::ScoreKind::Logits;
    if (kind == "probs") return predkit::ScoreKind::Probabilities;
    throw predkit::InvalidParameter("--kind must be 'logits' or 'probs'");
}

predkit::WorldSpec parse_world(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 5) {
        throw predkit::InvalidParameter("--world expects k,d,R,beta,seed");
    }
    predkit::WorldSpec w;
    try {
        w.class_count = std::stoul(parts[0]);
        w.feature_dim = std::stoul(parts[1]);
        w.mean_radius = std::stod(parts[2]);
        w.classifier_scale = std::stod(parts[3]);
        w.seed = std::stoull(parts[4]);
    } catch (const std::exception&) {
        throw predkit::InvalidParameter("--world expects k,d,R,beta,seed as numbers");
    }
    return w;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimate classifier accuracy on unlabeled test sets from prediction matrices"};
    app.require_subcommand(1);

    // score
    auto* score = app.add_subcommand("score", "Score one prediction file with every estimator");
    predkit::ScoreOptions score_opt;
    std::string score_kind = "logits";
    std::string score_cal;
    int score_k_head = -1;
    score->add_option("--input", score_opt.input, "Prediction CSV")->required();
    score->add_option("--kind", score_kind, "Input kind: logits|probs (default logits)");
    score->add_option("--temperature", score_opt.temperature, "Softmax temperature (default 0.4)");
    score->add_option("--calibration", score_cal, "Calibration JSON for ATC/DoC (and BBSE)");
    score->add_option("--k-head", score_k_head, "Head-class count for the rectified nuclear norm");
    score->add_flag("--retemper", score_opt.retemper_probs,
                    "Re-temper probability inputs at --temperature");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Fit ATC threshold and DoC statistics");
    predkit::CalibrateOptions cal_opt;
    std::string cal_kind = "logits";
    std::string cal_score = "max-conf";
    calibrate->add_option("--val", cal_opt.val_path, "Labeled validation CSV")->required();
    calibrate->add_option("--labels-col", cal_opt.labels_col, "Label column name (default 'label')");
    calibrate->add_option("--kind", cal_kind, "Input kind: logits|probs (default logits)");
    calibrate->add_option("--score", cal_score, "Confidence score: max-conf|neg-entropy");
    calibrate->add_option("--temperature", cal_opt.temperature, "Softmax temperature (default 0.4)");
    calibrate->add_option("--out", cal_opt.out_path, "Output calibration JSON")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "Correlate every estimator with accuracy over a manifest");
    predkit::BenchCommandOptions bench_opt;
    std::string bench_cal;
    bench->add_option("--manifest", bench_opt.manifest_path, "Benchmark manifest JSON")->required();
    bench->add_flag("--scaled", bench_opt.scaled, "Probit-scale both axes before fitting");
    bench->add_flag("--robust", bench_opt.robust, "Fit with robust (Huber) regression");
    bench->add_option("--out-dir", bench_opt.out_dir, "Output directory")->required();
    bench->add_option("--calibration", bench_cal, "Override the manifest calibration path");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic shifted-test-set benchmark");
    predkit::SynthOptions synth_opt;
    std::string world_spec = "10,32,3.2,0.8,1";
    std::string grid_spec = "3,5";
    double imbalance = -1.0;
    synth->add_option("--world", world_spec, "World spec k,d,R,beta,seed (default 10,32,3.2,0.8,1)");
    synth->add_option("--grid", grid_spec, "Scenario grid families,levels (default 3,5)");
    synth->add_option("--composed", synth_opt.composed, "Number of random composed scenarios");
    synth->add_option("--imbalance", imbalance, "Long-tail imbalance ratio m in (0,1]");
    synth->add_option("--per-class", synth_opt.per_class, "Samples per class (default 200)");
    synth->add_option("--temperature", synth_opt.temperature, "Manifest temperature (default 0.4)");
    synth->add_option("--seed", synth_opt.benchmark_seed, "Benchmark seed (default 7)");
    synth->add_option("--out-dir", synth_opt.out_dir, "Output directory")->required();

    // subsample
    auto* subsample = app.add_subcommand("subsample", "Randomly keep a fraction of a file's rows");
    predkit::SubsampleOptions sub_opt;
    subsample->add_option("--input", sub_opt.input, "Prediction CSV")->required();
    subsample->add_option("--fraction", sub_opt.fraction, "Fraction in (0,1]")->required();
    subsample->add_option("--seed", sub_opt.seed, "Sampling seed");
    subsample->add_option("--out", sub_opt.out_path, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (*score) {
            score_opt.kind = parse_kind(score_kind);
            if (!score_cal.empty()) score_opt.calibration = score_cal;
            if (score_k_head >= 0) score_opt.k_head = score_k_head;
            std::cout << predkit::run_score(score_opt).dump(2) << '\n';
        } else if (*calibrate) {
            cal_opt.kind = parse_kind(cal_kind);
            cal_opt.score = predkit::parse_confidence_score(cal_score);
            const auto cal = predkit::run_calibrate(cal_opt);
            std::cerr << "calibrated: val_accuracy=" << cal.val_accuracy
                      << " atc_threshold=" << cal.atc_threshold << '\n';
        } else if (*bench) {
            if (!bench_cal.empty()) bench_opt.calibration_override = bench_cal;
            const auto report = predkit::run_bench_command(bench_opt);
            std::cerr << "wrote report for " << report.per_set.size() << " sets, "
                      << report.per_estimator.size() << " estimator fits to " << bench_opt.out_dir
                      << '\n';
        } else if (*synth) {
            synth_opt.world = parse_world(world_spec);
            {
                std::stringstream ss(grid_spec);
                std::string t, l;
                if (!std::getline(ss, t, ',') || !std::getline(ss, l, ',')) {
                    throw predkit::InvalidParameter("--grid expects families,levels");
                }
                try {
                    synth_opt.grid_families = std::stoi(t);
                    synth_opt.grid_levels = std::stoi(l);
                } catch (const std::exception&) {
                    throw predkit::InvalidParameter("--grid expects families,levels as integers");
                }
            }
            if (imbalance > 0.0) synth_opt.imbalance = imbalance;
            const auto names = predkit::run_synth(synth_opt);
            std::cerr << "wrote " << names.size() << " scenario files + manifest to "
                      << synth_opt.out_dir << '\n';
        } else if (*subsample) {
            const auto kept = predkit::run_subsample(sub_opt);
            std::cerr << "kept " << kept << " rows\n";
        }
    } catch (const predkit::NumericalFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const predkit::InsufficientData& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const predkit::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
