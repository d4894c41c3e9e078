#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "predkit/prediction.hpp"
#include "predkit/synth.hpp"

using namespace predkit;
using Catch::Matchers::WithinAbs;

namespace {

ShiftScenario balanced_scenario(ShiftFamily family, double intensity, std::size_t k,
                                std::int64_t per_class, std::uint64_t seed) {
    ShiftScenario sc;
    sc.family = family;
    sc.intensity_value = intensity;
    sc.samples_per_class.assign(k, per_class);
    sc.seed = seed;
    return sc;
}

}  // namespace

TEST_CASE("build_world puts class means on the sphere, deterministically") {
    WorldSpec spec;
    spec.class_count = 2;
    spec.feature_dim = 2;
    spec.mean_radius = 1.75;
    spec.seed = 99;
    const World w = build_world(spec);
    for (std::size_t c = 0; c < 2; ++c) {
        double norm = 0.0;
        for (std::size_t j = 0; j < 2; ++j) norm += w.means(c, j) * w.means(c, j);
        REQUIRE_THAT(std::sqrt(norm), WithinAbs(1.75, 1e-12));
    }

    const World again = build_world(spec);
    REQUIRE(again.means == w.means);
    REQUIRE(again.drift_direction == w.drift_direction);

    WorldSpec other = spec;
    other.seed = 100;
    REQUIRE_FALSE(build_world(other).means == w.means);
}

TEST_CASE("the induced classifier matches a nearest-mean Monte-Carlo oracle") {
    WorldSpec spec;
    spec.class_count = 6;
    spec.feature_dim = 8;
    spec.mean_radius = 3.0;
    spec.classifier_scale = 25.0;  // large beta; argmax is beta-invariant anyway
    spec.seed = 4;
    const World w = build_world(spec);

    // Independent oracle: draw fresh points and classify by explicit
    // nearest-mean distances.
    RandomStream oracle_rng(911);
    const std::size_t trials = 20000;
    std::size_t nm_hits = 0;
    std::vector<double> x(spec.feature_dim);
    for (std::size_t t = 0; t < trials; ++t) {
        const auto c = static_cast<std::size_t>(oracle_rng.uniform_index(spec.class_count));
        for (std::size_t j = 0; j < spec.feature_dim; ++j) {
            x[j] = w.means(c, j) + oracle_rng.normal();
        }
        std::size_t best = 0;
        double best_d = 0.0;
        for (std::size_t cc = 0; cc < spec.class_count; ++cc) {
            double d = 0.0;
            for (std::size_t j = 0; j < spec.feature_dim; ++j) {
                d += (x[j] - w.means(cc, j)) * (x[j] - w.means(cc, j));
            }
            if (cc == 0 || d < best_d) {
                best_d = d;
                best = cc;
            }
        }
        if (best == c) ++nm_hits;
    }
    const double nearest_mean_acc = static_cast<double>(nm_hits) / static_cast<double>(trials);

    // Clean-set accuracy of the induced linear classifier.
    const auto set = generate_set(w, balanced_scenario(ShiftFamily::FeatureNoise, 0.0, 6, 2000, 11));
    const LabeledPredictions l(temper_softmax(RawScores::logits(set.logits), 1.0), set.labels);
    REQUIRE_THAT(accuracy(l), WithinAbs(nearest_mean_acc, 0.02));
}

TEST_CASE("generate_set is deterministic and honors per-class counts") {
    WorldSpec spec;
    spec.seed = 21;
    const World w = build_world(spec);

    ShiftScenario sc;
    sc.family = ShiftFamily::MeanDrift;
    sc.intensity_value = 0.3;
    sc.samples_per_class = {16, 8, 4, 0, 0, 0, 0, 0, 0, 0};
    sc.seed = 5;

    const auto a = generate_set(w, sc);
    const auto b = generate_set(w, sc);
    REQUIRE(a.logits == b.logits);
    REQUIRE(a.labels == b.labels);
    REQUIRE(a.logits.rows() == 28);

    std::map<int, int> counts;
    for (int y : a.labels) counts[y]++;
    REQUIRE(counts[0] == 16);
    REQUIRE(counts[1] == 8);
    REQUIRE(counts[2] == 4);
}

TEST_CASE("zero-intensity transforms are exact identities") {
    WorldSpec spec;
    spec.seed = 77;
    const World w = build_world(spec);
    const auto noise = generate_set(w, balanced_scenario(ShiftFamily::FeatureNoise, 0.0, 10, 20, 3));
    const auto drift = generate_set(w, balanced_scenario(ShiftFamily::MeanDrift, 0.0, 10, 20, 3));
    const auto scale = generate_set(w, balanced_scenario(ShiftFamily::FeatureScale, 0.0, 10, 20, 3));
    REQUIRE(noise.logits == drift.logits);
    REQUIRE(noise.logits == scale.logits);
}

TEST_CASE("feature noise degrades accuracy monotonically") {
    WorldSpec spec;
    spec.class_count = 5;
    spec.feature_dim = 16;
    spec.mean_radius = 3.2;
    spec.seed = 2023;
    const World w = build_world(spec);

    // Five ascending noise levels spanning up to sigma = 2.5 R / 4.
    double prev = 1.1;
    for (int level = 1; level <= 5; ++level) {
        const double sigma = 2.5 * spec.mean_radius / 4.0 * level / 5.0;
        const auto set =
            generate_set(w, balanced_scenario(ShiftFamily::FeatureNoise, sigma, 5, 400, 55 + level));
        const LabeledPredictions l(temper_softmax(RawScores::logits(set.logits), 0.4), set.labels);
        const double acc = accuracy(l);
        REQUIRE(acc <= prev);
        prev = acc;
    }
    REQUIRE(prev < 0.6);  // the top level is a real degradation
}

TEST_CASE("generate_set validates counts") {
    WorldSpec spec;
    const World w = build_world(spec);
    ShiftScenario sc;
    sc.samples_per_class.assign(10, 0);
    sc.seed = 1;
    REQUIRE_THROWS_AS(generate_set(w, sc), InvalidInput);
    sc.samples_per_class.assign(3, 5);
    REQUIRE_THROWS_AS(generate_set(w, sc), InvalidInput);  // wrong length
}

TEST_CASE("imbalance_counts follows exponential decay") {
    REQUIRE(imbalance_counts(4, 100, 1.0) == std::vector<std::int64_t>{100, 100, 100, 100});
    REQUIRE(imbalance_counts(3, 16, 0.25) == std::vector<std::int64_t>{16, 8, 4});

    for (double m : {0.1, 0.2, 0.4, 0.6, 0.8}) {
        const auto counts = imbalance_counts(10, 200, m);
        REQUIRE(counts.front() == 200);
        // Non-increasing, and the endpoints realize the ratio within rounding.
        for (std::size_t c = 1; c < counts.size(); ++c) REQUIRE(counts[c] <= counts[c - 1]);
        const double realized =
            static_cast<double>(counts.back()) / static_cast<double>(counts.front());
        REQUIRE(std::abs(realized - m) <= 1.0 / 200.0);
    }

    REQUIRE_THROWS_AS(imbalance_counts(5, 100, 0.0), InvalidParameter);
    REQUIRE_THROWS_AS(imbalance_counts(5, 100, 1.5), InvalidParameter);
}

TEST_CASE("subsample") {
    SECTION("index selection is deterministic, ordered, right-sized") {
        const auto a = subsample_indices(10, 0.5, 9);
        const auto b = subsample_indices(10, 0.5, 9);
        REQUIRE(a == b);
        REQUIRE(a.size() == 5);
        REQUIRE(std::is_sorted(a.begin(), a.end()));
        REQUIRE(subsample_indices(1000, 0.2, 1).size() == 200);
        REQUIRE(subsample_indices(7, 1.0, 3) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
        REQUIRE_THROWS_AS(subsample_indices(10, 0.0, 1), InvalidParameter);
    }
    SECTION("labeled predictions keep matching rows and labels") {
        Matrix m(10, 2);
        std::vector<int> labels(10);
        for (std::size_t i = 0; i < 10; ++i) {
            m(i, 0) = 0.05 + 0.01 * static_cast<double>(i);
            m(i, 1) = 1.0 - m(i, 0);
            labels[i] = static_cast<int>(i % 2);
        }
        const LabeledPredictions l(adopt_probabilities(RawScores::probabilities(m)), labels);
        const auto full = subsample(l, 1.0, 42);
        REQUIRE(full.matrix.rows() == l.matrix.rows());
        REQUIRE(full.labels == l.labels);

        const auto half = subsample(l, 0.5, 42);
        REQUIRE(half.labels.size() == 5);
        const auto idx = subsample_indices(10, 0.5, 42);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            REQUIRE(half.matrix(r, 0) == l.matrix(idx[r], 0));
            REQUIRE(half.labels[r] == l.labels[idx[r]]);
        }
    }
}

TEST_CASE("make_benchmark builds the grid plus compositions") {
    WorldSpec spec;
    const World w = build_world(spec);

    const auto grid = make_benchmark(w, 3, 5, 0, 42);
    REQUIRE(grid.size() == 15);

    const auto with_composed = make_benchmark(w, 3, 5, 200, 42);
    REQUIRE(with_composed.size() == 215);

    // Determinism: the same seed reproduces every scenario field.
    const auto again = make_benchmark(w, 3, 5, 200, 42);
    for (std::size_t i = 0; i < again.size(); ++i) {
        REQUIRE(again[i].seed == with_composed[i].seed);
        REQUIRE(again[i].intensity_value == with_composed[i].intensity_value);
        REQUIRE(again[i].composed == with_composed[i].composed);
    }

    // Intensity strictly increases with level inside each family.
    for (int f = 0; f < 3; ++f) {
        for (int level = 1; level < 5; ++level) {
            REQUIRE(grid[f * 5 + level].intensity_value > grid[f * 5 + level - 1].intensity_value);
        }
    }

    // Composed scenarios list exactly three transforms with in-range strengths.
    for (std::size_t i = 15; i < with_composed.size(); ++i) {
        REQUIRE(with_composed[i].composed.size() == 3);
        for (const auto& [family, strength] : with_composed[i].composed) {
            REQUIRE(strength >= 0.0);
            REQUIRE(strength <= shift_family_max_intensity(family, spec.mean_radius));
        }
    }

    REQUIRE_THROWS_AS(make_benchmark(w, 4, 5, 0, 1), InvalidParameter);
    REQUIRE_THROWS_AS(make_benchmark(w, 0, 5, 0, 1), InvalidParameter);
}

TEST_CASE("scenario names are stable") {
    WorldSpec spec;
    const World w = build_world(spec);
    const auto scenarios = make_benchmark(w, 3, 2, 2, 5);
    REQUIRE(scenario_name(scenarios[0], 0) == "noise-l1");
    REQUIRE(scenario_name(scenarios[1], 0) == "noise-l2");
    REQUIRE(scenario_name(scenarios[2], 0) == "drift-l1");
    REQUIRE(scenario_name(scenarios[4], 0) == "scale-l1");
    REQUIRE(scenario_name(scenarios[6], 0) == "rand-001");
    REQUIRE(scenario_name(scenarios[7], 1) == "rand-002");
}
