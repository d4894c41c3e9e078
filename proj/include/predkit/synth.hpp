#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "predkit/errors.hpp"
#include "predkit/matrix.hpp"
#include "predkit/prediction.hpp"
#include "predkit/rng.hpp"

namespace predkit {

enum class ShiftFamily { FeatureNoise, MeanDrift, FeatureScale };

constexpr int kShiftFamilyCount = 3;

inline const char* shift_family_name(ShiftFamily f) {
    switch (f) {
        case ShiftFamily::FeatureNoise: return "noise";
        case ShiftFamily::MeanDrift: return "drift";
        case ShiftFamily::FeatureScale: return "scale";
    }
    return "?";
}

// Gaussian-mixture classifier world: k class means on the radius-R sphere in
// d dimensions, and a linear classifier with weight rows beta * mean_j.
struct WorldSpec {
    std::size_t class_count = 10;
    std::size_t feature_dim = 32;
    double mean_radius = 3.2;
    double classifier_scale = 0.8;
    std::uint64_t seed = 1;
};

struct World {
    WorldSpec spec;
    Matrix means;                        // k x d, rows of norm mean_radius
    std::vector<double> drift_direction; // unit vector shared by every drift transform
};

// Maximum intensity of each family's 1..L ramp; level l maps to max * l / L.
// The ranges keep every family inside the regime where label-free statistics
// still track accuracy: heavier noise turns into uniformly *confident* wrong
// predictions (softmax re-sharpens once noise dominates the logits), which no
// prediction-matrix estimator can rank. Drift spans up to 2 mean radii so the
// benchmark reaches genuinely degenerate prediction histograms; scale only
// perturbs confidence, never accuracy, so its ramp stays small.
inline double shift_family_max_intensity(ShiftFamily f, double mean_radius) {
    switch (f) {
        case ShiftFamily::FeatureNoise: return 0.15 * mean_radius;
        case ShiftFamily::MeanDrift: return 2.0;
        case ShiftFamily::FeatureScale: return 0.2;
    }
    return 0.0;
}

inline World build_world(const WorldSpec& spec) {
    if (spec.class_count < 2) throw InvalidParameter("world needs at least two classes");
    if (spec.feature_dim < 2) throw InvalidParameter("world needs at least two feature dims");
    if (!(spec.mean_radius > 0.0)) throw InvalidParameter("mean_radius must be positive");
    if (!(spec.classifier_scale > 0.0)) throw InvalidParameter("classifier_scale must be positive");

    World w;
    w.spec = spec;
    w.means = Matrix(spec.class_count, spec.feature_dim);
    RandomStream stream(spec.seed, 0x6d65616eULL);  // class means
    for (std::size_t c = 0; c < spec.class_count; ++c) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (std::size_t j = 0; j < spec.feature_dim; ++j) {
                const double v = stream.normal();
                w.means(c, j) = v;
                norm2 += v * v;
            }
        } while (norm2 == 0.0);
        const double f = spec.mean_radius / std::sqrt(norm2);
        for (std::size_t j = 0; j < spec.feature_dim; ++j) w.means(c, j) *= f;
    }

    // Drift direction: a seeded random combination of the class means. Pulling
    // points toward the class-template subspace yields the characteristic
    // failure mode of real shifts: confident predictions piling onto a few
    // classes. One direction per world keeps drift monotone across levels.
    RandomStream dstream(spec.seed, 0x64726966ULL);
    w.drift_direction.assign(spec.feature_dim, 0.0);
    double norm2 = 0.0;
    do {
        for (std::size_t c = 0; c < spec.class_count; ++c) {
            const double coeff = dstream.normal();
            for (std::size_t j = 0; j < spec.feature_dim; ++j) {
                w.drift_direction[j] += coeff * w.means(c, j);
            }
        }
        norm2 = 0.0;
        for (double v : w.drift_direction) norm2 += v * v;
    } while (norm2 == 0.0);
    const double f = 1.0 / std::sqrt(norm2);
    for (double& v : w.drift_direction) v *= f;
    return w;
}

// One synthetic shifted test set: either a single (family, intensity) from
// the grid, or a composed list of transforms applied in order.
struct ShiftScenario {
    ShiftFamily family = ShiftFamily::FeatureNoise;
    int intensity_level = 1;
    double intensity_value = 0.0;
    std::vector<std::pair<ShiftFamily, double>> composed;  // overrides family when non-empty
    std::vector<std::int64_t> samples_per_class;
    std::uint64_t seed = 0;
};

// Logit matrix plus ground-truth labels; temper at scoring time.
struct GeneratedSet {
    Matrix logits;            // n x k
    std::vector<int> labels;  // length n
};

namespace detail {

inline void apply_shift(Matrix& points, ShiftFamily family, double strength,
                        const World& world, RandomStream& stream) {
    if (strength == 0.0) return;
    const std::size_t n = points.rows(), d = points.cols();
    switch (family) {
        case ShiftFamily::FeatureNoise:
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) points(i, j) += strength * stream.normal();
            break;
        case ShiftFamily::MeanDrift: {
            const double step = strength * world.spec.mean_radius;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) points(i, j) += step * world.drift_direction[j];
            break;
        }
        case ShiftFamily::FeatureScale: {
            const double f = 1.0 + strength;
            for (double& v : points.data()) v *= f;
            break;
        }
    }
}

}  // namespace detail

// Draw the scenario's samples (class c ~ N(mean_c, I)), apply its shift
// transforms in order, and emit classifier logits with true labels. A pure
// function of (world, scenario): reruns are bit-identical.
inline GeneratedSet generate_set(const World& world, const ShiftScenario& scenario) {
    const std::size_t k = world.spec.class_count, d = world.spec.feature_dim;
    if (scenario.samples_per_class.size() != k) {
        throw InvalidInput("samples_per_class length must equal class count");
    }
    std::int64_t total = 0;
    for (std::int64_t c : scenario.samples_per_class) {
        if (c < 0) throw InvalidInput("negative per-class count");
        total += c;
    }
    if (total == 0) throw InvalidInput("scenario generates zero samples");

    RandomStream stream(scenario.seed);
    Matrix points(static_cast<std::size_t>(total), d);
    std::vector<int> labels(static_cast<std::size_t>(total));
    std::size_t row = 0;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::int64_t s = 0; s < scenario.samples_per_class[c]; ++s, ++row) {
            labels[row] = static_cast<int>(c);
            for (std::size_t j = 0; j < d; ++j) points(row, j) = world.means(c, j) + stream.normal();
        }
    }

    if (!scenario.composed.empty()) {
        for (const auto& [family, strength] : scenario.composed) {
            detail::apply_shift(points, family, strength, world, stream);
        }
    } else {
        detail::apply_shift(points, scenario.family, scenario.intensity_value, world, stream);
    }

    GeneratedSet out;
    out.labels = std::move(labels);
    out.logits = Matrix(static_cast<std::size_t>(total), k);
    const double beta = world.spec.classifier_scale;
    for (std::size_t i = 0; i < static_cast<std::size_t>(total); ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += world.means(c, j) * points(i, j);
            out.logits(i, c) = beta * dot;
        }
    }
    return out;
}

// Exponential-decay class counts: count_c = round(n_max * m^(c/(k-1))), so
// the least frequent class holds round(n_max * m) samples.
inline std::vector<std::int64_t> imbalance_counts(std::size_t k, std::int64_t n_max, double m) {
    if (!(m > 0.0 && m <= 1.0)) throw InvalidParameter("imbalance ratio must be in (0,1]");
    if (n_max < 1) throw InvalidParameter("n_max must be at least 1");
    if (k < 2) throw InvalidParameter("need at least two classes");
    std::vector<std::int64_t> counts(k);
    for (std::size_t c = 0; c < k; ++c) {
        const double e = static_cast<double>(c) / static_cast<double>(k - 1);
        counts[c] = std::llround(static_cast<double>(n_max) * std::pow(m, e));
    }
    return counts;
}

// Uniform sample of ceil(fraction * n) row indices without replacement,
// returned in ascending order (fraction 1 keeps the set intact).
inline std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidParameter("fraction must be in (0,1]");
    if (n == 0) throw InvalidInput("empty input");
    const double t = fraction * static_cast<double>(n);
    auto count = static_cast<std::size_t>(std::ceil(t - 1e-9 * std::max(1.0, t)));
    count = std::clamp<std::size_t>(count, 1, n);

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    RandomStream stream(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(stream.uniform_index(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline LabeledPredictions subsample(const LabeledPredictions& l, double fraction, std::uint64_t seed) {
    const auto idx = subsample_indices(l.matrix.sample_count(), fraction, seed);
    if (idx.empty()) throw InvalidInput("subsample produced an empty set");
    Matrix rows(idx.size(), l.matrix.class_count());
    std::vector<int> labels(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto src = l.matrix.row(idx[r]);
        std::copy(src.begin(), src.end(), rows.row(r).begin());
        labels[r] = l.labels[idx[r]];
    }
    return LabeledPredictions(
        PredictionMatrix(std::move(rows), l.matrix.temperature(), l.matrix.source_kind()),
        std::move(labels));
}

inline GeneratedSet subsample(const GeneratedSet& set, double fraction, std::uint64_t seed) {
    const auto idx = subsample_indices(set.logits.rows(), fraction, seed);
    GeneratedSet out;
    out.logits = Matrix(idx.size(), set.logits.cols());
    out.labels.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto src = set.logits.row(idx[r]);
        std::copy(src.begin(), src.end(), out.logits.row(r).begin());
        out.labels[r] = set.labels[idx[r]];
    }
    return out;
}

// The families-by-levels grid plus `composed_count` random compositions of
// three families with uniform strengths, all deterministically seeded.
inline std::vector<ShiftScenario> make_benchmark(const World& world, int families, int levels,
                                                 int composed_count, std::uint64_t seed,
                                                 std::int64_t per_class = 200,
                                                 double imbalance = 1.0) {
    if (families < 1 || families > kShiftFamilyCount) {
        throw InvalidParameter("families must be in [1, 3]");
    }
    if (levels < 1) throw InvalidParameter("levels must be at least 1");
    if (composed_count < 0) throw InvalidParameter("composed_count must be non-negative");

    const std::size_t k = world.spec.class_count;
    const std::vector<std::int64_t> counts =
        imbalance == 1.0 ? std::vector<std::int64_t>(k, per_class)
                         : imbalance_counts(k, per_class, imbalance);

    std::vector<ShiftScenario> out;
    out.reserve(static_cast<std::size_t>(families) * levels + composed_count);
    std::uint64_t index = 0;
    for (int f = 0; f < families; ++f) {
        const auto family = static_cast<ShiftFamily>(f);
        const double max_v = shift_family_max_intensity(family, world.spec.mean_radius);
        for (int level = 1; level <= levels; ++level) {
            ShiftScenario sc;
            sc.family = family;
            sc.intensity_level = level;
            sc.intensity_value = max_v * static_cast<double>(level) / static_cast<double>(levels);
            sc.samples_per_class = counts;
            sc.seed = derive_seed(seed, index++);
            out.push_back(std::move(sc));
        }
    }

    for (int j = 0; j < composed_count; ++j) {
        RandomStream pick(seed, 0xc0000000ULL + static_cast<std::uint64_t>(j));
        std::vector<int> chosen;
        if (families >= 3) {
            std::vector<int> pool(families);
            std::iota(pool.begin(), pool.end(), 0);
            for (int t = 0; t < 3; ++t) {
                const auto r = t + static_cast<int>(pick.uniform_index(pool.size() - t));
                std::swap(pool[t], pool[r]);
                chosen.push_back(pool[t]);
            }
        } else {
            for (int t = 0; t < 3; ++t) {
                chosen.push_back(static_cast<int>(pick.uniform_index(families)));
            }
        }
        ShiftScenario sc;
        for (int f : chosen) {
            const auto family = static_cast<ShiftFamily>(f);
            const double max_v = shift_family_max_intensity(family, world.spec.mean_radius);
            sc.composed.emplace_back(family, pick.uniform(0.0, max_v));
        }
        sc.samples_per_class = counts;
        sc.seed = derive_seed(seed, index++);
        out.push_back(std::move(sc));
    }
    return out;
}

// Stable display name for scenario `i` of a benchmark list.
inline std::string scenario_name(const ShiftScenario& sc, std::size_t composed_ordinal) {
    if (!sc.composed.empty()) {
        std::string num = std::to_string(composed_ordinal + 1);
        while (num.size() < 3) num.insert(num.begin(), '0');
        return "rand-" + num;
    }
    return std::string(shift_family_name(sc.family)) + "-l" + std::to_string(sc.intensity_level);
}

}  // namespace predkit
