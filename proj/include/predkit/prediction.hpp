#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "predkit/errors.hpp"
#include "predkit/matrix.hpp"

namespace predkit {

enum class ScoreKind { Logits, Probabilities };

constexpr double kDefaultTemperature = 0.4;
constexpr double kRowSumIngestTolerance = 1e-6;
constexpr double kRowSumTolerance = 1e-9;

// Raw classifier output before any tempering: an n x k matrix of either
// logits or probabilities.
struct RawScores {
    Matrix values;
    ScoreKind kind = ScoreKind::Logits;

    std::size_t sample_count() const { return values.rows(); }
    std::size_t class_count() const { return values.cols(); }

    static RawScores logits(Matrix m) {
        validate_shape(m);
        return RawScores{std::move(m), ScoreKind::Logits};
    }

    static RawScores probabilities(Matrix m) {
        validate_shape(m);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            double sum = 0.0;
            for (double v : m.row(i)) {
                if (!(v >= 0.0 && v <= 1.0)) {
                    throw InvalidInput("probability entry outside [0,1] in row " + std::to_string(i));
                }
                sum += v;
            }
            if (std::abs(sum - 1.0) > kRowSumIngestTolerance) {
                throw InvalidInput("probability row " + std::to_string(i) + " does not sum to 1");
            }
        }
        return RawScores{std::move(m), ScoreKind::Probabilities};
    }

private:
    static void validate_shape(const Matrix& m) {
        if (m.rows() < 1) throw InvalidInput("need at least one sample row");
        if (m.cols() < 2) throw InvalidInput("need at least two classes");
    }
};

// Row-stochastic n x k matrix of softmax outputs. Immutable once built; every
// row sums to 1 within 1e-9.
class PredictionMatrix {
public:
    PredictionMatrix(Matrix rows, double temperature, ScoreKind source_kind)
        : rows_(std::move(rows)), temperature_(temperature), source_kind_(source_kind) {
        if (temperature_ <= 0.0) throw InvalidParameter("temperature must be positive");
        if (rows_.rows() < 1 || rows_.cols() < 2) {
            throw InvalidInput("prediction matrix must be at least 1x2");
        }
        for (std::size_t i = 0; i < rows_.rows(); ++i) {
            double sum = 0.0;
            for (double v : rows_.row(i)) {
                if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("prediction entry outside [0,1]");
                sum += v;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance) {
                throw InvalidInput("prediction row " + std::to_string(i) + " violates simplex constraint");
            }
        }
    }

    std::size_t sample_count() const { return rows_.rows(); }
    std::size_t class_count() const { return rows_.cols(); }
    double temperature() const { return temperature_; }
    ScoreKind source_kind() const { return source_kind_; }

    const Matrix& rows() const { return rows_; }
    std::span<const double> row(std::size_t i) const { return rows_.row(i); }
    double operator()(std::size_t i, std::size_t j) const { return rows_(i, j); }

private:
    Matrix rows_;
    double temperature_;
    ScoreKind source_kind_;
};

// Tempered softmax over logit rows with max-subtraction stabilization:
// p_ij = exp(z_ij / tau) / sum_c exp(z_ic / tau).
inline PredictionMatrix temper_softmax(const RawScores& raw, double temperature = kDefaultTemperature) {
    if (raw.kind != ScoreKind::Logits) throw InvalidInput("temper_softmax expects logits");
    if (!(temperature > 0.0)) throw InvalidParameter("temperature must be positive");
    if (!raw.values.all_finite()) throw InvalidInput("non-finite logit entry");

    const std::size_t n = raw.sample_count(), k = raw.class_count();
    Matrix out(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        auto z = raw.values.row(i);
        double zmax = z[0];
        for (double v : z) zmax = std::max(zmax, v);
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double e = std::exp((z[j] - zmax) / temperature);
            out(i, j) = e;
            denom += e;
        }
        for (std::size_t j = 0; j < k; ++j) out(i, j) /= denom;
    }
    return PredictionMatrix(std::move(out), temperature, ScoreKind::Logits);
}

// Use probability rows as-is after renormalizing away up to 1e-6 of drift.
inline PredictionMatrix adopt_probabilities(const RawScores& raw) {
    if (raw.kind != ScoreKind::Probabilities) throw InvalidInput("adopt_probabilities expects probabilities");

    const std::size_t n = raw.sample_count(), k = raw.class_count();
    Matrix out(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = raw.values.row(i);
        double sum = 0.0;
        for (double v : r) {
            if (v < 0.0) throw InvalidInput("negative probability in row " + std::to_string(i));
            sum += v;
        }
        if (std::abs(sum - 1.0) > kRowSumIngestTolerance) {
            throw InvalidInput("probability row " + std::to_string(i) + " does not sum to 1");
        }
        for (std::size_t j = 0; j < k; ++j) out(i, j) = r[j] / sum;
    }
    return PredictionMatrix(std::move(out), 1.0, ScoreKind::Probabilities);
}

// Re-temper stored probabilities: take logs and push through temper_softmax.
// Zero entries are floored at the smallest normal double so the logs stay finite.
inline PredictionMatrix retemper(const PredictionMatrix& p, double temperature) {
    const std::size_t n = p.sample_count(), k = p.class_count();
    Matrix logs(n, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j)
            logs(i, j) = std::log(std::max(p(i, j), std::numeric_limits<double>::min()));
    return temper_softmax(RawScores::logits(std::move(logs)), temperature);
}

// Per-row argmax; ties break to the lowest class index.
inline std::vector<int> predicted_labels(const PredictionMatrix& p) {
    std::vector<int> out(p.sample_count());
    for (std::size_t i = 0; i < p.sample_count(); ++i) {
        auto r = p.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < r.size(); ++j)
            if (r[j] > r[best]) best = j;
        out[i] = static_cast<int>(best);
    }
    return out;
}

// Prediction matrix together with ground-truth labels.
struct LabeledPredictions {
    PredictionMatrix matrix;
    std::vector<int> labels;

    LabeledPredictions(PredictionMatrix m, std::vector<int> y)
        : matrix(std::move(m)), labels(std::move(y)) {
        if (labels.size() != matrix.sample_count()) {
            throw InvalidInput("label count does not match sample count");
        }
        for (int c : labels) {
            if (c < 0 || static_cast<std::size_t>(c) >= matrix.class_count()) {
                throw InvalidInput("label outside [0, k)");
            }
        }
    }
};

inline double accuracy(const LabeledPredictions& l) {
    const auto pred = predicted_labels(l.matrix);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == l.labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace predkit
