#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "predkit/errors.hpp"
#include "predkit/linalg.hpp"
#include "predkit/prediction.hpp"

namespace predkit {

// Natural-log entropy with the 0*log(0) = 0 convention.
inline double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

// Nuclear norm of P normalized by its size-derived upper bound
// sqrt(min(n,k) * n); 1.0 for an identity-like matrix, 1/k for the uniform one.
inline double nuclear_norm_score(const PredictionMatrix& p) {
    const auto spectrum = singular_values(p.rows());
    const double d = static_cast<double>(std::min(p.sample_count(), p.class_count()));
    return spectrum.nuclear_norm() / std::sqrt(d * static_cast<double>(p.sample_count()));
}

// Nuclear norm renormalized for long-tailed test sets: the dispersity
// expectation applies to the k_head major classes only. May exceed 1.
inline double rectified_nuclear_norm_score(const PredictionMatrix& p, int k_head) {
    if (k_head < 1 || static_cast<std::size_t>(k_head) > p.class_count()) {
        throw InvalidParameter("k_head outside [1, k]");
    }
    const auto spectrum = singular_values(p.rows());
    const double d = static_cast<double>(std::min<std::size_t>(p.sample_count(), k_head));
    return spectrum.nuclear_norm() / std::sqrt(d * static_cast<double>(p.sample_count()));
}

// Frequency distribution of predicted classes.
inline std::vector<double> predicted_class_frequencies(const PredictionMatrix& p) {
    std::vector<double> freq(p.class_count(), 0.0);
    for (int c : predicted_labels(p)) freq[static_cast<std::size_t>(c)] += 1.0;
    for (double& f : freq) f /= static_cast<double>(p.sample_count());
    return freq;
}

struct DispersityScore {
    double raw = 0.0;         // entropy of the predicted-class histogram
    double normalized = 0.0;  // raw / log k
};

// Entropy of the predicted-class frequency histogram: 0 when every sample is
// assigned one class, log k (normalized: 1) when assignments are balanced.
inline DispersityScore dispersity_score(const PredictionMatrix& p) {
    const double raw = entropy(predicted_class_frequencies(p));
    return DispersityScore{raw, raw / std::log(static_cast<double>(p.class_count()))};
}

// H(mean row) - mean(H(row)): high when predictions are confident and
// globally balanced, zero when every row equals the column mean.
inline double mutual_information_score(const PredictionMatrix& p) {
    const std::size_t n = p.sample_count(), k = p.class_count();
    std::vector<double> colmean(k, 0.0);
    double mean_row_entropy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = p.row(i);
        for (std::size_t j = 0; j < k; ++j) colmean[j] += r[j];
        mean_row_entropy += entropy(r);
    }
    for (double& v : colmean) v /= static_cast<double>(n);
    mean_row_entropy /= static_cast<double>(n);
    return entropy(colmean) - mean_row_entropy;
}

// Mean of per-row maximum softmax scores (AC).
inline double average_confidence(const PredictionMatrix& p) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.sample_count(); ++i) {
        auto r = p.row(i);
        sum += *std::max_element(r.begin(), r.end());
    }
    return sum / static_cast<double>(p.sample_count());
}

// Mean of per-row negative entropies (ANE); always <= 0.
inline double average_negative_entropy(const PredictionMatrix& p) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.sample_count(); ++i) sum -= entropy(p.row(i));
    return sum / static_cast<double>(p.sample_count());
}

enum class ConfidenceScore { MaxConfidence, NegativeEntropy };

inline double row_confidence(std::span<const double> row, ConfidenceScore kind) {
    if (kind == ConfidenceScore::MaxConfidence) {
        return *std::max_element(row.begin(), row.end());
    }
    return -entropy(row);
}

// ATC threshold plus the source-validation statistics DoC needs.
struct CalibrationProfile {
    double atc_threshold = 0.0;
    ConfidenceScore score_kind = ConfidenceScore::MaxConfidence;
    double val_accuracy = 0.0;
    double val_average_confidence = 0.0;
    double temperature = kDefaultTemperature;
};

namespace detail {

// Threshold rule: sort scores ascending, take index mistakes-1 (clamped), so
// the above-threshold fraction lands as close to the accuracy as possible
// from below.
inline double atc_threshold(std::vector<double> scores, std::size_t mistakes) {
    std::sort(scores.begin(), scores.end());
    const std::size_t n = scores.size();
    const std::size_t idx = mistakes == 0 ? 0 : std::min(mistakes - 1, n - 1);
    return scores[idx];
}

}  // namespace detail

// Calibrate the ATC threshold on a labeled source-validation set so that the
// fraction of rows scoring above it matches the validation accuracy.
inline CalibrationProfile calibrate_atc(const LabeledPredictions& val,
                                        ConfidenceScore kind = ConfidenceScore::MaxConfidence) {
    const std::size_t n = val.matrix.sample_count();
    if (n == 0) throw InvalidInput("empty validation set");

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = row_confidence(val.matrix.row(i), kind);

    const auto pred = predicted_labels(val.matrix);
    std::size_t mistakes = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (pred[i] != val.labels[i]) ++mistakes;

    CalibrationProfile cal;
    cal.atc_threshold = detail::atc_threshold(scores, mistakes);
    cal.score_kind = kind;
    cal.val_accuracy = static_cast<double>(n - mistakes) / static_cast<double>(n);
    cal.val_average_confidence = average_confidence(val.matrix);
    cal.temperature = val.matrix.temperature();
    return cal;
}

inline void check_calibration_compatible(const PredictionMatrix& p, const CalibrationProfile& cal) {
    if (std::abs(cal.temperature - p.temperature()) > 1e-12) {
        throw InvalidParameter("calibration temperature does not match prediction matrix");
    }
}

// Fraction of target rows whose confidence score is strictly above the
// calibrated threshold (ATC).
inline double atc_score(const PredictionMatrix& p, const CalibrationProfile& cal) {
    check_calibration_compatible(p, cal);
    std::size_t above = 0;
    for (std::size_t i = 0; i < p.sample_count(); ++i)
        if (row_confidence(p.row(i), cal.score_kind) > cal.atc_threshold) ++above;
    return static_cast<double>(above) / static_cast<double>(p.sample_count());
}

// Difference of confidence (DoC): validation accuracy minus the confidence
// drop from validation to target. Reported unclamped.
inline double doc_score(const PredictionMatrix& p, const CalibrationProfile& cal) {
    check_calibration_compatible(p, cal);
    return cal.val_accuracy - (cal.val_average_confidence - average_confidence(p));
}

// Every estimator computed on one prediction matrix. ATC/DoC appear only
// when a calibration profile was supplied, the rectified nuclear norm only
// when a head-class count was known.
struct EstimatorReport {
    std::size_t sample_count = 0;
    std::size_t class_count = 0;
    double temperature = kDefaultTemperature;
    double nuclear_norm = 0.0;
    std::optional<double> rectified_nuclear_norm;
    std::optional<int> k_head;
    double dispersity = 0.0;
    double dispersity_normalized = 0.0;
    double mutual_information = 0.0;
    double average_confidence = 0.0;
    double average_negative_entropy = 0.0;
    std::optional<double> atc;
    std::optional<double> doc;
    std::vector<std::string> warnings;
};

// Compute the full estimator battery; singular values are computed once and
// shared between the plain and rectified nuclear norms.
inline EstimatorReport full_report(const PredictionMatrix& p,
                                   const CalibrationProfile* cal = nullptr,
                                   std::optional<int> k_head = std::nullopt) {
    EstimatorReport r;
    r.sample_count = p.sample_count();
    r.class_count = p.class_count();
    r.temperature = p.temperature();

    const auto spectrum = singular_values(p.rows());
    const double n = static_cast<double>(p.sample_count());
    const double d_plain = static_cast<double>(std::min(p.sample_count(), p.class_count()));
    r.nuclear_norm = spectrum.nuclear_norm() / std::sqrt(d_plain * n);
    if (k_head) {
        if (*k_head < 1 || static_cast<std::size_t>(*k_head) > p.class_count()) {
            throw InvalidParameter("k_head outside [1, k]");
        }
        const double d_head = static_cast<double>(std::min<std::size_t>(p.sample_count(), *k_head));
        r.rectified_nuclear_norm = spectrum.nuclear_norm() / std::sqrt(d_head * n);
        r.k_head = k_head;
    }

    const auto disp = dispersity_score(p);
    r.dispersity = disp.raw;
    r.dispersity_normalized = disp.normalized;
    r.mutual_information = mutual_information_score(p);
    r.average_confidence = average_confidence(p);
    r.average_negative_entropy = average_negative_entropy(p);

    if (cal) {
        r.atc = atc_score(p, *cal);
        r.doc = doc_score(p, *cal);
        if (*r.doc < 0.0 || *r.doc > 1.0) {
            r.warnings.push_back("doc estimate outside [0,1]: " + std::to_string(*r.doc));
        }
    }
    return r;
}

}  // namespace predkit
