#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "predkit/errors.hpp"
#include "predkit/linalg.hpp"
#include "predkit/matrix.hpp"
#include "predkit/prediction.hpp"

namespace predkit {

// Black-box shift estimation output: importance weights p_T(y)/p_S(y) and
// the implied target class prior.
struct ClassDistributionEstimate {
    std::vector<double> weights;
    std::vector<double> target_prior;
    double residual = 0.0;
};

namespace detail {

// Gaussian elimination with partial pivoting; a is consumed.
inline std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(a(i, col)) > std::abs(a(piv, col))) piv = i;
        if (a(piv, col) == 0.0) throw NumericalFailure("singular confusion matrix");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t i = col + 1; i < n; ++i) {
            const double f = a(i, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
            b[i] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return x;
}

}  // namespace detail

// BBSE: solve C w = mu for the importance weights, where C is the normalized
// source confusion matrix with entries P(pred = i, true = j) and mu is the
// target predicted-class distribution. Negative weights clamp to zero; the
// target prior is w * source_prior, renormalized.
inline ClassDistributionEstimate bbse_estimate(const Matrix& confusion_counts,
                                               std::span<const double> target_pred_prior) {
    const std::size_t k = confusion_counts.rows();
    if (confusion_counts.cols() != k) throw InvalidInput("confusion matrix must be square");
    if (target_pred_prior.size() != k) throw InvalidInput("predicted prior length must equal k");
    if (!confusion_counts.all_finite()) throw InvalidInput("non-finite confusion entry");

    double total = 0.0;
    for (double v : confusion_counts.data()) {
        if (v < 0.0) throw InvalidInput("negative confusion count");
        total += v;
    }
    if (total <= 0.0) throw InvalidInput("empty confusion matrix");

    double prior_sum = 0.0;
    for (double v : target_pred_prior) prior_sum += v;
    if (std::abs(prior_sum - 1.0) > 1e-6) throw InvalidInput("target predicted prior does not sum to 1");

    Matrix c(k, k);
    std::vector<double> source_prior(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            c(i, j) = confusion_counts(i, j) / total;
            source_prior[j] += c(i, j);
        }
    for (std::size_t j = 0; j < k; ++j)
        if (source_prior[j] <= 0.0) {
            throw InvalidInput("class " + std::to_string(j) + " has zero validation support");
        }

    // Condition estimate from the singular values of C.
    const auto spectrum = singular_values(c);
    const double smin = spectrum.values.back();
    const double smax = spectrum.values.front();
    ClassDistributionEstimate est;
    std::vector<double> mu(target_pred_prior.begin(), target_pred_prior.end());
    if (smin <= 0.0 || smax / smin > 1e8) {
        est.residual = 1.0;
        throw NumericalFailure("confusion matrix is ill-conditioned (cond > 1e8)");
    }

    est.weights = detail::solve_linear(c, mu);
    double res2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double ci = 0.0;
        for (std::size_t j = 0; j < k; ++j) ci += c(i, j) * est.weights[j];
        res2 += (ci - mu[i]) * (ci - mu[i]);
    }
    est.residual = std::sqrt(res2);

    for (double& w : est.weights) w = std::max(w, 0.0);
    est.target_prior.resize(k);
    double norm = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        est.target_prior[j] = est.weights[j] * source_prior[j];
        norm += est.target_prior[j];
    }
    if (norm <= 0.0) throw NumericalFailure("BBSE produced an all-zero target prior");
    for (double& v : est.target_prior) v /= norm;
    return est;
}

// Imbalance intensity r_m (tail mass over head mass) and the head-class
// count k_head used by the rectified nuclear norm.
struct ImbalanceIntensity {
    double r_m = 1.0;
    int k_head = 0;
};

// Head-class count rule: k_head = round(k - (1 - r_m) * c) clamped to [1, k].
// The constant c defaults to round(0.08 * k), i.e. 80 at k = 1000.
inline int head_class_count(double r_m, std::size_t k, int head_constant = -1) {
    const double c = head_constant >= 0 ? static_cast<double>(head_constant)
                                        : std::round(0.08 * static_cast<double>(k));
    const double clipped = std::min(r_m, 1.0);
    const double kh = std::round(static_cast<double>(k) - (1.0 - clipped) * c);
    return static_cast<int>(std::clamp(kh, 1.0, static_cast<double>(k)));
}

// r_m from a class prior: sort descending, sum the top `head_count` and
// bottom `tail_count` entries, take the ratio. Windows shrink to floor(k/2)
// when k < head_count + tail_count.
inline ImbalanceIntensity imbalance_intensity(std::span<const double> target_prior,
                                              std::size_t head_count = 10,
                                              std::size_t tail_count = 10,
                                              int head_constant = -1) {
    const std::size_t k = target_prior.size();
    if (k < 2) throw InvalidInput("need at least two classes");
    double sum = 0.0;
    for (double v : target_prior) {
        if (v < 0.0 || !std::isfinite(v)) throw InvalidInput("prior entries must be non-negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw InvalidInput("prior does not sum to 1");

    if (k < head_count + tail_count) {
        head_count = tail_count = k / 2;
    }

    std::vector<double> sorted(target_prior.begin(), target_prior.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < head_count; ++i) head += sorted[i];
    for (std::size_t i = 0; i < tail_count; ++i) tail += sorted[k - 1 - i];
    if (head <= 0.0) throw InvalidInput("head mass is zero");

    ImbalanceIntensity out;
    out.r_m = tail / head;
    out.k_head = head_class_count(out.r_m, k, head_constant);
    return out;
}

// Joint prediction/label counts from a labeled set: entry (i, j) counts rows
// predicted as class i whose true label is j.
inline Matrix confusion_counts(const LabeledPredictions& l) {
    const std::size_t k = l.matrix.class_count();
    Matrix counts(k, k);
    const auto pred = predicted_labels(l.matrix);
    for (std::size_t r = 0; r < pred.size(); ++r) {
        counts(static_cast<std::size_t>(pred[r]), static_cast<std::size_t>(l.labels[r])) += 1.0;
    }
    return counts;
}

// Predicted-class distribution of a prediction matrix.
inline std::vector<double> predicted_prior(const PredictionMatrix& p) {
    std::vector<double> prior(p.class_count(), 0.0);
    for (int c : predicted_labels(p)) prior[static_cast<std::size_t>(c)] += 1.0;
    for (double& v : prior) v /= static_cast<double>(p.sample_count());
    return prior;
}

}  // namespace predkit
