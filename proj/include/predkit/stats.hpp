#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "predkit/errors.hpp"

namespace predkit {

constexpr double kProbitClamp = 1e-6;
// Padding used when min-max mapping an estimator axis into (0,1) before
// probit scaling; endpoints land at probit(+-(1-pad)).
constexpr double kScaledAxisPad = 0.01;

inline void check_equal_lengths(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidInput("vectors must have equal length");
    if (x.size() < 2) throw InvalidInput("need at least two points");
}

inline double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample Pearson correlation.
inline double pearson(std::span<const double> x, std::span<const double> y) {
    check_equal_lengths(x, y);
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("zero variance input to pearson");
    return sxy / std::sqrt(sxx * syy);
}

// Average ranks (1-based); ties receive the mean of their rank range.
inline std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

// Spearman rank correlation: Pearson correlation of average-ranked data.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    check_equal_lengths(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    try {
        return pearson(rx, ry);
    } catch (const DegenerateInput&) {
        throw DegenerateInput("all-equal vector input to spearman");
    }
}

// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

inline double normal_pdf(double x) {
    return 0.39894228040143267794 * std::exp(-0.5 * x * x);
}

// Inverse standard normal CDF. Inputs clamp to [1e-6, 1-1e-6]; `clamped`
// reports whether clamping happened. Newton iterations on normal_cdf from a
// rational initial guess, bisection-safeguarded.
inline double probit(double p, bool& clamped) {
    if (!std::isfinite(p)) throw InvalidInput("non-finite probit input");
    clamped = false;
    if (p < kProbitClamp) {
        p = kProbitClamp;
        clamped = true;
    } else if (p > 1.0 - kProbitClamp) {
        p = 1.0 - kProbitClamp;
        clamped = true;
    }
    if (p == 0.5) return 0.0;

    // Logistic initial guess, then Newton safeguarded by a bisection bracket.
    double x = std::log(p / (1.0 - p)) / 1.702;
    double lo = -9.0, hi = 9.0;
    if (!std::isfinite(x) || x <= lo || x >= hi) x = 0.0;
    for (int it = 0; it < 60; ++it) {
        const double f = normal_cdf(x) - p;
        if (f > 0.0) {
            hi = std::min(hi, x);
        } else if (f < 0.0) {
            lo = std::max(lo, x);
        }
        const double d = normal_pdf(x);
        double step = f / std::max(d, 1e-300);
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) < 1e-15 * std::max(1.0, std::abs(x))) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

inline double probit(double p) {
    bool clamped = false;
    return probit(p, clamped);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    bool converged = true;
};

// Ordinary least squares line.
inline LineFit ols_fit(std::span<const double> x, std::span<const double> y) {
    check_equal_lengths(x, y);
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw DegenerateInput("constant x in ols_fit");
    const double slope = sxy / sxx;
    return LineFit{slope, my - slope * mx, true};
}

namespace detail {

inline double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double hi = v[n / 2];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
    return 0.5 * (v[n / 2 - 1] + hi);
}

// Theil-Sen line: median of pairwise slopes. A leverage-robust starting
// point; plain OLS initialization lets one bad leverage point capture the
// whole IRLS iteration.
inline LineFit theil_sen(std::span<const double> x, std::span<const double> y) {
    std::vector<double> slopes;
    slopes.reserve(x.size() * (x.size() - 1) / 2);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j)
            if (x[i] != x[j]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
    if (slopes.empty()) throw DegenerateInput("constant x in robust_fit");
    const double slope = median_inplace(slopes);
    std::vector<double> offsets(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) offsets[i] = y[i] - slope * x[i];
    return LineFit{slope, median_inplace(offsets), true};
}

}  // namespace detail

// Iteratively reweighted least squares with Huber weights (delta = 1.345,
// residuals scaled by MAD/0.6745). Stops on coefficient change < 1e-10 or
// 50 iterations; a non-converged fit returns the last iterate with
// converged = false.
inline LineFit robust_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidInput("vectors must have equal length");
    if (x.size() < 3) throw InvalidInput("robust_fit needs at least three points");

    constexpr double kHuberDelta = 1.345;
    LineFit fit = detail::theil_sen(x, y);
    const std::size_t n = x.size();
    std::vector<double> r(n), absr(n);

    for (int it = 0; it < 50; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = y[i] - (fit.slope * x[i] + fit.intercept);
            absr[i] = std::abs(r[i]);
        }
        std::vector<double> tmp = absr;
        const double scale = detail::median_inplace(tmp) / 0.6745;
        // Zero MAD: a majority of points sit exactly on the line. That is the
        // limiting Huber fit (off-line points get weight 0), so stop here.
        if (scale == 0.0) return fit;

        double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = absr[i] / scale;
            const double w = u <= kHuberDelta ? 1.0 : kHuberDelta / u;
            sw += w;
            swx += w * x[i];
            swy += w * y[i];
            swxx += w * x[i] * x[i];
            swxy += w * x[i] * y[i];
        }
        const double denom = sw * swxx - swx * swx;
        if (denom == 0.0) {
            fit.converged = false;
            return fit;
        }
        const double slope = (sw * swxy - swx * swy) / denom;
        const double intercept = (swy - slope * swx) / sw;
        const double change = std::abs(slope - fit.slope) + std::abs(intercept - fit.intercept);
        fit.slope = slope;
        fit.intercept = intercept;
        if (change < 1e-10) return fit;
    }
    fit.converged = false;
    return fit;
}

// Coefficient of determination of the line (slope, intercept) on (x, y).
inline double r_squared(std::span<const double> x, std::span<const double> y,
                        double slope, double intercept) {
    check_equal_lengths(x, y);
    const double my = mean(y);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (slope * x[i] + intercept);
        ss_res += e * e;
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    if (ss_tot == 0.0) throw DegenerateInput("zero total variance in r_squared");
    return 1.0 - ss_res / ss_tot;
}

// Accuracy predicted from a fitted line. In scaled mode the estimate must
// already live in (0,1); it passes through probit, the line, then the
// forward normal CDF. Raw-mode results outside [0,1] are returned unclamped
// (`out_of_range` flags them).
inline double predict_accuracy(double estimate, const LineFit& fit, bool scaled,
                               bool& out_of_range) {
    out_of_range = false;
    if (scaled) {
        bool clamped = false;
        const double z = probit(estimate, clamped);
        out_of_range = clamped;
        return normal_cdf(fit.slope * z + fit.intercept);
    }
    const double a = fit.slope * estimate + fit.intercept;
    out_of_range = a < 0.0 || a > 1.0;
    return a;
}

inline double predict_accuracy(double estimate, const LineFit& fit, bool scaled) {
    bool flag = false;
    return predict_accuracy(estimate, fit, scaled, flag);
}

// Fit summary between an estimated quantity and accuracy. When scaled, the
// estimator axis is min-max mapped into (0,1) (with kScaledAxisPad padding)
// and both axes pass through probit before fitting; spearman always uses the
// unscaled values (probit and min-max are strictly monotone, so ranks agree).
struct CorrelationSummary {
    double pearson_r = 0.0;
    double spearman_rho = 0.0;
    double r_squared = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    bool scaled = false;
    std::vector<double> residuals;  // in fit space, input order
    // Min-max map applied to the estimator axis in scaled mode; callers need
    // it to push new estimates through the same fit.
    double estimator_min = 0.0;
    double estimator_max = 0.0;
    bool fit_converged = true;
    std::vector<std::string> warnings;
};

// Map an estimator value into (0,1) with the summary's min-max window.
inline double scale_estimate(double value, double lo, double hi) {
    const double t = (value - lo) / (hi - lo);
    return kScaledAxisPad + (1.0 - 2.0 * kScaledAxisPad) * t;
}

inline CorrelationSummary correlate(std::span<const double> estimates,
                                    std::span<const double> accuracies,
                                    bool scaled, bool robust = false) {
    if (estimates.size() != accuracies.size()) throw InvalidInput("pair lengths differ");
    if (estimates.size() < 3) throw InvalidInput("correlate needs at least 3 pairs");

    CorrelationSummary s;
    s.scaled = scaled;
    s.spearman_rho = spearman(estimates, accuracies);

    std::vector<double> x(estimates.begin(), estimates.end());
    std::vector<double> y(accuracies.begin(), accuracies.end());
    s.estimator_min = *std::min_element(x.begin(), x.end());
    s.estimator_max = *std::max_element(x.begin(), x.end());
    if (scaled) {
        if (s.estimator_max == s.estimator_min) throw DegenerateInput("constant estimator axis");
        bool any_clamped = false;
        for (auto& v : x) {
            bool c = false;
            v = probit(scale_estimate(v, s.estimator_min, s.estimator_max), c);
            any_clamped |= c;
        }
        for (auto& v : y) {
            bool c = false;
            v = probit(v, c);
            any_clamped |= c;
        }
        if (any_clamped) s.warnings.push_back("probit clamped values at the (0,1) boundary");
    }

    s.pearson_r = pearson(x, y);
    const LineFit fit = robust ? robust_fit(x, y) : ols_fit(x, y);
    s.slope = fit.slope;
    s.intercept = fit.intercept;
    s.fit_converged = fit.converged;
    s.r_squared = r_squared(x, y, fit.slope, fit.intercept);
    s.residuals.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        s.residuals[i] = y[i] - (fit.slope * x[i] + fit.intercept);
    }
    return s;
}

}  // namespace predkit
