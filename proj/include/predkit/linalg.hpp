#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "predkit/errors.hpp"
#include "predkit/matrix.hpp"

namespace predkit {

enum class SvdMethod { GramEigen, Bidiagonal };

// Singular values of a matrix, sorted descending. length = min(rows, cols).
struct SingularSpectrum {
    std::vector<double> values;
    SvdMethod method = SvdMethod::GramEigen;

    double nuclear_norm() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
};

namespace detail {

constexpr double kJacobiOffTolerance = 1e-14;
constexpr int kJacobiMaxSweeps = 50;

inline double offdiag_frobenius(const Matrix& s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < s.cols(); ++j)
            if (i != j) sum += s(i, j) * s(i, j);
    return std::sqrt(sum);
}

// One cyclic Jacobi pass, rotating away every off-diagonal pair once.
inline void jacobi_sweep(Matrix& a) {
    const std::size_t n = a.rows();
    for (std::size_t p = 0; p + 1 < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            const double apq = a(p, q);
            if (apq == 0.0) continue;
            const double app = a(p, p), aqq = a(q, q);
            const double theta = (aqq - app) / (2.0 * apq);
            const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                             (std::abs(theta) + std::sqrt(1.0 + theta * theta));
            const double c = 1.0 / std::sqrt(1.0 + t * t);
            const double s = t * c;

            for (std::size_t i = 0; i < n; ++i) {
                const double aip = a(i, p), aiq = a(i, q);
                a(i, p) = c * aip - s * aiq;
                a(i, q) = s * aip + c * aiq;
            }
            for (std::size_t j = 0; j < n; ++j) {
                const double apj = a(p, j), aqj = a(q, j);
                a(p, j) = c * apj - s * aqj;
                a(q, j) = s * apj + c * aqj;
            }
            a(p, q) = 0.0;
            a(q, p) = 0.0;
        }
    }
}

}  // namespace detail

// All eigenvalues of a symmetric matrix via cyclic Jacobi rotations, sorted
// descending. Sweeps until the off-diagonal Frobenius mass drops below
// 1e-14 * ||S||_F, at most 50 sweeps.
inline std::vector<double> symmetric_eigenvalues(const Matrix& s) {
    if (s.rows() != s.cols()) throw InvalidInput("matrix must be square");
    if (!s.all_finite()) throw InvalidInput("non-finite entry");
    const std::size_t n = s.rows();
    const double fro = s.frobenius_norm();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(s(i, j) - s(j, i)) > 1e-12 * std::max(1.0, fro)) {
                throw InvalidInput("matrix is not symmetric within tolerance");
            }

    Matrix a = s;
    // Symmetrize exactly so rotations stay consistent.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }

    if (fro > 0.0) {
        bool converged = false;
        for (int sweep = 0; sweep < detail::kJacobiMaxSweeps; ++sweep) {
            if (detail::offdiag_frobenius(a) < detail::kJacobiOffTolerance * fro) {
                converged = true;
                break;
            }
            detail::jacobi_sweep(a);
        }
        if (!converged && detail::offdiag_frobenius(a) >= detail::kJacobiOffTolerance * fro) {
            throw NumericalFailure("Jacobi eigensolver did not converge in 50 sweeps");
        }
    }

    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end(), std::greater<>());
    return eig;
}

namespace detail {

// Householder bidiagonalization, diagonal and superdiagonal magnitudes only.
// Expects rows >= cols. Singular values of the bidiagonal matrix equal those
// of the input.
inline void bidiagonalize(Matrix a, std::vector<double>& diag, std::vector<double>& super) {
    const std::size_t m = a.rows(), n = a.cols();
    diag.assign(n, 0.0);
    super.assign(n > 0 ? n - 1 : 0, 0.0);

    for (std::size_t j = 0; j < n; ++j) {
        // Eliminate below-diagonal entries of column j.
        double colnorm = 0.0;
        for (std::size_t i = j; i < m; ++i) colnorm += a(i, j) * a(i, j);
        colnorm = std::sqrt(colnorm);
        if (colnorm > 0.0) {
            double alpha = a(j, j) >= 0.0 ? -colnorm : colnorm;
            std::vector<double> v(m - j);
            v[0] = a(j, j) - alpha;
            for (std::size_t i = j + 1; i < m; ++i) v[i - j] = a(i, j);
            double vnorm2 = 0.0;
            for (double x : v) vnorm2 += x * x;
            if (vnorm2 > 0.0) {
                for (std::size_t c = j; c < n; ++c) {
                    double dot = 0.0;
                    for (std::size_t i = j; i < m; ++i) dot += v[i - j] * a(i, c);
                    const double f = 2.0 * dot / vnorm2;
                    for (std::size_t i = j; i < m; ++i) a(i, c) -= f * v[i - j];
                }
            }
            a(j, j) = alpha;
        }
        diag[j] = std::abs(a(j, j));

        if (j + 1 < n) {
            // Eliminate entries right of the superdiagonal in row j.
            double rownorm = 0.0;
            for (std::size_t c = j + 1; c < n; ++c) rownorm += a(j, c) * a(j, c);
            rownorm = std::sqrt(rownorm);
            if (rownorm > 0.0) {
                double alpha = a(j, j + 1) >= 0.0 ? -rownorm : rownorm;
                std::vector<double> v(n - j - 1);
                v[0] = a(j, j + 1) - alpha;
                for (std::size_t c = j + 2; c < n; ++c) v[c - j - 1] = a(j, c);
                double vnorm2 = 0.0;
                for (double x : v) vnorm2 += x * x;
                if (vnorm2 > 0.0) {
                    for (std::size_t i = j; i < m; ++i) {
                        double dot = 0.0;
                        for (std::size_t c = j + 1; c < n; ++c) dot += v[c - j - 1] * a(i, c);
                        const double f = 2.0 * dot / vnorm2;
                        for (std::size_t c = j + 1; c < n; ++c) a(i, c) -= f * v[c - j - 1];
                    }
                }
                a(j, j + 1) = alpha;
            }
            super[j] = std::abs(a(j, j + 1));
        }
    }
}

// Sturm count for the Golub-Kahan tridiagonal [0 B; B^T 0]: number of
// eigenvalues strictly below x. Off-diagonals interleave diag and super.
inline std::size_t gk_count_below(const std::vector<double>& offdiag, double x, double pivmin) {
    std::size_t count = 0;
    double q = -x;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
    for (double b : offdiag) {
        q = -x - (b * b) / q;
        if (std::abs(q) < pivmin) q = -pivmin;
        if (q < 0.0) ++count;
    }
    return count;
}

// Singular values of a bidiagonal matrix by bisection on the Golub-Kahan
// tridiagonal form; the i-th largest eigenvalue of that form is +sigma_i.
inline std::vector<double> bidiagonal_singular_values(const std::vector<double>& diag,
                                                      const std::vector<double>& super) {
    const std::size_t n = diag.size();
    std::vector<double> offdiag;
    offdiag.reserve(2 * n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        offdiag.push_back(diag[i]);
        if (i + 1 < n) offdiag.push_back(super[i]);
    }

    double bmax = 0.0;
    for (double b : offdiag) bmax = std::max(bmax, std::abs(b));
    if (bmax == 0.0) return std::vector<double>(n, 0.0);

    // Gershgorin bound on the tridiagonal spectrum.
    double upper = 0.0;
    for (std::size_t i = 0; i + 1 <= offdiag.size(); ++i) {
        const double left = i > 0 ? std::abs(offdiag[i - 1]) : 0.0;
        const double right = std::abs(offdiag[i]);
        upper = std::max(upper, left + right);
    }
    upper = std::max(upper, bmax) * (1.0 + 1e-12);
    const double pivmin = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();

    const std::size_t total = 2 * n;
    std::vector<double> sigma(n);
    for (std::size_t i = 0; i < n; ++i) {
        // sigma_i (descending) is eigenvalue number total-1-i counted from below.
        const std::size_t want = total - 1 - i;  // need count_below(x) > want to be above it
        double lo = 0.0, hi = upper;
        while (hi - lo > 1e-15 * upper) {
            const double mid = 0.5 * (lo + hi);
            if (gk_count_below(offdiag, mid, pivmin) > want) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        sigma[i] = 0.5 * (lo + hi);
    }
    return sigma;
}

}  // namespace detail

// Singular values of an n x k matrix, descending. GramEigen forms the small
// Gram matrix and takes sqrt of its Jacobi eigenvalues (negatives from
// round-off clamp to zero). Bidiagonal is an independent cross-check path:
// Householder bidiagonalization followed by Sturm bisection.
inline SingularSpectrum singular_values(const Matrix& m, SvdMethod method = SvdMethod::GramEigen) {
    if (m.rows() == 0 || m.cols() == 0) throw InvalidInput("empty matrix");
    if (!m.all_finite()) throw InvalidInput("non-finite entry");

    if (method == SvdMethod::GramEigen) {
        const Matrix gram = small_gram(m);
        auto eig = symmetric_eigenvalues(gram);
        // Eigenvalues at the solver's round-off floor are noise around zero;
        // sqrt would inflate them to ~1e-7-level singular values.
        const double floor = 1e-13 * gram.frobenius_norm();
        SingularSpectrum spec;
        spec.method = SvdMethod::GramEigen;
        spec.values.reserve(eig.size());
        for (double l : eig) spec.values.push_back(l <= floor ? 0.0 : std::sqrt(l));
        return spec;
    }

    std::vector<double> diag, super;
    if (m.rows() >= m.cols()) {
        detail::bidiagonalize(m, diag, super);
    } else {
        detail::bidiagonalize(m.transposed(), diag, super);
    }
    SingularSpectrum spec;
    spec.method = SvdMethod::Bidiagonal;
    spec.values = detail::bidiagonal_singular_values(diag, super);
    std::sort(spec.values.begin(), spec.values.end(), std::greater<>());
    return spec;
}

}  // namespace predkit
