#pragma once

// Symmetric tridiagonal eigen-tools: Sturm-sequence bisection for the k
// smallest eigenvalues, inverse iteration for a single eigenvector, and a
// full QL eigendecomposition (used for small matrix exponentials).  All
// results carry certified residuals; failures raise numeric errors with
// iteration diagnostics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "common.hpp"

namespace qsmc {

struct SymTridiag {
    Vec diag;  // n entries
    Vec off;   // n-1 entries; off[i] couples i and i+1

    std::size_t size() const { return diag.size(); }

    Vec apply(const Vec& f) const {
        const std::size_t n = size();
        Vec out(n);
        for (std::size_t i = 0; i < n; ++i) {
            double v = diag[i] * f[i];
            if (i > 0) v += off[i - 1] * f[i - 1];
            if (i + 1 < n) v += off[i] * f[i + 1];
            out[i] = v;
        }
        return out;
    }
};

namespace detail {

// Number of eigenvalues of T strictly below x (Sturm count via the LDL^T
// pivot recurrence).  A zero pivot means x is an eigenvalue of a leading
// minor; it was not counted (strictly-below semantics), so it must be
// nudged to 0+ — the next pivot then picks up the -infinity and keeps the
// count consistent.
inline std::size_t sturm_count_below(const SymTridiag& T, double x) {
    const std::size_t n = T.size();
    std::size_t count = 0;
    double d = T.diag[0] - x;
    if (d < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        if (d == 0.0) d = std::numeric_limits<double>::min();
        d = T.diag[i] - x - T.off[i - 1] * T.off[i - 1] / d;
        if (d < 0.0) ++count;
    }
    return count;
}

inline double gershgorin_lo(const SymTridiag& T) {
    double lo = std::numeric_limits<double>::infinity();
    const std::size_t n = T.size();
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::fabs(T.off[i - 1]);
        if (i + 1 < n) r += std::fabs(T.off[i]);
        lo = std::min(lo, T.diag[i] - r);
    }
    return lo;
}

inline double gershgorin_hi(const SymTridiag& T) {
    double hi = -std::numeric_limits<double>::infinity();
    const std::size_t n = T.size();
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::fabs(T.off[i - 1]);
        if (i + 1 < n) r += std::fabs(T.off[i]);
        hi = std::max(hi, T.diag[i] + r);
    }
    return hi;
}

// Solve (T - shift I) u = b in place by the Thomas algorithm.
inline void shifted_solve(const SymTridiag& T, double shift, Vec& b) {
    const std::size_t n = T.size();
    Vec c(n);  // modified super-diagonal
    double piv = T.diag[0] - shift;
    if (piv == 0.0) piv = std::numeric_limits<double>::min();
    c[0] = (n > 1 ? T.off[0] : 0.0) / piv;
    b[0] /= piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = T.diag[i] - shift - T.off[i - 1] * c[i - 1];
        if (piv == 0.0) piv = std::numeric_limits<double>::min();
        c[i] = (i + 1 < n ? T.off[i] : 0.0) / piv;
        b[i] = (b[i] - T.off[i - 1] * b[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) b[i] -= c[i] * b[i + 1];
}

}  // namespace detail

// The k smallest eigenvalues, ascending, by bisection on Sturm counts.
// Each eigenvalue is bracketed to ~1e-14 of the spectral scale.
inline Vec low_eigenvalues(const SymTridiag& T, std::size_t k) {
    const std::size_t n = T.size();
    if (n == 0) throw contract_violation("low_eigenvalues: empty matrix");
    if (k > n) throw contract_violation("low_eigenvalues: k exceeds matrix order");

    const double glo = detail::gershgorin_lo(T), ghi = detail::gershgorin_hi(T);
    const double scale = std::max({std::fabs(glo), std::fabs(ghi), 1.0});
    const double tol = 1e-14 * scale;

    Vec out(k);
    for (std::size_t j = 0; j < k; ++j) {
        double lo = glo, hi = ghi;
        int iters = 0;
        while (hi - lo > tol) {
            if (++iters > 200)
                throw numeric_error("low_eigenvalues: bisection stalled after 200 iterations "
                                    "(interval [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "] for eigenvalue " +
                                    std::to_string(j) + ")");
            const double mid = 0.5 * (lo + hi);
            if (detail::sturm_count_below(T, mid) >= j + 1)
                hi = mid;
            else
                lo = mid;
        }
        out[j] = 0.5 * (lo + hi);
    }
    return out;
}

// Eigenvector for an isolated eigenvalue estimate by inverse iteration,
// normalized to unit Euclidean norm with nonnegative sum (the ground state
// of the discretized generators is positive).  The residual ||Tv - lambda v||
// is certified below 1e-10 * spectral scale.
inline Vec eigenvector_for(const SymTridiag& T, double lambda) {
    const std::size_t n = T.size();
    const double scale =
        std::max({std::fabs(detail::gershgorin_lo(T)), std::fabs(detail::gershgorin_hi(T)), 1.0});
    // Tiny off-eigenvalue shift keeps the solve nonsingular while preserving
    // the dominant direction.
    const double shift = lambda + 1e-12 * scale;

    Vec v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double residual = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 50; ++pass) {
        detail::shifted_solve(T, shift, v);
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw numeric_error("eigenvector_for: inverse iteration produced a degenerate "
                                "vector at pass " + std::to_string(pass));
        for (double& x : v) x /= norm;

        const Vec Tv = T.apply(v);
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = Tv[i] - lambda * v[i];
            residual += r * r;
        }
        residual = std::sqrt(residual);
        if (residual <= 1e-10 * scale) break;
    }
    if (residual > 1e-10 * scale)
        throw numeric_error("eigenvector_for: residual " + std::to_string(residual) +
                            " above certification threshold after 50 inverse-iteration passes");
    double s = 0.0;
    for (double x : v) s += x;
    if (s < 0.0)
        for (double& x : v) x = -x;
    return v;
}

struct EigenSystem {
    Vec values;                    // ascending
    std::vector<Vec> vectors;      // vectors[j] is the eigenvector of values[j]
};

// Full eigendecomposition by the implicit QL method with Wilkinson shifts
// (the classical tql2 algorithm).  Intended for moderate n (matrix
// exponentials in tests); cost O(n^3) for the vector accumulation.
inline EigenSystem full_eigensystem(const SymTridiag& T) {
    const std::size_t n = T.size();
    if (n == 0) throw contract_violation("full_eigensystem: empty matrix");
    Vec d = T.diag;
    Vec e(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = T.off[i];

    // z[i][j]: component i of eigenvector j; starts as the identity.
    std::vector<Vec> z(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) z[i][i] = 1.0;

    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == 60)
                    throw numeric_error("full_eigensystem: QL sweep failed to deflate "
                                        "eigenvalue " + std::to_string(l) +
                                        " after 60 iterations");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool split = false;
                for (std::size_t i = m; i-- > l;) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {  // recover from underflow: split the matrix
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        split = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (std::size_t row = 0; row < n; ++row) {
                        f = z[row][i + 1];
                        z[row][i + 1] = s * z[row][i] + c * f;
                        z[row][i] = c * z[row][i] - s * f;
                    }
                }
                if (split) continue;  // re-scan for the new split point
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    // Sort ascending, carrying the vectors along.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    EigenSystem sys;
    sys.values.resize(n);
    sys.vectors.assign(n, Vec(n));
    for (std::size_t j = 0; j < n; ++j) {
        sys.values[j] = d[order[j]];
        for (std::size_t i = 0; i < n; ++i) sys.vectors[j][i] = z[i][order[j]];
    }
    return sys;
}

}  // namespace qsmc
