#pragma once

// Statistical utilities for ensemble output: Kolmogorov-Smirnov distances,
// least-squares exponential-rate fits on log values, moment summaries with
// jackknife standard errors, and Freedman-Diaconis histograms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include "common.hpp"

namespace qsmc {

// One-sample Kolmogorov-Smirnov statistic: sup_x |F_n(x) - F(x)|, evaluated
// at the sorted sample points from both sides of each jump.
inline double ks_statistic(Vec samples, const std::function<double(double)>& reference_cdf) {
    if (samples.empty()) throw contract_violation("ks_statistic: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = reference_cdf(samples[i]);
        d = std::max(d, std::fabs(F - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - F));
    }
    return d;
}

// Two-sample Kolmogorov-Smirnov statistic: sup_x |F_a(x) - F_b(x)|.
inline double ks_two_sample(Vec a, Vec b) {
    if (a.empty() || b.empty()) throw contract_violation("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

// Standard-normal and general Gaussian CDFs (reference distributions for the
// KS checks against closed-form quasi-limits).
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double normal_cdf(double x, double mean, double variance) {
    return normal_cdf((x - mean) / std::sqrt(variance));
}

struct RateFit {
    double t_lo = 0.0, t_hi = 0.0;  // fitting window
    double slope = 0.0;             // fitted exponential rate (negative = decay)
    double intercept = 0.0;         // log-value at t = 0 per the fit
    double r_squared = 0.0;
    std::size_t n_points = 0;
};

// Least squares of log(values) on times over [t_lo, t_hi].  The slope is
// the exponential rate of the fitted decay/growth.
inline RateFit fit_exp_rate(const Vec& times, const Vec& values, double t_lo, double t_hi) {
    if (times.size() != values.size())
        throw contract_violation("fit_exp_rate: times/values length mismatch");
    if (!(t_lo < t_hi)) throw window_error("fit_exp_rate: empty window");

    Vec t, ly;
    const double pad = 1e-12 * (1.0 + std::fabs(t_hi));
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_lo - pad || times[i] > t_hi + pad) continue;
        if (!(values[i] > 0.0))
            throw window_error("fit_exp_rate: nonpositive value " + std::to_string(values[i]) +
                               " at t = " + std::to_string(times[i]) + " inside the window");
        t.push_back(times[i]);
        ly.push_back(std::log(values[i]));
    }
    if (t.size() < 3)
        throw window_error("fit_exp_rate: need at least 3 points in the window, have " +
                           std::to_string(t.size()));

    const double n = static_cast<double>(t.size());
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        mt += t[i];
        my += ly[i];
    }
    mt /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double dt = t[i] - mt, dy = ly[i] - my;
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw window_error("fit_exp_rate: degenerate window (all times equal)");

    RateFit fit;
    fit.t_lo = t_lo;
    fit.t_hi = t_hi;
    fit.n_points = t.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mt;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * t[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

struct MomentSummary {
    std::size_t n = 0;
    Vec mean, variance;   // per coordinate; variance is the unbiased estimator
    Vec se_mean, se_var;  // jackknife standard errors (se_var is NaN for n = 2)
};

// Sample mean and unbiased variance per coordinate with jackknife standard
// errors.  `samples` is row-major with `dim` coordinates per observation.
inline MomentSummary summarize_moments(const Vec& samples, int dim) {
    if (dim < 1) throw contract_violation("summarize_moments: dim must be >= 1");
    if (samples.size() % dim != 0)
        throw contract_violation("summarize_moments: sample buffer not a multiple of dim");
    const std::size_t n = samples.size() / dim;
    if (n < 2) throw contract_violation("summarize_moments: need at least 2 observations");

    MomentSummary s;
    s.n = n;
    s.mean.assign(dim, 0.0);
    s.variance.assign(dim, 0.0);
    s.se_mean.assign(dim, 0.0);
    s.se_var.assign(dim, 0.0);
    const double dn = static_cast<double>(n);

    for (int c = 0; c < dim; ++c) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += samples[i * dim + c];
        m /= dn;
        double s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = samples[i * dim + c] - m;
            s2 += d * d;
        }
        s.mean[c] = m;
        s.variance[c] = s2 / (dn - 1.0);
        // Jackknife over leave-one-out replicates, each computable in O(1):
        //   mean_(i) = (n m - x_i)/(n-1)
        //   ss_(i)   = s2 - (x_i - m)^2 n/(n-1)   (sum of squared deviations)
        //   var_(i)  = ss_(i)/(n-2)
        if (n >= 3) {
            double vbar = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = samples[i * dim + c] - m;
                vbar += (s2 - d * d * dn / (dn - 1.0)) / (dn - 2.0);
            }
            vbar /= dn;
            double acc_m = 0.0, acc_v = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = samples[i * dim + c] - m;
                const double mi = (dn * m - samples[i * dim + c]) / (dn - 1.0);
                const double vi = (s2 - d * d * dn / (dn - 1.0)) / (dn - 2.0);
                acc_m += (mi - m) * (mi - m);  // jackknife mean of mean_(i) is m exactly
                acc_v += (vi - vbar) * (vi - vbar);
            }
            s.se_mean[c] = std::sqrt((dn - 1.0) / dn * acc_m);
            s.se_var[c] = std::sqrt((dn - 1.0) / dn * acc_v);
        } else {
            s.se_mean[c] = std::sqrt(s.variance[c] / dn);
            s.se_var[c] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return s;
}

struct Histogram {
    Vec edges;                      // len = counts.len + 1, strictly increasing
    std::vector<std::int64_t> counts;  // last bin is right-inclusive
};

// Freedman-Diaconis histogram (bin width 2 IQR / n^(1/3)); `bins_override`
// > 0 forces a bin count instead.  Degenerate samples get a single bin.
inline Histogram build_histogram(Vec samples, int bins_override = 0) {
    if (samples.empty()) throw contract_violation("build_histogram: empty sample");
    std::sort(samples.begin(), samples.end());
    const double lo = samples.front(), hi = samples.back();
    const std::size_t n = samples.size();

    int bins;
    if (bins_override > 0) {
        bins = bins_override;
    } else if (hi <= lo) {
        bins = 1;
    } else {
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(n - 1);
            const std::size_t i = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(i);
            return i + 1 < n ? samples[i] * (1.0 - frac) + samples[i + 1] * frac : samples[i];
        };
        const double iqr = quantile(0.75) - quantile(0.25);
        const double width = 2.0 * iqr / std::cbrt(static_cast<double>(n));
        bins = width > 0.0 ? static_cast<int>(std::ceil((hi - lo) / width))
                           : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
        bins = std::clamp(bins, 1, 10000);
    }

    Histogram h;
    h.counts.assign(bins, 0);
    h.edges.resize(bins + 1);
    const double span = hi > lo ? hi - lo : 1.0;  // unit-width bin for constant samples
    for (int i = 0; i <= bins; ++i)
        h.edges[i] = lo + span * static_cast<double>(i) / static_cast<double>(bins);
    for (double x : samples) {
        int b = static_cast<int>(static_cast<double>(bins) * (x - lo) / span);
        b = std::clamp(b, 0, bins - 1);  // puts x == hi in the last bin
        ++h.counts[b];
    }
    return h;
}

}  // namespace qsmc
