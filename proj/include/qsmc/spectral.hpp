#pragma once

// Spectral verification tools.
//
// Closed forms for the 1-d OU example (target N(mu, sigma2) under an OU
// drift toward nu with stationary variance tau2 > sigma2): the shift K and
// minimizer of kappa_tilde, the Q-process Gaussian, and the spectrum
// lambda_n = n (2 tau2 - sigma2)/(2 sigma2 tau2) of the conditioned
// generator.
//
// Independent numerical oracle: a conservative (flux-form) finite-difference
// discretization of L^kappa f = -(1/(2 gamma)) (gamma f')' + kappa f on a
// truncated interval with Dirichlet ends.  The flux form keeps the discrete
// operator exactly symmetric in the Gamma-weighted inner product
// <f,g> = sum f_i g_i gamma_i h, so a similarity transform by
// D = diag(sqrt(gamma_i)) yields a symmetric tridiagonal matrix and real
// spectra.  The same stencil with weight pi^2/gamma and no killing
// discretizes the Langevin (Q-process) generator, letting the
// spectrum-translation claim be checked numerically.
//
// Weight ratios are formed in log space (gamma = exp(2A) underflows in the
// far tails long before the ratios gamma_{i+1/2}/gamma_i lose accuracy).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "common.hpp"
#include "csv.hpp"
#include "model.hpp"
#include "tridiag.hpp"

namespace qsmc {

// --- OU example closed forms ------------------------------------------------

struct OUParams {
    double nu = 0.0;
    double tau2 = 1.0;
    double mu = 0.0;
    double sigma2 = 0.5;

    void validate() const {
        if (!(tau2 > 0.0) || !(sigma2 > 0.0))
            throw parameter_error("OU example: tau2 and sigma2 must be > 0");
        if (!(tau2 > sigma2))
            throw parameter_error(
                "OU example requires tau2 > sigma2: the diffusion's stationary tails "
                "must be heavier than the target's, otherwise kappa_tilde is unbounded below");
    }
};

struct OUKillingConstants {
    double K = 0.0;             // -inf kappa_tilde = lambda_0 of the killed generator
    double y_star = 0.0;        // argmin of kappa_tilde
    double leading_coeff = 0.0; // kappa(y) = leading_coeff * (y - y_star)^2
};

inline OUKillingConstants ou_killing_constants(const OUParams& p) {
    p.validate();
    OUKillingConstants c;
    const double diff = p.tau2 - p.sigma2;
    c.K = (p.mu - p.nu) * (p.mu - p.nu) / (8.0 * p.tau2 * diff) +
          diff / (2.0 * p.tau2 * p.sigma2);
    c.leading_coeff = diff / (2.0 * p.tau2 * p.sigma2 * p.sigma2);
    const double mid = 0.5 * (p.mu + p.nu);
    c.y_star = mid + (p.tau2 / diff) * (p.mu - mid);
    return c;
}

struct Gaussian1D {
    double mean = 0.0;
    double variance = 1.0;

    double cdf(double x) const {
        return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
    }
    double log_density(double x) const {  // normalized
        const double two_pi = 6.283185307179586;
        const double z = x - mean;
        return -0.5 * std::log(two_pi * variance) - z * z / (2.0 * variance);
    }
};

// Stationary law of the Langevin diffusion targeting pi^2/gamma, which is
// also the law of the killed process conditioned to survive forever.
inline Gaussian1D ou_qprocess(const OUParams& p) {
    p.validate();
    Gaussian1D g;
    g.mean = (2.0 * p.mu * p.tau2 - p.nu * p.sigma2) / (2.0 * p.tau2 - p.sigma2);
    g.variance = p.sigma2 * p.tau2 / (2.0 * p.tau2 - p.sigma2);
    return g;
}

struct OUSpectrum {
    Vec lambda;        // lambda_n, n = 0..n_max (lambda_0 = 0)
    double gap = 0.0;  // lambda_1 - lambda_0 = 1/sigma2 - 1/(2 tau2)
};

inline OUSpectrum ou_spectrum(const OUParams& p, int n_max) {
    p.validate();
    if (n_max < 0) throw parameter_error("ou_spectrum: n_max must be >= 0");
    OUSpectrum s;
    const double step = (2.0 * p.tau2 - p.sigma2) / (2.0 * p.sigma2 * p.tau2);
    s.lambda.resize(n_max + 1);
    for (int n = 0; n <= n_max; ++n) s.lambda[n] = static_cast<double>(n) * step;
    s.gap = step;
    return s;
}

// --- Discretized generator ---------------------------------------------------

// n interior nodes on (lo, hi): x_i = lo + (i+1) h with h = (hi-lo)/(n+1);
// the Dirichlet boundary points lo and hi are NOT nodes.
struct GridSpec {
    double lo = -10.0;
    double hi = 10.0;
    int n = 1000;

    void validate() const {
        if (!(lo < hi)) throw configuration_error("grid: lo must be < hi");
        if (n < 3) throw configuration_error("grid: need at least 3 interior nodes");
    }
    double h() const { return (hi - lo) / static_cast<double>(n + 1); }
    double node(int i) const { return lo + static_cast<double>(i + 1) * h(); }
};

struct GeneratorMatrix {
    GridSpec grid;
    SymTridiag sym;     // similarity-transformed (symmetric) form
    Vec a_plus, a_minus;  // flux coefficients w_{i+1/2}/(2 w_i h^2), w_{i-1/2}/(2 w_i h^2)
    Vec log_weight;     // log of the reversing weight at the nodes
    Vec kappa_values;   // killing rate at the nodes
    Vec gamma_weights;  // exp(log_weight); may underflow to 0 in far tails
    std::vector<std::string> warnings;

    // Apply the operator in the function basis:
    // (Lf)_i = -[a_plus_i (f_{i+1}-f_i) - a_minus_i (f_i-f_{i-1})] + kappa_i f_i
    // with Dirichlet ghosts f_{-1} = f_n = 0.
    Vec apply(const Vec& f) const {
        const std::size_t n = a_plus.size();
        Vec out(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double up = i + 1 < n ? f[i + 1] - f[i] : -f[i];
            const double dn = i > 0 ? f[i] - f[i - 1] : f[i];
            out[i] = -(a_plus[i] * up - a_minus[i] * dn) + kappa_values[i] * f[i];
        }
        return out;
    }
};

namespace detail {

// Core stencil builder for a weight w = exp(log_w): flux (conservative)
// form with midpoint weights, then the D^{1/2} similarity transform.
inline GeneratorMatrix build_weighted_generator(const std::function<double(double)>& log_w,
                                                const std::function<double(double)>& kappa1,
                                                const GridSpec& grid) {
    grid.validate();
    const int n = grid.n;
    const double h = grid.h();
    const double inv2h2 = 1.0 / (2.0 * h * h);

    Vec lw(n), lwm(n + 1);  // lwm[j] = log_w at the midpoint below node j
    for (int i = 0; i < n; ++i) lw[i] = log_w(grid.node(i));
    for (int j = 0; j <= n; ++j)
        lwm[j] = log_w(grid.lo + (static_cast<double>(j) + 0.5) * h);

    GeneratorMatrix m;
    m.grid = grid;
    m.a_plus.resize(n);
    m.a_minus.resize(n);
    m.kappa_values.resize(n);
    m.log_weight = lw;
    m.gamma_weights.resize(n);
    m.sym.diag.resize(n);
    m.sym.off.resize(n - 1);

    for (int i = 0; i < n; ++i) {
        m.a_minus[i] = std::exp(lwm[i] - lw[i]) * inv2h2;
        m.a_plus[i] = std::exp(lwm[i + 1] - lw[i]) * inv2h2;
        m.kappa_values[i] = kappa1(grid.node(i));
        m.gamma_weights[i] = std::exp(lw[i]);
        m.sym.diag[i] = m.a_plus[i] + m.a_minus[i] + m.kappa_values[i];
        if (!std::isfinite(m.sym.diag[i]))
            throw numeric_error("discretize: non-finite stencil entry at y = " +
                                std::to_string(grid.node(i)));
    }
    for (int i = 0; i + 1 < n; ++i) {
        // gamma_{i+1/2} / (2 h^2 sqrt(gamma_i gamma_{i+1})), in log space
        m.sym.off[i] = -std::exp(lwm[i + 1] - 0.5 * (lw[i] + lw[i + 1])) * inv2h2;
        if (!std::isfinite(m.sym.off[i]))
            throw numeric_error("discretize: non-finite coupling at y = " +
                                std::to_string(grid.node(i)));
    }
    return m;
}

// Warn when a profile fails to decay by `threshold` at the boundary points
// relative to its max over the nodes (domain truncation would then bite).
inline void check_boundary_decay(GeneratorMatrix& m, const std::function<double(double)>& log_f,
                                 double threshold, const char* what) {
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m.grid.n; ++i) peak = std::max(peak, log_f(m.grid.node(i)));
    const double edge = std::max(log_f(m.grid.lo), log_f(m.grid.hi));
    if (edge > peak + std::log(threshold))
        m.warnings.push_back(std::string("grid too narrow: ") + what +
                             " at a boundary exceeds " + csv_num(threshold) +
                             " of its max; widen [lo, hi]");
}

}  // namespace detail

// Discretized killed generator L^kappa = -(1/(2 gamma)) d/dy (gamma d/dy) + kappa
// with gamma = exp(2A) and kappa from the killing spec.
inline GeneratorMatrix discretize_generator(const TargetSpec& target, const DriftSpec& drift,
                                            const KillingSpec& killing, const GridSpec& grid) {
    if (target.log_density.dim != 1 || drift.potential.dim != 1)
        throw configuration_error("discretize_generator: spectral oracle is 1-d only");
    const auto U = target.log_density.eval;
    const auto A = drift.potential.eval;
    const auto kap = killing.kappa;
    GeneratorMatrix m = detail::build_weighted_generator(
        [A](double y) { return 2.0 * A(Vec{y}); },
        [kap](double y) { return kap(Vec{y}); }, grid);
    // phi = exp(U - 2A) is the ground eigenfunction; it must have decayed at
    // the Dirichlet ends or the low eigenvalues feel the truncation.
    detail::check_boundary_decay(
        m, [U, A](double y) { return U(Vec{y}) - 2.0 * A(Vec{y}); }, 1e-6,
        "ground eigenfunction phi = exp(U-2A)");
    return m;
}

// Discretized Langevin generator of the Q-process: same flux stencil with
// reversing weight pi^2/gamma = exp(2U - 2A) and no killing.  Its spectrum
// should equal that of the kappa_tilde-killed generator (Theorem-2
// translation, checked in tests).
inline GeneratorMatrix discretize_langevin_generator(const TargetSpec& target,
                                                     const DriftSpec& drift,
                                                     const GridSpec& grid) {
    if (target.log_density.dim != 1 || drift.potential.dim != 1)
        throw configuration_error("discretize_langevin_generator: 1-d only");
    const auto U = target.log_density.eval;
    const auto A = drift.potential.eval;
    const auto logw = [U, A](double y) { return 2.0 * (U(Vec{y}) - A(Vec{y})); };
    GeneratorMatrix m = detail::build_weighted_generator(
        logw, [](double) { return 0.0; }, grid);
    detail::check_boundary_decay(m, logw, 1e-6, "reversing density pi^2/gamma");
    return m;
}

inline Vec low_eigenvalues(const GeneratorMatrix& m, std::size_t k) {
    return low_eigenvalues(m.sym, k);
}

// Ground eigenvector in the function basis, positive, unit Gamma-norm
// (sum f_i^2 gamma_i h = 1).  Since the symmetric-basis vector v = D^{1/2} f
// has unit Euclidean norm, f_i = v_i exp(-log_weight_i / 2) / sqrt(h).
inline Vec ground_eigenvector(const GeneratorMatrix& m) {
    const Vec evals = low_eigenvalues(m.sym, 1);
    Vec v = eigenvector_for(m.sym, evals[0]);
    const double root_h = std::sqrt(m.grid.h());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = v[i] * std::exp(-0.5 * m.log_weight[i]) / root_h;
        if (!std::isfinite(v[i]))
            throw numeric_error("ground_eigenvector: weight underflow at node " +
                                std::to_string(i) + "; narrow the grid");
    }
    return v;
}

// Max relative residual of the discrete eigenfunction relation
// L^kappa phi = K phi with phi = exp(U - 2A) evaluated on the grid,
// excluding `boundary_layers` nodes at each end (where the Dirichlet
// truncation perturbs the stencil).
inline double eigenfunction_residual(const TargetSpec& target, const DriftSpec& drift,
                                     const KillingSpec& killing, const GridSpec& grid,
                                     int boundary_layers = 5) {
    GeneratorMatrix m = discretize_generator(target, drift, killing, grid);
    const int n = grid.n;
    if (n <= 2 * boundary_layers)
        throw configuration_error("eigenfunction_residual: grid too small for the "
                                  "requested boundary exclusion");
    const auto U = target.log_density.eval;
    const auto A = drift.potential.eval;

    Vec log_phi(n);
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double y = grid.node(i);
        log_phi[i] = U(Vec{y}) - 2.0 * A(Vec{y});
        peak = std::max(peak, log_phi[i]);
    }
    Vec phi(n);
    for (int i = 0; i < n; ++i) phi[i] = std::exp(log_phi[i] - peak);  // max = 1

    const Vec Lphi = m.apply(phi);
    const double K = killing.shift_K;
    double worst = 0.0;
    for (int i = boundary_layers; i < n - boundary_layers; ++i)
        worst = std::max(worst, std::fabs(Lphi[i] - K * phi[i]));
    return worst;  // relative: max |phi| is exactly 1
}

// e^{-t L} f via the full eigendecomposition of the symmetric form:
// f -> D^{-1/2} Q e^{-t Lambda} Q^T D^{1/2} f.  O(n^3); intended for
// moderate grids (semigroup identity checks).
inline Vec semigroup_apply(const GeneratorMatrix& m, const Vec& f, double t) {
    if (f.size() != m.sym.size())
        throw contract_violation("semigroup_apply: vector/grid size mismatch");
    const EigenSystem sys = full_eigensystem(m.sym);
    const std::size_t n = f.size();
    Vec u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = f[i] * std::exp(0.5 * m.log_weight[i]);
    Vec out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double coef = 0.0;
        for (std::size_t i = 0; i < n; ++i) coef += sys.vectors[j][i] * u[i];
        coef *= std::exp(-t * sys.values[j]);
        for (std::size_t i = 0; i < n; ++i) out[i] += coef * sys.vectors[j][i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] *= std::exp(-0.5 * m.log_weight[i]);
    return out;
}

// Theorem-2 style convergence bound: returns C' e^{-t gap} with
//   C' = 2 (int psi^2 dGamma)^{1/2} Gamma(R)^{1/2} / (int psi pi dx * int pi dx),
// where pi is internally rescaled so its ground eigenfunction phi = pi/gamma
// has unit Gamma-norm (the scale the bound's derivation fixes; psi's own
// scale is pinned by the unit-Gamma-integral requirement).  All integrals
// are grid quadrature on the given spec.
inline double qsd_error_bound(const Vec& psi, const TargetSpec& target, const DriftSpec& drift,
                              const GridSpec& grid, double gap, double t) {
    grid.validate();
    if (static_cast<int>(psi.size()) != grid.n)
        throw contract_violation("qsd_error_bound: psi must be sampled on the grid nodes");
    if (!(gap > 0.0)) throw parameter_error("qsd_error_bound: gap must be > 0");
    if (t < 0.0) throw parameter_error("qsd_error_bound: t must be >= 0");
    const auto U = target.log_density.eval;
    const auto A = drift.potential.eval;
    const int n = grid.n;
    const double h = grid.h();

    Vec lw(n), lu(n);
    double lw_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double y = grid.node(i);
        lw[i] = 2.0 * A(Vec{y});
        lu[i] = U(Vec{y});
        lw_max = std::max(lw_max, lw[i]);
    }
    // The bound needs Gamma(R) < infinity; on a truncated grid the usable
    // signal is boundary decay of gamma.  No decay means the mass keeps
    // growing with the box.
    const double lw_edge = std::max(2.0 * A(Vec{grid.lo}), 2.0 * A(Vec{grid.hi}));
    if (lw_edge > lw_max + std::log(1e-8))
        throw inapplicability_error(
            "qsd_error_bound: gamma = exp(2A) does not decay at the grid boundary, so "
            "Gamma(R) appears divergent and the measure-level bound does not apply");

    double psi_mass = 0.0, psi2 = 0.0, gamma_mass = 0.0;
    for (int i = 0; i < n; ++i) {
        if (psi[i] < -1e-12)
            throw contract_violation("qsd_error_bound: psi must be nonnegative");
        const double g = std::exp(lw[i]);
        gamma_mass += g * h;
        psi_mass += psi[i] * g * h;
        psi2 += psi[i] * psi[i] * g * h;
    }
    if (std::fabs(psi_mass - 1.0) > 1e-6)
        throw contract_violation("qsd_error_bound: psi must have unit Gamma-integral on the "
                                 "grid (got " + csv_num(psi_mass) + ")");

    // Rescale pi so that ||phi||_Gamma = 1 with phi = pi/gamma.
    double c_phi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) c_phi = std::max(c_phi, 2.0 * lu[i] - lw[i]);
    double phi2 = 0.0;
    for (int i = 0; i < n; ++i) phi2 += std::exp(2.0 * lu[i] - lw[i] - c_phi) * h;
    const double log_phi_norm = 0.5 * (c_phi + std::log(phi2));  // log ||pi/gamma||_Gamma

    double pi_mass = 0.0, psi_pi = 0.0;
    for (int i = 0; i < n; ++i) {
        const double pi_hat = std::exp(lu[i] - log_phi_norm);
        pi_mass += pi_hat * h;
        psi_pi += psi[i] * pi_hat * h;
    }

    const double c_prime = 2.0 * std::sqrt(psi2) * std::sqrt(gamma_mass) / (psi_pi * pi_mass);
    if (!std::isfinite(c_prime))
        throw numeric_error("qsd_error_bound: non-finite constant (degenerate psi or grid)");
    return c_prime * std::exp(-t * gap);
}

// spectrum.csv: index, numeric eigenvalue, analytic eigenvalue (blank when
// unknown), absolute error.
inline void write_spectrum_csv(const std::string& path, const Vec& numeric,
                               const Vec& analytic /* empty = none */) {
    auto out = open_csv(path);
    out << "index,numeric_eigenvalue,analytic_eigenvalue_if_known,abs_error\n";
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        out << i << ',' << csv_num(numeric[i]) << ',';
        if (i < analytic.size())
            out << csv_num(analytic[i]) << ',' << csv_num(std::fabs(numeric[i] - analytic[i]));
        else
            out << ',';
        out << '\n';
    }
}

}  // namespace qsmc
