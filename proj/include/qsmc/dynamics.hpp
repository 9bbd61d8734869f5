#pragma once

// Time stepping for the unkilled diffusion dX_t = grad A(X_t) dt + dW_t:
// Euler-Maruyama for arbitrary gradient drifts, exact transitions for the
// Brownian (A == 0) and 1-d Ornstein-Uhlenbeck special cases (used as
// simulation oracles), and the drift of the Langevin diffusion whose
// stationary density is pi^2/gamma (the Q-process of the killed diffusion).

#include <cmath>
#include <functional>

#include "common.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace qsmc {

using DriftFn = std::function<Vec(const Vec&)>;

struct PathGrid {
    Vec times;                // strictly increasing, starting at 0
    std::vector<Vec> states;  // one point per time
};

enum class Scheme { euler, exact_ou, exact_bm };

struct SchemeConfig {
    double dt = 0.01;
    Scheme scheme = Scheme::euler;
    // Transition parameters for scheme exact_ou; the supplied drift must be
    // consistent with them (checked at simulation start).
    double ou_nu = 0.0;
    double ou_tau2 = 1.0;
};

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::euler: return "euler";
        case Scheme::exact_ou: return "exact_ou";
        case Scheme::exact_bm: return "exact_bm";
    }
    return "?";
}

// One Euler-Maruyama step: x + drift(x) dt + sqrt(dt) z.
inline Vec euler_step(const DriftFn& drift_at, const Vec& x, double dt, const Vec& noise) {
    if (!(dt > 0.0)) throw parameter_error("euler_step: dt must be > 0");
    Vec b = drift_at(x);
    if (b.size() != x.size())
        throw evaluation_error("euler_step: drift dimension mismatch at " + format_point(x));
    if (!all_finite(b))
        throw evaluation_error("euler_step: non-finite drift at " + format_point(x));
    const double root_dt = std::sqrt(dt);
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + b[i] * dt + root_dt * noise[i];
    return out;
}

// Exact 1-d OU transition for dX_t = (nu - X_t)/(2 tau2) dt + dW_t over a
// step of length dt:  mean nu + (x-nu) e^{-dt/(2 tau2)}, variance
// tau2 (1 - e^{-dt/tau2}).  Exact in distribution for any dt >= 0.
inline double ou_exact_step(double nu, double tau2, double x, double dt, double noise) {
    if (!(tau2 > 0.0)) throw parameter_error("ou_exact_step: tau2 must be > 0");
    if (dt < 0.0) throw parameter_error("ou_exact_step: dt must be >= 0");
    const double decay = std::exp(-dt / (2.0 * tau2));
    const double sd = std::sqrt(tau2 * (1.0 - std::exp(-dt / tau2)));
    return nu + (x - nu) * decay + noise * sd;
}

// Drift of the Langevin diffusion with stationary density pi^2/gamma:
// (1/2) grad log(pi^2/gamma) = grad U - grad A.  This diffusion is the
// Q-process of the killed dynamics (the process conditioned to survive
// forever).
inline DriftFn langevin_drift(const TargetSpec& target, const DriftSpec& drift) {
    const ScalarField U = target.log_density;
    const ScalarField A = drift.potential;
    return [U, A](const Vec& y) {
        Vec gU = detail::grad_checked(U, y, "target log-density");
        Vec gA = detail::grad_checked(A, y, "drift potential");
        for (std::size_t i = 0; i < gU.size(); ++i) gU[i] -= gA[i];
        return gU;
    };
}

namespace detail {

// Uniform step schedule covering (0, horizon]: n_steps steps of dt with the
// last one truncated so the grid lands exactly on the horizon.
struct StepSchedule {
    long long n_steps;
    double dt;
    double horizon;

    double time_at(long long i) const {  // grid time after i steps
        return i == n_steps ? horizon : static_cast<double>(i) * dt;
    }
    double step_len(long long i) const {  // length of step i (0-based)
        return time_at(i + 1) - time_at(i);
    }
};

inline StepSchedule make_schedule(double horizon, double dt) {
    if (!(horizon > 0.0)) throw parameter_error("simulate: horizon must be > 0");
    if (!(dt > 0.0)) throw parameter_error("simulate: dt must be > 0");
    // Count whole steps of dt strictly inside (0, horizon); a final short
    // step is added unless horizon is a whole multiple of dt (to 1e-9 dt).
    long long whole = static_cast<long long>(std::floor(horizon / dt + 1e-9));
    const double covered = static_cast<double>(whole) * dt;
    StepSchedule s;
    s.dt = dt;
    s.horizon = horizon;
    s.n_steps = (horizon - covered > 1e-9 * dt) ? whole + 1 : whole;
    return s;
}

// Check the supplied drift against the closed-form drift of the exact
// scheme at a couple of probe points; exact transitions silently assume a
// specific generator, and a mismatch would be a silent modelling bug.
inline void check_exact_scheme(const DriftFn& drift_at, const Vec& x0, const SchemeConfig& cfg) {
    if (cfg.scheme == Scheme::euler) return;
    if (x0.size() != 1 && cfg.scheme == Scheme::exact_ou)
        throw configuration_error("simulate: scheme exact_ou requires a 1-d state");
    const Vec probes[2] = {x0, Vec(x0.size(), x0[0] + 1.0)};
    for (const Vec& p : probes) {
        const Vec b = drift_at(p);
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double want = cfg.scheme == Scheme::exact_bm
                                    ? 0.0
                                    : (cfg.ou_nu - p[i]) / (2.0 * cfg.ou_tau2);
            if (std::fabs(b[i] - want) > 1e-8 * (1.0 + std::fabs(want)))
                throw configuration_error(
                    std::string("simulate: drift inconsistent with scheme ") +
                    scheme_name(cfg.scheme) + " at " + format_point(p));
        }
    }
}

// Advance one step under the configured scheme, drawing one standard-normal
// vector from rng (all schemes consume the same number of draws per step).
inline void advance(const DriftFn& drift_at, Vec& x, double step, const SchemeConfig& cfg,
                    RngStream& rng, Vec& noise_buf) {
    for (double& z : noise_buf) z = rng.normal();
    switch (cfg.scheme) {
        case Scheme::euler:
            x = euler_step(drift_at, x, step, noise_buf);
            break;
        case Scheme::exact_bm: {
            const double root = std::sqrt(step);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += root * noise_buf[i];
            break;
        }
        case Scheme::exact_ou:
            x[0] = ou_exact_step(cfg.ou_nu, cfg.ou_tau2, x[0], step, noise_buf[0]);
            break;
    }
}

}  // namespace detail

// Simulate the unkilled diffusion on the grid {0, dt, 2dt, ..., horizon}
// (final step truncated to land exactly on the horizon).  Deterministic
// given the stream state.
inline PathGrid simulate_path(const DriftFn& drift_at, const Vec& x0, double horizon,
                              const SchemeConfig& cfg, RngStream& rng) {
    const detail::StepSchedule sched = detail::make_schedule(horizon, cfg.dt);
    detail::check_exact_scheme(drift_at, x0, cfg);

    PathGrid g;
    g.times.reserve(sched.n_steps + 1);
    g.states.reserve(sched.n_steps + 1);
    g.times.push_back(0.0);
    g.states.push_back(x0);

    Vec x = x0, noise(x0.size());
    for (long long i = 0; i < sched.n_steps; ++i) {
        detail::advance(drift_at, x, sched.step_len(i), cfg, rng, noise);
        if (!all_finite(x))
            throw evaluation_error("simulate_path: state diverged at t = " +
                                   std::to_string(sched.time_at(i + 1)));
        g.times.push_back(sched.time_at(i + 1));
        g.states.push_back(x);
    }
    return g;
}

}  // namespace qsmc
