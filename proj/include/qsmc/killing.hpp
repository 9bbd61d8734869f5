#pragma once

// Killing along discretized paths.  The killing time is
//   tau_d = inf{ t >= 0 : int_0^t kappa(X_s) ds > xi },  xi ~ Exp(1),
// with xi independent of the path.  We accumulate the cumulative hazard by
// the trapezoidal rule on the step grid and detect the first crossing; the
// crossing time within the step is located by linear interpolation of the
// hazard.  xi is drawn once per replica from a stream derived from the
// replica's stream under a distinct purpose tag, so the threshold is
// independent of the driving noise yet reproducible from (seed, substream)
// alone — in particular it does not move when the rate function changes.

#include <cmath>
#include <functional>
#include <optional>

#include "common.hpp"
#include "dynamics.hpp"
#include "rng.hpp"

namespace qsmc {

using RateFn = std::function<double(const Vec&)>;

struct KilledTrajectory {
    PathGrid path;              // truncated at the step where death occurred
    bool killed = false;
    std::optional<double> tau;  // killing time, present iff killed
    Vec hazard_trace;           // cumulative hazard at each retained grid time
    double xi = 0.0;            // the exponential threshold drawn
};

namespace detail {

// Hazard rates may round a hair below zero near the minimizer of
// kappa_tilde + K; values this small are quadrature noise, anything larger
// is a genuine contract breach.
constexpr double kNegativeRateSlack = 1e-12;

inline double checked_rate(double k, const Vec& state) {
    if (!std::isfinite(k))
        throw evaluation_error("killing: non-finite rate at " + format_point(state));
    if (k < 0.0) {
        if (k < -kNegativeRateSlack)
            throw contract_violation("killing: negative rate kappa = " + std::to_string(k) +
                                     " at " + format_point(state));
        k = 0.0;
    }
    return k;
}

}  // namespace detail

// Cumulative hazard along a path by the trapezoidal rule:
// H_0 = 0, H_{i+1} = H_i + (kappa(x_i) + kappa(x_{i+1}))/2 * (t_{i+1}-t_i).
inline Vec accumulate_hazard(const PathGrid& path, const RateFn& kappa) {
    if (path.times.empty()) throw contract_violation("accumulate_hazard: empty path");
    Vec H(path.times.size());
    H[0] = 0.0;
    double prev = detail::checked_rate(kappa(path.states[0]), path.states[0]);
    for (std::size_t i = 1; i < path.times.size(); ++i) {
        const double cur = detail::checked_rate(kappa(path.states[i]), path.states[i]);
        H[i] = H[i - 1] + 0.5 * (prev + cur) * (path.times[i] - path.times[i - 1]);
        prev = cur;
    }
    return H;
}

// Step the diffusion and kill it at the first hazard crossing of an
// Exp(1) threshold.  Path noise comes from `rng`; the threshold comes from
// the derived kill stream.
inline KilledTrajectory simulate_killed(const DriftFn& drift_at, const RateFn& kappa,
                                        const Vec& x0, double horizon,
                                        const SchemeConfig& cfg, RngStream& rng) {
    const detail::StepSchedule sched = detail::make_schedule(horizon, cfg.dt);
    detail::check_exact_scheme(drift_at, x0, cfg);

    KilledTrajectory out;
    RngStream kill_stream = rng.derived(stream_purpose::kill);
    out.xi = kill_stream.exponential(1.0);

    out.path.times.push_back(0.0);
    out.path.states.push_back(x0);
    out.hazard_trace.push_back(0.0);

    Vec x = x0, noise(x0.size());
    double H = 0.0;
    double prev_rate = detail::checked_rate(kappa(x0), x0);
    for (long long i = 0; i < sched.n_steps; ++i) {
        const double step = sched.step_len(i);
        detail::advance(drift_at, x, step, cfg, rng, noise);
        if (!all_finite(x))
            throw evaluation_error("simulate_killed: state diverged at t = " +
                                   std::to_string(sched.time_at(i + 1)));
        const double rate = detail::checked_rate(kappa(x), x);
        const double H_next = H + 0.5 * (prev_rate + rate) * step;

        out.path.times.push_back(sched.time_at(i + 1));
        out.path.states.push_back(x);
        out.hazard_trace.push_back(H_next);

        if (H_next >= out.xi) {
            // H < xi <= H_next: the crossing lies inside this step; place
            // tau where the linear hazard reaches xi.
            out.killed = true;
            out.tau = sched.time_at(i) + (out.xi - H) / (H_next - H) * step;
            return out;
        }
        H = H_next;
        prev_rate = rate;
    }
    return out;  // survived to the horizon: hazard_trace.back() < xi
}

// Exact Exp(c) draw; distributional oracle for constant-rate killing.
inline double killing_time_oracle_constant(double c, RngStream& rng) {
    if (!(c > 0.0)) throw parameter_error("killing_time_oracle_constant: rate must be > 0");
    return rng.exponential(c);
}

}  // namespace qsmc
