#pragma once

// Killed-ensemble driver: run N independent replicas of the killed
// diffusion, collect survivor states at checkpoints (naive conditioning:
// killed replicas drop out of every later checkpoint), build the survival
// curve, and emit the CSV artifacts.
//
// Determinism contract: replica i draws from substream i of the configured
// seed, so the full artifact is a pure function of (config, seed) and is
// identical for any worker count or scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "builtin.hpp"
#include "csv.hpp"
#include "dynamics.hpp"
#include "killing.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace qsmc {

struct EnsembleConfig {
    std::int64_t replicas = 0;
    double horizon = 0.0;
    Vec checkpoints;  // increasing, each a grid multiple of dt, <= horizon
    double dt = 0.01;
    std::uint64_t seed = 0;
    Vec x0;  // starting point; ignored when initial_sampler is set
    // Optional draw of X_0 (e.g. the target density for quasi-stationarity
    // runs); receives the replica's init stream.
    std::function<Vec(RngStream&)> initial_sampler;
    std::string initial_sampler_name;  // label for reports ("", "target", ...)
    Scheme scheme = Scheme::euler;
    double ou_nu = 0.0, ou_tau2 = 1.0;  // exact_ou transition parameters
    int workers = 1;
    int histogram_bins = 0;  // 0 = Freedman-Diaconis
};

struct ConditionalLaw {
    double t = 0.0;
    Vec survivor_states;  // row-major, dim coordinates per survivor
    std::int64_t n_survivors = 0;
    int dim = 1;
    bool empty = false;   // no survivors at this checkpoint (run continued)
    Histogram histogram;  // first coordinate

    Vec coordinate(int c) const {
        Vec out(n_survivors);
        for (std::int64_t i = 0; i < n_survivors; ++i)
            out[i] = survivor_states[static_cast<std::size_t>(i) * dim + c];
        return out;
    }
};

struct SurvivalCurve {
    Vec times;
    Vec survival;   // P(tau_d > t), nonincreasing, survival[0] = 1
    Vec std_error;  // binomial standard errors sqrt(p(1-p)/N)
};

struct EnsembleResult {
    std::vector<ConditionalLaw> laws;  // one per checkpoint
    SurvivalCurve survival;
    std::int64_t replicas = 0;
    std::int64_t n_killed = 0;
};

namespace detail {

// Checkpoints must sit on the step grid: conditioning at t is only defined
// where the discrete path has a state.
inline std::vector<long long> checkpoint_steps(const EnsembleConfig& cfg) {
    std::vector<long long> idx;
    double prev = 0.0;
    for (double t : cfg.checkpoints) {
        if (!(t > 0.0) || t > cfg.horizon + 1e-12)
            throw configuration_error("ensemble: checkpoint " + std::to_string(t) +
                                      " outside (0, horizon]");
        if (!idx.empty() && t <= prev)
            throw configuration_error("ensemble: checkpoints must be strictly increasing");
        const double steps = t / cfg.dt;
        const long long j = static_cast<long long>(std::llround(steps));
        if (std::fabs(steps - static_cast<double>(j)) > 1e-9)
            throw configuration_error("ensemble: checkpoint " + std::to_string(t) +
                                      " is not a multiple of dt");
        idx.push_back(j);
        prev = t;
    }
    return idx;
}

// Per-replica record: killing time (+inf if the replica survived) followed
// by the state at each checkpoint (NaN columns once dead).
struct ReplicaTable {
    std::size_t stride;
    Vec data;

    double& tau(std::int64_t i) { return data[i * stride]; }
    double tau(std::int64_t i) const { return data[i * stride]; }
    double* states(std::int64_t i) { return &data[i * stride + 1]; }
    const double* states(std::int64_t i) const { return &data[i * stride + 1]; }
};

// Scalar-path replica loop (d = 1 with scalar fast paths available): avoids
// Vec allocation in the per-step hot path.  kappa1 must already include the
// shift K.
inline void run_replicas_scalar(const std::function<double(double)>& drift1,
                                const std::function<double(double)>& kappa1,
                                const EnsembleConfig& cfg, const StepSchedule& sched,
                                const std::vector<long long>& cp_steps, std::int64_t lo,
                                std::int64_t hi, ReplicaTable& table) {
    const double root_dt = std::sqrt(cfg.dt);
    for (std::int64_t r = lo; r < hi; ++r) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(r), stream_purpose::path);
        RngStream kill = rng.derived(stream_purpose::kill);
        const double xi = kill.exponential(1.0);

        double x;
        if (cfg.initial_sampler) {
            RngStream init = rng.derived(stream_purpose::init);
            x = cfg.initial_sampler(init)[0];
        } else {
            x = cfg.x0[0];
        }

        double* cp_out = table.states(r);
        std::size_t next_cp = 0;
        double H = 0.0;
        double prev_rate = kappa1(x);
        bool dead = false;
        for (long long i = 0; i < sched.n_steps; ++i) {
            const double step = sched.step_len(i);
            const double root = step == cfg.dt ? root_dt : std::sqrt(step);
            // same association as euler_step so this fast path is
            // bit-identical to the general loop
            x = x + drift1(x) * step + root * rng.normal();
            if (!std::isfinite(x))
                throw evaluation_error("ensemble: state diverged in replica " +
                                       std::to_string(r));
            const double rate = kappa1(x);
            const double H_next = H + 0.5 * (prev_rate + rate) * step;
            if (H_next >= xi) {
                table.tau(r) = sched.time_at(i) + (xi - H) / (H_next - H) * step;
                dead = true;
                break;
            }
            H = H_next;
            prev_rate = rate;
            if (next_cp < cp_steps.size() && i + 1 == cp_steps[next_cp])
                cp_out[next_cp++] = x;
        }
        if (!dead) table.tau(r) = std::numeric_limits<double>::infinity();
    }
}

// General replica loop (any dimension, any scheme) via simulate_killed's
// machinery inlined to record checkpoint states without storing paths.
inline void run_replicas_general(const ModelBundle& model, const RateFn& kappa,
                                 const EnsembleConfig& cfg, const StepSchedule& sched,
                                 const std::vector<long long>& cp_steps, std::int64_t lo,
                                 std::int64_t hi, ReplicaTable& table) {
    const int d = model.dim;
    const SchemeConfig scheme{cfg.dt, cfg.scheme, cfg.ou_nu, cfg.ou_tau2};
    const DriftFn drift_at = model.drift.drift_fn();
    for (std::int64_t r = lo; r < hi; ++r) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(r), stream_purpose::path);
        RngStream kill = rng.derived(stream_purpose::kill);
        const double xi = kill.exponential(1.0);

        Vec x;
        if (cfg.initial_sampler) {
            RngStream init = rng.derived(stream_purpose::init);
            x = cfg.initial_sampler(init);
            if (static_cast<int>(x.size()) != d)
                throw configuration_error("ensemble: initial sampler dimension mismatch");
        } else {
            x = cfg.x0;
        }

        double* cp_out = table.states(r);
        std::size_t next_cp = 0;
        Vec noise(d);
        double H = 0.0;
        double prev_rate = checked_rate(kappa(x), x);
        bool dead = false;
        for (long long i = 0; i < sched.n_steps; ++i) {
            const double step = sched.step_len(i);
            advance(drift_at, x, step, scheme, rng, noise);
            if (!all_finite(x))
                throw evaluation_error("ensemble: state diverged in replica " +
                                       std::to_string(r));
            const double rate = checked_rate(kappa(x), x);
            const double H_next = H + 0.5 * (prev_rate + rate) * step;
            if (H_next >= xi) {
                table.tau(r) = sched.time_at(i) + (xi - H) / (H_next - H) * step;
                dead = true;
                break;
            }
            H = H_next;
            prev_rate = rate;
            if (next_cp < cp_steps.size() && i + 1 == cp_steps[next_cp]) {
                for (int c = 0; c < d; ++c) cp_out[next_cp * d + c] = x[c];
                ++next_cp;
            }
        }
        if (!dead) table.tau(r) = std::numeric_limits<double>::infinity();
    }
}

}  // namespace detail

// Run the killed ensemble.  Scalar fast paths are used when the model
// carries them and the scheme is plain Euler in one dimension; both paths
// draw identical randomness per replica, so the choice cannot change output.
inline EnsembleResult run_ensemble(const ModelBundle& model, const KillingSpec& killing,
                                   const EnsembleConfig& cfg) {
    if (cfg.replicas < 1) throw configuration_error("ensemble: replicas must be >= 1");
    if (!(cfg.dt > 0.0)) throw configuration_error("ensemble: dt must be > 0");
    if (!(cfg.horizon > 0.0)) throw configuration_error("ensemble: horizon must be > 0");
    if (!cfg.initial_sampler && static_cast<int>(cfg.x0.size()) != model.dim)
        throw configuration_error("ensemble: x0 dimension mismatch");

    const detail::StepSchedule sched = detail::make_schedule(cfg.horizon, cfg.dt);
    const std::vector<long long> cp_steps = detail::checkpoint_steps(cfg);
    const std::size_t ncp = cp_steps.size();
    const int d = model.dim;

    detail::ReplicaTable table;
    table.stride = 1 + ncp * static_cast<std::size_t>(d);
    table.data.assign(static_cast<std::size_t>(cfg.replicas) * table.stride,
                      std::numeric_limits<double>::quiet_NaN());

    const bool scalar = d == 1 && cfg.scheme == Scheme::euler && model.drift1 &&
                        model.kappa_tilde1;
    std::function<double(double)> kappa1;
    if (scalar) {
        const double K = killing.shift_K;
        kappa1 = [kt = model.kappa_tilde1, K](double y) {
            const double k = kt(y) + K;
            return k > 0.0 ? k : 0.0;  // clamp quadrature-noise negatives
        };
    }

    const std::int64_t worker_cap = std::min<std::int64_t>(cfg.replicas, 1024);
    const int workers = std::clamp(cfg.workers, 1, static_cast<int>(worker_cap));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::int64_t chunk = (cfg.replicas + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = w * chunk, hi = std::min<std::int64_t>(cfg.replicas, lo + chunk);
        if (lo >= hi) break;
        auto job = [&, lo, hi, w]() {
            try {
                if (scalar)
                    detail::run_replicas_scalar(model.drift1, kappa1, cfg, sched, cp_steps, lo,
                                                hi, table);
                else
                    detail::run_replicas_general(model, killing.kappa, cfg, sched, cp_steps, lo,
                                                 hi, table);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        };
        if (workers == 1)
            job();
        else
            pool.emplace_back(job);
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    EnsembleResult res;
    res.replicas = cfg.replicas;

    // Survival curve on the step grid from the killing times.
    Vec taus;
    taus.reserve(cfg.replicas);
    for (std::int64_t r = 0; r < cfg.replicas; ++r) {
        const double tau = table.tau(r);
        if (std::isfinite(tau)) taus.push_back(tau);
    }
    res.n_killed = static_cast<std::int64_t>(taus.size());
    std::sort(taus.begin(), taus.end());
    const double N = static_cast<double>(cfg.replicas);
    res.survival.times.resize(sched.n_steps + 1);
    res.survival.survival.resize(sched.n_steps + 1);
    res.survival.std_error.resize(sched.n_steps + 1);
    std::size_t dead_so_far = 0;
    for (long long i = 0; i <= sched.n_steps; ++i) {
        const double t = sched.time_at(i);
        while (dead_so_far < taus.size() && taus[dead_so_far] <= t) ++dead_so_far;
        const double p = (N - static_cast<double>(dead_so_far)) / N;
        res.survival.times[i] = t;
        res.survival.survival[i] = p;
        res.survival.std_error[i] = std::sqrt(p * (1.0 - p) / N);
    }

    // Conditioned laws at the checkpoints.
    for (std::size_t k = 0; k < ncp; ++k) {
        ConditionalLaw law;
        law.t = cfg.checkpoints[k];
        law.dim = d;
        for (std::int64_t r = 0; r < cfg.replicas; ++r) {
            const double* st = table.states(r);
            if (std::isnan(st[k * d])) continue;  // dead by this checkpoint
            for (int c = 0; c < d; ++c) law.survivor_states.push_back(st[k * d + c]);
        }
        law.n_survivors = static_cast<std::int64_t>(law.survivor_states.size() / d);
        law.empty = law.n_survivors == 0;
        if (!law.empty) law.histogram = build_histogram(law.coordinate(0), cfg.histogram_bins);
        res.laws.push_back(std::move(law));
    }
    return res;
}

// --- CSV artifacts ---------------------------------------------------------

inline void write_survival_csv(const std::string& path, const SurvivalCurve& c) {
    auto out = open_csv(path);
    out << "t,p_hat,stderr\n";
    for (std::size_t i = 0; i < c.times.size(); ++i)
        out << csv_num(c.times[i]) << ',' << csv_num(c.survival[i]) << ','
            << csv_num(c.std_error[i]) << '\n';
}

// law_t<t>.csv: first-coordinate histogram of the survivor states;
// density = count / (n_survivors * bin_width), so the columns integrate to 1.
inline void write_law_csv(const std::string& path, const ConditionalLaw& law) {
    auto out = open_csv(path);
    out << "bin_lo,bin_hi,count,density\n";
    if (law.empty) return;
    const double n = static_cast<double>(law.n_survivors);
    for (std::size_t b = 0; b < law.histogram.counts.size(); ++b) {
        const double lo = law.histogram.edges[b], hi = law.histogram.edges[b + 1];
        const double dens = static_cast<double>(law.histogram.counts[b]) / (n * (hi - lo));
        out << csv_num(lo) << ',' << csv_num(hi) << ',' << law.histogram.counts[b] << ','
            << csv_num(dens) << '\n';
    }
}

inline void write_moments_csv(const std::string& path,
                              const std::vector<ConditionalLaw>& laws) {
    auto out = open_csv(path);
    const int d = laws.empty() ? 1 : laws.front().dim;
    out << "t,n_survivors";
    if (d == 1) {
        out << ",mean,var,se_mean,se_var\n";
    } else {
        for (int c = 1; c <= d; ++c)
            out << ",mean_" << c << ",var_" << c << ",se_mean_" << c << ",se_var_" << c;
        out << '\n';
    }
    for (const auto& law : laws) {
        out << csv_num(law.t) << ',' << law.n_survivors;
        if (law.n_survivors >= 2) {
            const MomentSummary m = summarize_moments(law.survivor_states, law.dim);
            for (int c = 0; c < d; ++c)
                out << ',' << csv_num(m.mean[c]) << ',' << csv_num(m.variance[c]) << ','
                    << csv_num(m.se_mean[c]) << ',' << csv_num(m.se_var[c]);
        } else {
            for (int c = 0; c < d; ++c) out << ",nan,nan,nan,nan";
        }
        out << '\n';
    }
}

}  // namespace qsmc
