// qslab: config-driven quasi-stationary Monte Carlo experiment runner.
//
// Subcommands:
//   check     verify the standing assumptions for the configured model
//   kappa     tabulate the derived killing rate over a grid
//   simulate  run the killed ensemble and emit survival/law/moment CSVs
//   spectrum  eigenvalues of the discretized killed generator vs closed forms
//   langevin  long-run moments of the Q-process (Langevin) diffusion
//
// Exit codes: 0 success, 1 configuration error, 2 assumption flag,
// 3 statistical failure (e.g. ensemble extinct before the first checkpoint).
//
// All randomness flows from the configured seed; rerunning any subcommand
// with the same config overwrites byte-identical artifacts.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <qsmc/qsmc.hpp>

#include "presets_data.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qsmc;

namespace {

struct CliOptions {
    std::string config_path;
    std::string preset;
    std::string out_override;
    std::optional<std::uint64_t> seed_override;
    int workers = 1;
    int sample_paths = 0;  // simulate: dump the first k replica paths
};

std::string load_config_text(const CliOptions& opt) {
    if (opt.config_path.empty() == opt.preset.empty())
        throw configuration_error("exactly one of --config and --preset is required");
    if (!opt.preset.empty()) {
        if (opt.preset == "figure1") return qslab_presets::figure1;
        if (opt.preset == "gaussian-bm") return qslab_presets::gaussian_bm;
        if (opt.preset == "cauchy-bm") return qslab_presets::cauchy_bm;
        throw configuration_error("unknown preset '" + opt.preset +
                                  "' (available: figure1, gaussian-bm, cauchy-bm)");
    }
    std::ifstream in(opt.config_path, std::ios::binary);
    if (!in) throw configuration_error("cannot read config file: " + opt.config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig load_config(const CliOptions& opt) {
    RunConfig cfg = parse_config(load_config_text(opt));
    if (!opt.out_override.empty()) cfg.out_dir = opt.out_override;
    if (opt.seed_override) cfg.seed = *opt.seed_override;
    return cfg;
}

fs::path ensure_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw configuration_error("cannot create output directory " + cfg.out_dir + ": " +
                                      ec.message());
    return dir;
}

void write_report(const fs::path& dir, const json& report) {
    std::ofstream out(dir / "report.json", std::ios::binary);
    if (!out) throw configuration_error("cannot write report.json in " + dir.string());
    out << report.dump(2) << '\n';
}

Box resolve_search_box(const RunConfig& cfg, const ModelBundle& model) {
    return cfg.search_box ? *cfg.search_box : model.default_box;
}

Box resolve_quad_box(const RunConfig& cfg, const ModelBundle& model) {
    return cfg.quad_box ? *cfg.quad_box : model.default_box;
}

// --- check -------------------------------------------------------------------

int cmd_check(const RunConfig& cfg) {
    const ModelBundle model = make_model(cfg);
    const AssumptionReport rep =
        check_assumptions(model.target, model.drift, resolve_quad_box(cfg, model),
                          cfg.quad_tol);

    const fs::path dir = ensure_out_dir(cfg);
    json out{{"command", "check"},
             {"model", model.name},
             {"l2_integral", rep.l2_integral},
             {"l2_finite", rep.l2_finite},
             {"kappa_lower_bound", rep.kappa_lower_bound},
             {"liminf_estimate", rep.liminf_estimate},
             {"warnings", rep.warnings},
             {"violations", rep.violations}};
    if (rep.sup_ratio) out["sup_ratio"] = *rep.sup_ratio;
    std::ofstream f(dir / "assumptions.json", std::ios::binary);
    if (!f) throw configuration_error("cannot write assumptions.json");
    f << out.dump(2) << '\n';
    write_report(dir, out);

    std::cout << "model: " << model.name << "\n"
              << "Assumption 3 integral (boxed): " << rep.l2_integral
              << (rep.l2_finite ? "  [finite]" : "  [DIVERGENT]") << "\n"
              << "inf kappa_tilde over box: " << rep.kappa_lower_bound << "\n"
              << "boundary-shell liminf estimate: " << rep.liminf_estimate << "\n";
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
    for (const auto& v : rep.violations) std::cout << "VIOLATION: " << v << "\n";
    std::cout << (rep.violations.empty() ? "all assumptions pass" : "assumption check FAILED")
              << "\n";
    return rep.violations.empty() ? 0 : 2;
}

// --- kappa -------------------------------------------------------------------

int cmd_kappa(const RunConfig& cfg) {
    const ModelBundle model = make_model(cfg);
    if (model.dim != 1)
        throw configuration_error("kappa: grid tabulation is 1-d only (model dim " +
                                  std::to_string(model.dim) + ")");
    const KillingSpec killing = build_killing(model.target, model.drift, cfg.K_override,
                                              resolve_search_box(cfg, model), cfg.tol);

    const fs::path dir = ensure_out_dir(cfg);
    auto csv = open_csv((dir / "kappa.csv").string());
    csv << "y,kappa_tilde,kappa\n";
    const int n = cfg.grid.n;
    for (int i = 0; i < n; ++i) {
        // plain inclusive grid over [lo, hi] (this is a profile table, not
        // the spectral discretization)
        const double y =
            cfg.grid.lo + (cfg.grid.hi - cfg.grid.lo) * static_cast<double>(i) /
                              static_cast<double>(n - 1);
        const Vec p{y};
        csv << csv_num(y) << ',' << csv_num(killing.kappa_tilde(p)) << ','
            << csv_num(killing.kappa(p)) << '\n';
    }

    json report{{"command", "kappa"},
                {"model", model.name},
                {"shift_K", killing.shift_K},
                {"warnings", killing.warnings}};
    if (killing.minimizer) report["minimizer"] = (*killing.minimizer)[0];
    write_report(dir, report);

    std::cout << "shift K = " << killing.shift_K;
    if (killing.minimizer) std::cout << " at y* = " << (*killing.minimizer)[0];
    std::cout << "\nwrote " << (dir / "kappa.csv").string() << "\n";
    for (const auto& w : killing.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

// --- simulate ----------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg, const CliOptions& opt) {
    const ModelBundle model = make_model(cfg);
    const KillingSpec killing = build_killing(model.target, model.drift, cfg.K_override,
                                              resolve_search_box(cfg, model), cfg.tol);
    if (cfg.checkpoints.empty())
        throw configuration_error("simulate: ensemble.checkpoints must be nonempty");

    EnsembleConfig ens;
    ens.replicas = cfg.replicas;
    ens.horizon = cfg.horizon;
    ens.checkpoints = cfg.checkpoints;
    ens.dt = cfg.dt;
    ens.seed = cfg.seed;
    ens.scheme = cfg.scheme;
    ens.ou_nu = cfg.ou_nu;
    ens.ou_tau2 = cfg.ou_tau2;
    ens.workers = opt.workers;
    ens.histogram_bins = cfg.histogram_bins;
    if (cfg.x0_is_target) {
        if (!model.sample_target1)
            throw configuration_error("simulate: model '" + model.name +
                                      "' has no exact target sampler for x0 = \"target\"");
        ens.initial_sampler = [s = model.sample_target1](RngStream& rng) {
            return Vec{s(rng)};
        };
        ens.initial_sampler_name = "target";
    } else {
        ens.x0 = cfg.x0;
    }

    const EnsembleResult res = run_ensemble(model, killing, ens);

    const fs::path dir = ensure_out_dir(cfg);
    write_survival_csv((dir / "survival.csv").string(), res.survival);
    for (const auto& law : res.laws)
        write_law_csv((dir / ("law_t" + time_label(law.t) + ".csv")).string(), law);
    write_moments_csv((dir / "moments.csv").string(), res.laws);

    // Optional path dumps (time, x_1..x_d) for the first few replicas.
    for (int r = 0; r < opt.sample_paths; ++r) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(r), stream_purpose::path);
        const SchemeConfig sc{cfg.dt, cfg.scheme, cfg.ou_nu, cfg.ou_tau2};
        const Vec start = ens.initial_sampler
                              ? [&] {
                                    RngStream init = rng.derived(stream_purpose::init);
                                    return ens.initial_sampler(init);
                                }()
                              : ens.x0;
        const KilledTrajectory kt = simulate_killed(model.drift.drift_fn(), killing.kappa,
                                                    start, cfg.horizon, sc, rng);
        auto csv = open_csv((dir / ("path_r" + std::to_string(r) + ".csv")).string());
        csv << "t";
        for (int c = 1; c <= model.dim; ++c) csv << ",x_" << c;
        csv << '\n';
        for (std::size_t i = 0; i < kt.path.times.size(); ++i) {
            csv << csv_num(kt.path.times[i]);
            for (int c = 0; c < model.dim; ++c) csv << ',' << csv_num(kt.path.states[i][c]);
            csv << '\n';
        }
    }

    json report{{"command", "simulate"},
                {"model", model.name},
                {"replicas", res.replicas},
                {"n_killed", res.n_killed},
                {"seed", cfg.seed},
                {"shift_K", killing.shift_K},
                {"warnings", killing.warnings}};

    json cps = json::array();
    bool first_checkpoint_extinct = false;
    for (std::size_t k = 0; k < res.laws.size(); ++k) {
        const auto& law = res.laws[k];
        json c{{"t", law.t}, {"n_survivors", law.n_survivors}};
        if (law.empty) {
            c["empty"] = true;
            if (k == 0) first_checkpoint_extinct = true;
        } else if (law.n_survivors >= 2) {
            const MomentSummary m = summarize_moments(law.survivor_states, law.dim);
            c["mean"] = m.mean[0];
            c["var"] = m.variance[0];
            c["se_mean"] = m.se_mean[0];
            c["se_var"] = m.se_var[0];
        }
        cps.push_back(c);
    }
    report["checkpoints"] = cps;

    // Fitted asymptotic killing rate from the survival-curve tail (advisory;
    // the closed-form value for the OU example is -K).
    try {
        const RateFit fit = fit_exp_rate(res.survival.times, res.survival.survival,
                                         cfg.horizon / 2.0, cfg.horizon);
        report["survival_rate_fit"] = {{"t_lo", fit.t_lo},
                                       {"t_hi", fit.t_hi},
                                       {"slope", fit.slope},
                                       {"intercept", fit.intercept},
                                       {"r_squared", fit.r_squared}};
    } catch (const window_error& e) {
        report["survival_rate_fit"] = {{"skipped", e.what()}};
    }
    write_report(dir, report);

    std::cout << "replicas: " << res.replicas << ", killed: " << res.n_killed << "\n";
    for (const auto& law : res.laws) {
        std::cout << "t = " << law.t << ": " << law.n_survivors << " survivors";
        if (law.n_survivors >= 2) {
            const MomentSummary m = summarize_moments(law.survivor_states, law.dim);
            std::cout << ", mean " << m.mean[0] << ", var " << m.variance[0];
        }
        std::cout << "\n";
    }
    std::cout << "artifacts in " << dir.string() << "\n";

    if (first_checkpoint_extinct) {
        std::cerr << "statistical failure: all replicas died before the first checkpoint; "
                     "raise ensemble.replicas or lower the first checkpoint\n";
        return 3;
    }
    return 0;
}

// --- spectrum ----------------------------------------------------------------

int cmd_spectrum(const RunConfig& cfg) {
    const ModelBundle model = make_model(cfg);
    if (model.dim != 1)
        throw configuration_error("spectrum: the spectral oracle is 1-d only (model dim " +
                                  std::to_string(model.dim) + ")");
    const KillingSpec killing = build_killing(model.target, model.drift, cfg.K_override,
                                              resolve_search_box(cfg, model), cfg.tol);
    const GeneratorMatrix gen = discretize_generator(model.target, model.drift, killing,
                                                     cfg.grid);
    const Vec evals = low_eigenvalues(gen, static_cast<std::size_t>(cfg.n_eigenvalues));

    // Closed-form overlays where the spectrum is known.
    Vec analytic;
    if (model.name == "ou-example") {
        const OUParams p{cfg.ou_nu, cfg.ou_tau2, cfg.ou_mu, cfg.ou_sigma2};
        const OUSpectrum s = ou_spectrum(p, cfg.n_eigenvalues - 1);
        const double K = ou_killing_constants(p).K;
        for (double l : s.lambda) analytic.push_back(K + l);
    } else if (model.name == "gaussian") {
        // Brownian motion killed at a quadratic rate: harmonic-oscillator
        // eigenvalues (2n+1)/(2 sigma2).
        const double s2 = model.params.at("sigma2");
        for (int n = 0; n < cfg.n_eigenvalues; ++n)
            analytic.push_back(static_cast<double>(2 * n + 1) / (2.0 * s2));
    }

    const fs::path dir = ensure_out_dir(cfg);
    write_spectrum_csv((dir / "spectrum.csv").string(), evals, analytic);

    json report{{"command", "spectrum"},
                {"model", model.name},
                {"grid", {{"lo", cfg.grid.lo}, {"hi", cfg.grid.hi}, {"n", cfg.grid.n}}},
                {"shift_K", killing.shift_K},
                {"eigenvalues", evals},
                {"warnings", gen.warnings}};
    if (!analytic.empty()) {
        double max_rel = 0.0;
        for (std::size_t i = 0; i < evals.size() && i < analytic.size(); ++i) {
            const double denom = std::max(std::fabs(analytic[i]), 1e-300);
            max_rel = std::max(max_rel, std::fabs(evals[i] - analytic[i]) / denom);
        }
        report["analytic"] = analytic;
        report["max_rel_error"] = max_rel;
        std::cout << "max relative eigenvalue error vs closed form: " << max_rel << "\n";
    }
    write_report(dir, report);

    std::cout << "eigenvalues:";
    for (double l : evals) std::cout << ' ' << l;
    std::cout << "\nwrote " << (dir / "spectrum.csv").string() << "\n";
    for (const auto& w : gen.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

// --- langevin ----------------------------------------------------------------

int cmd_langevin(const RunConfig& cfg) {
    const ModelBundle model = make_model(cfg);
    const DriftFn drift = langevin_drift(model.target, model.drift);
    const SchemeConfig sc{cfg.dt, Scheme::euler, 0.0, 1.0};

    const fs::path dir = ensure_out_dir(cfg);
    auto csv = open_csv((dir / "langevin.csv").string());
    csv << "replica,n_samples,mean,variance\n";

    double pooled_sum = 0.0, pooled_sum2 = 0.0;
    std::int64_t pooled_n = 0;
    for (int r = 0; r < cfg.lg_replicas; ++r) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(r), stream_purpose::path);
        const PathGrid path = simulate_path(drift, Vec(model.dim, cfg.lg_x0), cfg.lg_horizon,
                                            sc, rng);
        const std::size_t start =
            static_cast<std::size_t>(cfg.lg_burn_fraction * static_cast<double>(path.times.size()));
        double s = 0.0, s2 = 0.0;
        std::int64_t n = 0;
        for (std::size_t i = start; i < path.times.size(); ++i) {
            const double x = path.states[i][0];
            s += x;
            s2 += x * x;
            ++n;
        }
        const double mean = s / static_cast<double>(n);
        const double var =
            (s2 - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
        csv << r << ',' << n << ',' << csv_num(mean) << ',' << csv_num(var) << '\n';
        pooled_sum += s;
        pooled_sum2 += s2;
        pooled_n += n;
    }
    const double mean = pooled_sum / static_cast<double>(pooled_n);
    const double var = (pooled_sum2 - static_cast<double>(pooled_n) * mean * mean) /
                       static_cast<double>(pooled_n - 1);

    json report{{"command", "langevin"}, {"model", model.name},
                {"replicas", cfg.lg_replicas}, {"horizon", cfg.lg_horizon},
                {"pooled_mean", mean},         {"pooled_variance", var}};
    std::cout << "Q-process long-run moments: mean " << mean << ", variance " << var << "\n";
    if (model.name == "ou-example") {
        const Gaussian1D q =
            ou_qprocess(OUParams{cfg.ou_nu, cfg.ou_tau2, cfg.ou_mu, cfg.ou_sigma2});
        report["analytic_mean"] = q.mean;
        report["analytic_variance"] = q.variance;
        std::cout << "closed form: mean " << q.mean << ", variance " << q.variance << "\n";
    }
    write_report(dir, report);
    std::cout << "wrote " << (dir / "langevin.csv").string() << "\n";
    return 0;
}

int dispatch(const std::string& cmd, const CliOptions& opt) {
    const RunConfig cfg = load_config(opt);
    if (cmd == "check") return cmd_check(cfg);
    if (cmd == "kappa") return cmd_kappa(cfg);
    if (cmd == "simulate") return cmd_simulate(cfg, opt);
    if (cmd == "spectrum") return cmd_spectrum(cfg);
    if (cmd == "langevin") return cmd_langevin(cfg);
    throw configuration_error("unknown subcommand " + cmd);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qslab: quasi-stationary Monte Carlo laboratory"};
    app.require_subcommand(1);

    CliOptions opt;
    std::string chosen;
    for (const char* name : {"check", "kappa", "simulate", "spectrum", "langevin"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config_path, "path to a JSON run configuration");
        sub->add_option("--preset", opt.preset,
                        "built-in configuration: figure1, gaussian-bm or cauchy-bm");
        sub->add_option("--out", opt.out_override, "output directory (overrides config)");
        sub->add_option("--seed", opt.seed_override, "RNG seed (overrides config)");
        sub->add_option("--workers", opt.workers, "worker-thread cap (output-invariant)");
        if (std::string(name) == "simulate")
            sub->add_option("--sample-paths", opt.sample_paths,
                            "also dump the first k replica paths as CSV");
        sub->callback([&chosen, name] { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return dispatch(chosen, opt);
    } catch (const configuration_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const parameter_error& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 1;
    } catch (const evaluation_error& e) {
        std::cerr << "evaluation error: " << e.what() << "\n";
        return 1;
    } catch (const contract_violation& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return 1;
    } catch (const construction_error& e) {
        std::cerr << "assumption flag: " << e.what() << "\n";
        return 2;
    } catch (const inapplicability_error& e) {
        std::cerr << "assumption flag: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const window_error& e) {
        std::cerr << "statistical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
