#pragma once

// JSON run configuration.  One UTF-8 document drives every subcommand; all
// fields are validated up front (unknown keys rejected, every diagnostic
// names the offending field) and all randomness flows from the single seed.
//
// Schema (all sections optional unless a subcommand needs them):
// {
//   "model":    {"name": "ou-example", "nu": 2, "tau2": 4, "mu": -1, "sigma2": 2}
//               {"name": "gaussian", "mu": 0 | [..], "sigma2": 1 | [..]}
//               {"name": "cauchy"}
//               {"name": "exponential-tail", "beta": 1}
//               {"name": "custom", "dim": 1, "U": "...", "U_grad": ["..."],
//                "U_lap": "...", "A": "...", "A_grad": ["..."], "A_lap": "..."}
//   "killing":  {"search_box": [lo, hi] | {"lo": [..], "hi": [..]},
//                "quad_box": ..., "tol": 1e-10, "quad_tol": 1e-8,
//                "K_override": 0.265625}
//   "scheme":   {"dt": 0.01, "type": "euler" | "exact_ou" | "exact_bm"}
//   "ensemble": {"replicas": 500000, "horizon": 20, "checkpoints": [1,5,10,20],
//                "seed": 20240901, "x0": 3 | [..] | "target", "histogram_bins": 0}
//   "spectral": {"lo": -20, "hi": 15, "n": 2000, "k": 4}
//   "langevin": {"replicas": 4, "horizon": 200, "burn_in_fraction": 0.5, "x0": -2}
//   "output":   {"dir": "out"}
// }

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "builtin.hpp"
#include "common.hpp"
#include "dynamics.hpp"
#include "spectral.hpp"

namespace qsmc {

struct RunConfig {
    // model
    std::string model_name = "ou-example";
    Vec gaussian_mu{0.0}, gaussian_sigma2{1.0};
    double ou_nu = 2.0, ou_tau2 = 4.0, ou_mu = -1.0, ou_sigma2 = 2.0;
    double beta = 1.0;
    CustomModelSpec custom;

    // killing
    std::optional<double> K_override;
    std::optional<Box> search_box;  // default: the model's default box
    std::optional<Box> quad_box;
    double tol = 1e-10;
    double quad_tol = 1e-8;

    // scheme
    double dt = 0.01;
    Scheme scheme = Scheme::euler;

    // ensemble
    std::int64_t replicas = 10000;
    double horizon = 10.0;
    Vec checkpoints;
    std::uint64_t seed = 1;
    Vec x0{0.0};
    bool x0_is_target = false;  // "x0": "target" draws X_0 from the target law
    int histogram_bins = 0;

    // spectral
    GridSpec grid{-20.0, 15.0, 2000};
    int n_eigenvalues = 4;

    // langevin
    int lg_replicas = 4;
    double lg_horizon = 200.0;
    double lg_burn_fraction = 0.5;
    double lg_x0 = 0.0;

    // output
    std::string out_dir = "out";
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void cfg_fail(const std::string& where, const std::string& what) {
    throw configuration_error("config: " + where + ": " + what);
}

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) cfg_fail(where + "." + it.key(), "unknown key");
    }
}

inline double need_num(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) cfg_fail(where + "." + key, "missing required number");
    if (!obj[key].is_number()) cfg_fail(where + "." + key, "expected a number");
    return obj[key].get<double>();
}

inline double opt_num(const json& obj, const std::string& where, const char* key,
                      double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) cfg_fail(where + "." + key, "expected a number");
    return obj[key].get<double>();
}

inline Vec num_list(const json& v, const std::string& where) {
    Vec out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array()) {
        for (const auto& e : v) {
            if (!e.is_number()) cfg_fail(where, "expected numbers");
            out.push_back(e.get<double>());
        }
    } else {
        cfg_fail(where, "expected a number or an array of numbers");
    }
    return out;
}

inline Box parse_box(const json& v, const std::string& where) {
    if (v.is_array()) {
        if (v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            cfg_fail(where, "expected [lo, hi]");
        return Box(v[0].get<double>(), v[1].get<double>());
    }
    if (v.is_object()) {
        reject_unknown(v, where, {"lo", "hi"});
        if (!v.contains("lo") || !v.contains("hi")) cfg_fail(where, "need both lo and hi");
        return Box(num_list(v["lo"], where + ".lo"), num_list(v["hi"], where + ".hi"));
    }
    cfg_fail(where, "expected [lo, hi] or {lo: [...], hi: [...]}");
}

inline std::vector<std::string> str_list(const json& v, const std::string& where) {
    std::vector<std::string> out;
    if (!v.is_array()) cfg_fail(where, "expected an array of strings");
    for (const auto& e : v) {
        if (!e.is_string()) cfg_fail(where, "expected strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

inline void parse_model(const json& m, RunConfig& cfg) {
    if (!m.is_object()) cfg_fail("model", "expected an object");
    if (!m.contains("name") || !m["name"].is_string())
        cfg_fail("model.name", "missing model name");
    cfg.model_name = m["name"].get<std::string>();

    if (cfg.model_name == "gaussian") {
        reject_unknown(m, "model", {"name", "mu", "sigma2"});
        if (m.contains("mu")) cfg.gaussian_mu = num_list(m["mu"], "model.mu");
        if (m.contains("sigma2")) cfg.gaussian_sigma2 = num_list(m["sigma2"], "model.sigma2");
        if (cfg.gaussian_mu.size() != cfg.gaussian_sigma2.size())
            cfg_fail("model", "mu and sigma2 must have equal length");
    } else if (cfg.model_name == "cauchy") {
        reject_unknown(m, "model", {"name"});
    } else if (cfg.model_name == "ou-example") {
        reject_unknown(m, "model", {"name", "nu", "tau2", "mu", "sigma2"});
        cfg.ou_nu = opt_num(m, "model", "nu", cfg.ou_nu);
        cfg.ou_tau2 = opt_num(m, "model", "tau2", cfg.ou_tau2);
        cfg.ou_mu = opt_num(m, "model", "mu", cfg.ou_mu);
        cfg.ou_sigma2 = opt_num(m, "model", "sigma2", cfg.ou_sigma2);
    } else if (cfg.model_name == "exponential-tail") {
        reject_unknown(m, "model", {"name", "beta"});
        cfg.beta = opt_num(m, "model", "beta", cfg.beta);
    } else if (cfg.model_name == "custom") {
        reject_unknown(m, "model",
                       {"name", "dim", "U", "U_grad", "U_lap", "A", "A_grad", "A_lap"});
        cfg.custom.dim = static_cast<int>(opt_num(m, "model", "dim", 1.0));
        if (!m.contains("U") || !m.contains("U_grad") || !m.contains("U_lap"))
            cfg_fail("model", "custom model needs U, U_grad and U_lap");
        cfg.custom.U = m["U"].get<std::string>();
        cfg.custom.U_grad = str_list(m["U_grad"], "model.U_grad");
        cfg.custom.U_lap = m["U_lap"].get<std::string>();
        if (m.contains("A")) cfg.custom.A = m["A"].get<std::string>();
        if (m.contains("A_grad")) cfg.custom.A_grad = str_list(m["A_grad"], "model.A_grad");
        if (m.contains("A_lap")) cfg.custom.A_lap = m["A_lap"].get<std::string>();
    } else {
        cfg_fail("model.name", "unknown model '" + cfg.model_name +
                                   "' (expected gaussian, cauchy, ou-example, "
                                   "exponential-tail or custom)");
    }
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    using detail::cfg_fail;
    using detail::json;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw configuration_error(std::string("config: not valid JSON: ") + e.what());
    }
    if (!root.is_object()) cfg_fail("(root)", "expected a JSON object");
    detail::reject_unknown(root, "(root)",
                           {"model", "killing", "scheme", "ensemble", "spectral", "langevin",
                            "output"});

    RunConfig cfg;
    if (root.contains("model")) detail::parse_model(root["model"], cfg);

    if (root.contains("killing")) {
        const json& k = root["killing"];
        if (!k.is_object()) cfg_fail("killing", "expected an object");
        detail::reject_unknown(k, "killing",
                               {"search_box", "quad_box", "tol", "quad_tol", "K_override"});
        if (k.contains("search_box"))
            cfg.search_box = detail::parse_box(k["search_box"], "killing.search_box");
        if (k.contains("quad_box"))
            cfg.quad_box = detail::parse_box(k["quad_box"], "killing.quad_box");
        cfg.tol = detail::opt_num(k, "killing", "tol", cfg.tol);
        cfg.quad_tol = detail::opt_num(k, "killing", "quad_tol", cfg.quad_tol);
        if (k.contains("K_override")) {
            if (!k["K_override"].is_number())
                cfg_fail("killing.K_override", "expected a number");
            cfg.K_override = k["K_override"].get<double>();
        }
    }

    if (root.contains("scheme")) {
        const json& s = root["scheme"];
        if (!s.is_object()) cfg_fail("scheme", "expected an object");
        detail::reject_unknown(s, "scheme", {"dt", "type"});
        cfg.dt = detail::opt_num(s, "scheme", "dt", cfg.dt);
        if (!(cfg.dt > 0.0)) cfg_fail("scheme.dt", "must be > 0");
        if (s.contains("type")) {
            const std::string t = s["type"].get<std::string>();
            if (t == "euler")
                cfg.scheme = Scheme::euler;
            else if (t == "exact_ou")
                cfg.scheme = Scheme::exact_ou;
            else if (t == "exact_bm")
                cfg.scheme = Scheme::exact_bm;
            else
                cfg_fail("scheme.type", "expected euler, exact_ou or exact_bm");
        }
    }

    if (root.contains("ensemble")) {
        const json& e = root["ensemble"];
        if (!e.is_object()) cfg_fail("ensemble", "expected an object");
        detail::reject_unknown(e, "ensemble",
                               {"replicas", "horizon", "checkpoints", "seed", "x0",
                                "histogram_bins"});
        cfg.replicas = static_cast<std::int64_t>(
            detail::opt_num(e, "ensemble", "replicas", static_cast<double>(cfg.replicas)));
        if (cfg.replicas < 1) cfg_fail("ensemble.replicas", "must be >= 1");
        cfg.horizon = detail::opt_num(e, "ensemble", "horizon", cfg.horizon);
        if (e.contains("checkpoints"))
            cfg.checkpoints = detail::num_list(e["checkpoints"], "ensemble.checkpoints");
        if (e.contains("seed")) {
            if (!e["seed"].is_number_integer()) cfg_fail("ensemble.seed", "expected an integer");
            cfg.seed = e["seed"].get<std::uint64_t>();
        }
        if (e.contains("x0")) {
            if (e["x0"].is_string()) {
                const std::string s = e["x0"].get<std::string>();
                if (s != "target")
                    cfg_fail("ensemble.x0", "unknown sampler '" + s + "' (only \"target\")");
                cfg.x0_is_target = true;
            } else {
                cfg.x0 = detail::num_list(e["x0"], "ensemble.x0");
            }
        }
        cfg.histogram_bins = static_cast<int>(
            detail::opt_num(e, "ensemble", "histogram_bins", cfg.histogram_bins));
    }

    if (root.contains("spectral")) {
        const json& s = root["spectral"];
        if (!s.is_object()) cfg_fail("spectral", "expected an object");
        detail::reject_unknown(s, "spectral", {"lo", "hi", "n", "k"});
        cfg.grid.lo = detail::opt_num(s, "spectral", "lo", cfg.grid.lo);
        cfg.grid.hi = detail::opt_num(s, "spectral", "hi", cfg.grid.hi);
        cfg.grid.n = static_cast<int>(
            detail::opt_num(s, "spectral", "n", static_cast<double>(cfg.grid.n)));
        cfg.n_eigenvalues = static_cast<int>(
            detail::opt_num(s, "spectral", "k", static_cast<double>(cfg.n_eigenvalues)));
        if (cfg.n_eigenvalues < 1) cfg_fail("spectral.k", "must be >= 1");
    }

    if (root.contains("langevin")) {
        const json& l = root["langevin"];
        if (!l.is_object()) cfg_fail("langevin", "expected an object");
        detail::reject_unknown(l, "langevin", {"replicas", "horizon", "burn_in_fraction", "x0"});
        cfg.lg_replicas = static_cast<int>(
            detail::opt_num(l, "langevin", "replicas", static_cast<double>(cfg.lg_replicas)));
        if (cfg.lg_replicas < 1) cfg_fail("langevin.replicas", "must be >= 1");
        cfg.lg_horizon = detail::opt_num(l, "langevin", "horizon", cfg.lg_horizon);
        cfg.lg_burn_fraction =
            detail::opt_num(l, "langevin", "burn_in_fraction", cfg.lg_burn_fraction);
        if (!(cfg.lg_burn_fraction >= 0.0 && cfg.lg_burn_fraction < 1.0))
            cfg_fail("langevin.burn_in_fraction", "must be in [0, 1)");
        cfg.lg_x0 = detail::opt_num(l, "langevin", "x0", cfg.lg_x0);
    }

    if (root.contains("output")) {
        const json& o = root["output"];
        if (!o.is_object()) cfg_fail("output", "expected an object");
        detail::reject_unknown(o, "output", {"dir"});
        if (o.contains("dir")) cfg.out_dir = o["dir"].get<std::string>();
    }
    return cfg;
}

// Instantiate the configured model.
inline ModelBundle make_model(const RunConfig& cfg) {
    if (cfg.model_name == "gaussian") return make_gaussian(cfg.gaussian_mu, cfg.gaussian_sigma2);
    if (cfg.model_name == "cauchy") return make_cauchy();
    if (cfg.model_name == "ou-example")
        return make_ou_example(cfg.ou_nu, cfg.ou_tau2, cfg.ou_mu, cfg.ou_sigma2);
    if (cfg.model_name == "exponential-tail") return make_exponential_tail(cfg.beta);
    if (cfg.model_name == "custom") return make_custom(cfg.custom);
    throw configuration_error("config: model.name: unknown model '" + cfg.model_name + "'");
}

}  // namespace qsmc
