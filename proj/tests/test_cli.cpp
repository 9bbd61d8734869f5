// Config parsing and end-to-end CLI behavior: JSON schema validation with
// unknown-key rejection, the shipped presets, exit codes (0 success,
// 1 configuration error, 2 assumption flag, 3 statistical failure), CSV
// artifact schemas, and byte-identical reruns.  End-to-end cases invoke the
// qslab binary (QSLAB_BIN) through the shell and inspect its artifacts in a
// scratch directory.

#include <catch2/catch_amalgamated.hpp>
#include <qsmc/qsmc.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using namespace qsmc;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace fs = std::filesystem;

namespace {

// Per-run scratch directory, wiped once at first use.
const fs::path& scratch() {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() / "qsmc-cli-tests";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream out(p, std::ios::binary);
    REQUIRE(out);
    out << text;
    return p;
}

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

// Run `qslab <args>`, capturing exit code, stdout and stderr.
CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path so = scratch() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path se = scratch() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = std::string("\"") + QSLAB_BIN + "\" " + args + " > \"" +
                            so.string() + "\" 2> \"" + se.string() + "\"";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    if (raw != -1 && WIFEXITED(raw)) r.code = WEXITSTATUS(raw);
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

// Parse a CSV of numbers (header skipped); empty fields become NaN.
std::vector<std::vector<double>> csv_rows(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::string line;
    REQUIRE(std::getline(in, line));  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ','))
            row.push_back(field.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : std::stod(field));
        if (line.back() == ',') row.push_back(std::numeric_limits<double>::quiet_NaN());
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

}  // namespace

// --- parse_config ------------------------------------------------------------

TEST_CASE("parse_config: empty document yields the documented defaults") {
    const RunConfig cfg = parse_config("{}");
    CHECK(cfg.model_name == "ou-example");
    CHECK(cfg.ou_nu == 2.0);
    CHECK(cfg.ou_tau2 == 4.0);
    CHECK(cfg.ou_mu == -1.0);
    CHECK(cfg.ou_sigma2 == 2.0);
    CHECK_FALSE(cfg.K_override.has_value());
    CHECK_FALSE(cfg.search_box.has_value());
    CHECK_FALSE(cfg.quad_box.has_value());
    CHECK(cfg.tol == 1e-10);
    CHECK(cfg.quad_tol == 1e-8);
    CHECK(cfg.dt == 0.01);
    CHECK(cfg.scheme == Scheme::euler);
    CHECK(cfg.replicas == 10000);
    CHECK(cfg.horizon == 10.0);
    CHECK(cfg.checkpoints.empty());
    CHECK(cfg.seed == 1);
    CHECK(cfg.x0 == Vec{0.0});
    CHECK_FALSE(cfg.x0_is_target);
    CHECK(cfg.histogram_bins == 0);
    CHECK(cfg.grid.lo == -20.0);
    CHECK(cfg.grid.hi == 15.0);
    CHECK(cfg.grid.n == 2000);
    CHECK(cfg.n_eigenvalues == 4);
    CHECK(cfg.lg_replicas == 4);
    CHECK(cfg.lg_horizon == 200.0);
    CHECK(cfg.lg_burn_fraction == 0.5);
    CHECK(cfg.lg_x0 == 0.0);
    CHECK(cfg.out_dir == "out");
}

TEST_CASE("parse_config: rejects unknown keys at every level") {
    const char* bad[] = {
        R"({"bogus": {}})",
        R"({"model": {"name": "gaussian", "sd": 1}})",
        R"({"model": {"name": "cauchy", "scale": 2}})",
        R"({"killing": {"K": 1}})",
        R"({"killing": {"search_box": {"lo": [0], "hi": [1], "mid": [0]}}})",
        R"({"scheme": {"dt": 0.01, "method": "euler"}})",
        R"({"ensemble": {"paths": 5}})",
        R"({"spectral": {"m": 3}})",
        R"({"langevin": {"thin": 2}})",
        R"({"output": {"file": "x"}})",
    };
    for (const char* text : bad)
        CHECK_THROWS_MATCHES(parse_config(text), configuration_error,
                             Catch::Matchers::MessageMatches(
                                 ContainsSubstring("unknown key")));

    // the diagnostic names the offending path
    CHECK_THROWS_MATCHES(parse_config(R"({"ensemble": {"paths": 5}})"), configuration_error,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("ensemble.paths")));
}

TEST_CASE("parse_config: malformed documents") {
    CHECK_THROWS_MATCHES(parse_config("{not json"), configuration_error,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("not valid JSON")));
    CHECK_THROWS_AS(parse_config("[1, 2]"), configuration_error);
    CHECK_THROWS_AS(parse_config(R"({"model": 3})"), configuration_error);
}

TEST_CASE("parse_config: search boxes in both accepted forms") {
    const RunConfig a = parse_config(R"({"killing": {"search_box": [-3, 7]}})");
    REQUIRE(a.search_box.has_value());
    CHECK(a.search_box->lo == Vec{-3.0});
    CHECK(a.search_box->hi == Vec{7.0});

    const RunConfig b = parse_config(
        R"({"killing": {"quad_box": {"lo": [-1, -2], "hi": [3, 4]}}})");
    REQUIRE(b.quad_box.has_value());
    CHECK(b.quad_box->lo == (Vec{-1.0, -2.0}));
    CHECK(b.quad_box->hi == (Vec{3.0, 4.0}));

    CHECK_THROWS_AS(parse_config(R"({"killing": {"search_box": [1]}})"),
                    configuration_error);
    CHECK_THROWS_AS(parse_config(R"({"killing": {"search_box": {"lo": [0]}}})"),
                    configuration_error);
    CHECK_THROWS_AS(parse_config(R"({"killing": {"search_box": "wide"}})"),
                    configuration_error);
    // Box invariant lo < hi is enforced on construction
    CHECK_THROWS_AS(parse_config(R"({"killing": {"search_box": [5, -5]}})"),
                    configuration_error);
}

TEST_CASE("parse_config: x0 forms and the integer seed") {
    CHECK(parse_config(R"({"ensemble": {"x0": 3}})").x0 == Vec{3.0});
    CHECK(parse_config(R"({"ensemble": {"x0": [1, 2]}})").x0 == (Vec{1.0, 2.0}));

    const RunConfig t = parse_config(R"({"ensemble": {"x0": "target"}})");
    CHECK(t.x0_is_target);

    CHECK_THROWS_MATCHES(parse_config(R"({"ensemble": {"x0": "prior"}})"),
                         configuration_error,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("only \"target\"")));

    CHECK(parse_config(R"({"ensemble": {"seed": 20240901}})").seed == 20240901);
    CHECK_THROWS_MATCHES(parse_config(R"({"ensemble": {"seed": 1.5}})"),
                         configuration_error,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("expected an integer")));
}

TEST_CASE("parse_config: model sections") {
    const RunConfig g = parse_config(
        R"({"model": {"name": "gaussian", "mu": [0, 1], "sigma2": [2, 3]}})");
    CHECK(g.model_name == "gaussian");
    CHECK(g.gaussian_mu == (Vec{0.0, 1.0}));
    CHECK(g.gaussian_sigma2 == (Vec{2.0, 3.0}));
    CHECK_THROWS_MATCHES(
        parse_config(R"({"model": {"name": "gaussian", "mu": [0, 1], "sigma2": 2}})"),
        configuration_error,
        Catch::Matchers::MessageMatches(ContainsSubstring("equal length")));

    const RunConfig ou = parse_config(
        R"({"model": {"name": "ou-example", "nu": 1, "tau2": 9, "mu": 0, "sigma2": 3}})");
    CHECK(ou.ou_nu == 1.0);
    CHECK(ou.ou_tau2 == 9.0);
    CHECK(ou.ou_mu == 0.0);
    CHECK(ou.ou_sigma2 == 3.0);

    CHECK(parse_config(R"({"model": {"name": "exponential-tail", "beta": 2.5}})").beta ==
          2.5);

    const RunConfig c = parse_config(R"({"model": {"name": "custom", "dim": 1,
        "U": "-x1^2/4", "U_grad": ["-x1/2"], "U_lap": "-1/2"}})");
    CHECK(c.custom.U == "-x1^2/4");
    CHECK(c.custom.U_grad == std::vector<std::string>{"-x1/2"});
    CHECK(c.custom.U_lap == "-1/2");
    CHECK_THROWS_MATCHES(
        parse_config(R"({"model": {"name": "custom", "U": "-x1^2"}})"), configuration_error,
        Catch::Matchers::MessageMatches(ContainsSubstring("needs U, U_grad and U_lap")));

    CHECK_THROWS_MATCHES(parse_config(R"({"model": {"name": "levy"}})"), configuration_error,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("unknown model")));
    CHECK_THROWS_AS(parse_config(R"({"model": {}})"), configuration_error);
}

TEST_CASE("parse_config: scheme, ensemble, spectral and langevin validation") {
    CHECK(parse_config(R"({"scheme": {"type": "exact_ou"}})").scheme == Scheme::exact_ou);
    CHECK(parse_config(R"({"scheme": {"type": "exact_bm"}})").scheme == Scheme::exact_bm);
    CHECK_THROWS_AS(parse_config(R"({"scheme": {"type": "rk4"}})"), configuration_error);
    CHECK_THROWS_MATCHES(parse_config(R"({"scheme": {"dt": 0}})"), configuration_error,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("must be > 0")));

    CHECK(parse_config(R"({"ensemble": {"checkpoints": [1, 2.5]}})").checkpoints ==
          (Vec{1.0, 2.5}));
    CHECK(parse_config(R"({"ensemble": {"histogram_bins": 50}})").histogram_bins == 50);
    CHECK_THROWS_MATCHES(parse_config(R"({"ensemble": {"replicas": 0}})"),
                         configuration_error,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("must be >= 1")));

    const RunConfig s = parse_config(R"({"spectral": {"lo": -5, "hi": 5, "n": 100, "k": 2}})");
    CHECK(s.grid.lo == -5.0);
    CHECK(s.grid.hi == 5.0);
    CHECK(s.grid.n == 100);
    CHECK(s.n_eigenvalues == 2);
    CHECK_THROWS_AS(parse_config(R"({"spectral": {"k": 0}})"), configuration_error);

    const RunConfig l = parse_config(
        R"({"langevin": {"replicas": 2, "horizon": 50, "burn_in_fraction": 0.25, "x0": -2}})");
    CHECK(l.lg_replicas == 2);
    CHECK(l.lg_horizon == 50.0);
    CHECK(l.lg_burn_fraction == 0.25);
    CHECK(l.lg_x0 == -2.0);
    CHECK_THROWS_MATCHES(parse_config(R"({"langevin": {"burn_in_fraction": 1}})"),
                         configuration_error,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("must be in [0, 1)")));
    CHECK_THROWS_AS(parse_config(R"({"langevin": {"replicas": 0}})"), configuration_error);
}

TEST_CASE("parse_config: the shipped preset files parse to the documented runs") {
    const RunConfig f = parse_config(slurp(fs::path(PRESETS_DIR) / "figure1.json"));
    CHECK(f.model_name == "ou-example");
    CHECK(f.ou_nu == 2.0);
    CHECK(f.ou_tau2 == 4.0);
    CHECK(f.ou_mu == -1.0);
    CHECK(f.ou_sigma2 == 2.0);
    REQUIRE(f.search_box.has_value());
    CHECK(f.search_box->lo == Vec{-50.0});
    REQUIRE(f.quad_box.has_value());
    CHECK(f.quad_box->hi == Vec{60.0});
    CHECK(f.replicas == 500000);
    CHECK(f.horizon == 20.0);
    CHECK(f.checkpoints == (Vec{1.0, 5.0, 10.0, 20.0}));
    CHECK(f.seed == 20240901);
    CHECK(f.x0 == Vec{3.0});
    CHECK(f.grid.n == 2000);
    CHECK(f.lg_x0 == -2.0);
    CHECK(f.out_dir == "out-figure1");

    const RunConfig g = parse_config(slurp(fs::path(PRESETS_DIR) / "gaussian-bm.json"));
    CHECK(g.model_name == "gaussian");
    CHECK(g.gaussian_mu == Vec{0.0});
    CHECK(g.gaussian_sigma2 == Vec{1.0});
    CHECK(g.seed == 20240902);
    CHECK(g.out_dir == "out-gaussian-bm");

    const RunConfig c = parse_config(slurp(fs::path(PRESETS_DIR) / "cauchy-bm.json"));
    CHECK(c.model_name == "cauchy");
    REQUIRE(c.quad_box.has_value());
    CHECK(c.quad_box->lo == Vec{-1000.0});
    CHECK(c.seed == 20240903);
}

// --- end-to-end exit codes -----------------------------------------------------

TEST_CASE("qslab check: clean models exit 0 and report their integrals") {
    const fs::path outdir = scratch() / "check-figure1";
    const CliResult r = run_cli("check --preset figure1 --out \"" + outdir.string() + "\"");
    CHECK(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("all assumptions pass"));

    const nlohmann::json rep = nlohmann::json::parse(slurp(outdir / "assumptions.json"));
    CHECK(rep.at("l2_finite").get<bool>());
    CHECK_THAT(rep.at("l2_integral").get<double>(),
               WithinRel(12.971823335346798, 1e-7));  // e^{3/2} sqrt(8 pi / 3)
    CHECK_THAT(rep.at("kappa_lower_bound").get<double>(),
               WithinRel(-17.0 / 64.0, 1e-6));
    CHECK(rep.at("violations").empty());
    CHECK(fs::exists(outdir / "report.json"));

    // spectral-gap caveat flagged as a warning, not a violation: still exit 0
    const fs::path outc = scratch() / "check-cauchy";
    const CliResult rc = run_cli("check --preset cauchy-bm --out \"" + outc.string() + "\"");
    CHECK(rc.code == 0);
    const nlohmann::json repc = nlohmann::json::parse(slurp(outc / "assumptions.json"));
    CHECK(repc.at("violations").empty());
    CHECK_FALSE(repc.at("warnings").empty());

    const CliResult rg = run_cli("check --preset gaussian-bm --out \"" +
                                 (scratch() / "check-gauss").string() + "\"");
    CHECK(rg.code == 0);
}

TEST_CASE("qslab exit code 1: configuration errors") {
    // neither --config nor --preset
    CHECK(run_cli("check").code == 1);
    // both at once
    const fs::path cfg = write_config("cfg_ok.json", R"({"model": {"name": "cauchy"}})");
    const CliResult both =
        run_cli("check --config \"" + cfg.string() + "\" --preset figure1");
    CHECK(both.code == 1);
    CHECK_THAT(both.err, ContainsSubstring("exactly one of --config and --preset"));
    // unknown preset
    CHECK(run_cli("check --preset figure2").code == 1);
    // unreadable config path
    CHECK(run_cli("check --config /nonexistent/nope.json").code == 1);
    // malformed JSON
    const fs::path bad = write_config("cfg_bad.json", "{not json");
    const CliResult rb = run_cli("check --config \"" + bad.string() + "\"");
    CHECK(rb.code == 1);
    CHECK_THAT(rb.err, ContainsSubstring("not valid JSON"));
    // schema violation
    const fs::path unk = write_config("cfg_unknown.json", R"({"ensemble": {"paths": 3}})");
    CHECK(run_cli("check --config \"" + unk.string() + "\"").code == 1);
    // valid config, but the subcommand's required section is unusable
    const fs::path nocp = write_config(
        "cfg_nocp.json",
        R"({"model": {"name": "ou-example"}, "ensemble": {"replicas": 10, "horizon": 1}})");
    const CliResult rn = run_cli("simulate --config \"" + nocp.string() + "\" --out \"" +
                                 (scratch() / "sim-nocp").string() + "\"");
    CHECK(rn.code == 1);
    CHECK_THAT(rn.err, ContainsSubstring("checkpoints"));
    // x0 dimension mismatch surfaces as a config-family error
    const fs::path xdim = write_config(
        "cfg_xdim.json",
        R"({"model": {"name": "ou-example"},
            "ensemble": {"replicas": 10, "horizon": 1, "checkpoints": [1], "x0": [1, 2]}})");
    CHECK(run_cli("simulate --config \"" + xdim.string() + "\" --out \"" +
                  (scratch() / "sim-xdim").string() + "\"")
              .code == 1);
}

TEST_CASE("qslab exit code 2: assumption flags") {
    // tau2 <= sigma2 breaks the standing assumptions (confinement too weak)
    const fs::path cfg = write_config(
        "cfg_thin_tail.json",
        R"({"model": {"name": "ou-example", "nu": 2, "tau2": 1, "mu": -1, "sigma2": 2}})");

    const CliResult chk = run_cli("check --config \"" + cfg.string() + "\" --out \"" +
                                  (scratch() / "check-thin").string() + "\"");
    CHECK(chk.code == 2);
    CHECK_THAT(chk.out, ContainsSubstring("assumption check FAILED"));

    const CliResult kap = run_cli("kappa --config \"" + cfg.string() + "\" --out \"" +
                                  (scratch() / "kappa-thin").string() + "\"");
    CHECK(kap.code == 2);
    CHECK_THAT(kap.err, ContainsSubstring("assumption flag"));
}

TEST_CASE("qslab exit code 3: ensemble extinct before the first checkpoint") {
    const fs::path cfg = write_config(
        "cfg_extinct.json",
        R"({"model": {"name": "ou-example"},
            "killing": {"K_override": 50},
            "scheme": {"dt": 0.01},
            "ensemble": {"replicas": 300, "horizon": 1, "checkpoints": [1],
                         "seed": 5, "x0": -1}})");
    const CliResult r = run_cli("simulate --config \"" + cfg.string() + "\" --out \"" +
                                (scratch() / "sim-extinct").string() + "\"");
    CHECK(r.code == 3);
    CHECK_THAT(r.err, ContainsSubstring("statistical failure"));
}

// --- end-to-end artifacts ------------------------------------------------------

TEST_CASE("qslab simulate: schemas, reruns and worker counts are byte-identical") {
    const fs::path cfg = write_config(
        "cfg_sim.json",
        R"({"model": {"name": "ou-example"},
            "killing": {"search_box": [-50, 50]},
            "scheme": {"dt": 0.01, "type": "euler"},
            "ensemble": {"replicas": 2000, "horizon": 1, "checkpoints": [0.5, 1],
                         "seed": 7, "x0": 3}})");
    const fs::path da = scratch() / "simA";
    const fs::path db = scratch() / "simB";
    const fs::path dc = scratch() / "simC";
    const fs::path dd = scratch() / "simD";

    const CliResult a = run_cli("simulate --config \"" + cfg.string() + "\" --out \"" +
                                da.string() + "\" --sample-paths 2");
    REQUIRE(a.code == 0);

    // documented CSV schemas
    const std::string surv = slurp(da / "survival.csv");
    CHECK(first_line(surv) == "t,p_hat,stderr");
    CHECK(first_line(slurp(da / "moments.csv")) == "t,n_survivors,mean,var,se_mean,se_var");
    CHECK(first_line(slurp(da / "law_t0.5.csv")) == "bin_lo,bin_hi,count,density");
    CHECK(first_line(slurp(da / "law_t1.csv")) == "bin_lo,bin_hi,count,density");

    // survival curve: one row per step plus the header, p_hat(1) near the
    // Feynman-Kac value S(1, 3) ~ 0.1635
    const auto rows = csv_rows(da / "survival.csv");
    REQUIRE(rows.size() == 101);
    CHECK(rows.front()[0] == 0.0);
    CHECK(rows.front()[1] == 1.0);
    CHECK(rows.back()[0] == 1.0);
    CHECK(rows.back()[1] > 0.10);
    CHECK(rows.back()[1] < 0.23);

    // path dumps: exact start row, monotone times
    const std::string p0 = slurp(da / "path_r0.csv");
    CHECK(first_line(p0) == "t,x_1");
    CHECK(p0.find("\n0,3\n") != std::string::npos);
    CHECK(fs::exists(da / "path_r1.csv"));

    // rerun: byte-identical artifacts
    REQUIRE(run_cli("simulate --config \"" + cfg.string() + "\" --out \"" + db.string() +
                    "\"").code == 0);
    CHECK(slurp(db / "survival.csv") == surv);
    CHECK(slurp(db / "moments.csv") == slurp(da / "moments.csv"));
    CHECK(slurp(db / "law_t0.5.csv") == slurp(da / "law_t0.5.csv"));
    CHECK(slurp(db / "law_t1.csv") == slurp(da / "law_t1.csv"));

    // worker count may not change any output byte
    REQUIRE(run_cli("simulate --config \"" + cfg.string() + "\" --out \"" + dc.string() +
                    "\" --workers 3").code == 0);
    CHECK(slurp(dc / "survival.csv") == surv);
    CHECK(slurp(dc / "moments.csv") == slurp(da / "moments.csv"));
    CHECK(slurp(dc / "law_t1.csv") == slurp(da / "law_t1.csv"));

    // --seed overrides the config and changes the draw
    REQUIRE(run_cli("simulate --config \"" + cfg.string() + "\" --out \"" + dd.string() +
                    "\" --seed 8").code == 0);
    CHECK(slurp(dd / "survival.csv") != surv);
}

TEST_CASE("qslab kappa: tabulated rate matches the closed forms") {
    // gaussian target, sigma2 = 2: kappa = y^2/8, K = 1/4
    const fs::path gcfg = write_config(
        "cfg_kappa_gauss.json",
        R"({"model": {"name": "gaussian", "mu": 0, "sigma2": 2},
            "killing": {"search_box": [-20, 20]},
            "spectral": {"lo": -4, "hi": 4, "n": 17}})");
    const fs::path gd = scratch() / "kappa-gauss";
    REQUIRE(run_cli("kappa --config \"" + gcfg.string() + "\" --out \"" + gd.string() +
                    "\"").code == 0);
    CHECK(first_line(slurp(gd / "kappa.csv")) == "y,kappa_tilde,kappa");
    const auto grows = csv_rows(gd / "kappa.csv");
    REQUIRE(grows.size() == 17);
    for (std::size_t i = 0; i < grows.size(); ++i) {
        const double y = -4.0 + 0.5 * static_cast<double>(i);
        CHECK(grows[i][0] == y);  // dyadic grid: exact
        CHECK_THAT(grows[i][1], WithinAbs(y * y / 8.0 - 0.25, 1e-9));
        CHECK_THAT(grows[i][2], WithinAbs(y * y / 8.0, 1e-9));
    }
    CHECK(grows[8][2] == 0.0);  // kappa vanishes exactly at the minimizer y* = 0

    // the worked OU example: kappa = (y + 5/2)^2 / 16
    const fs::path ocfg = write_config(
        "cfg_kappa_ou.json",
        R"({"model": {"name": "ou-example"}, "spectral": {"lo": -4.5, "hi": 3.5, "n": 17}})");
    const fs::path od = scratch() / "kappa-ou";
    REQUIRE(run_cli("kappa --config \"" + ocfg.string() + "\" --out \"" + od.string() +
                    "\"").code == 0);
    const auto orows = csv_rows(od / "kappa.csv");
    REQUIRE(orows.size() == 17);
    for (std::size_t i = 0; i < orows.size(); ++i) {
        const double y = -4.5 + 0.5 * static_cast<double>(i);
        CHECK_THAT(orows[i][2], WithinAbs((y + 2.5) * (y + 2.5) / 16.0, 1e-12));
        CHECK_THAT(orows[i][2] - orows[i][1], WithinAbs(17.0 / 64.0, 1e-12));
    }
    CHECK(orows[4][2] == 0.0);  // y* = -5/2 is on the grid
    const nlohmann::json orep = nlohmann::json::parse(slurp(od / "report.json"));
    CHECK_THAT(orep.at("shift_K").get<double>(), WithinAbs(17.0 / 64.0, 1e-12));
    CHECK_THAT(orep.at("minimizer").get<double>(), WithinAbs(-2.5, 1e-6));

    // heavy tail: kappa_tilde = (3y^2 - 1)/(1 + y^2)^2, K = 1
    const fs::path ccfg = write_config(
        "cfg_kappa_cauchy.json",
        R"({"model": {"name": "cauchy"}, "spectral": {"lo": -2, "hi": 2, "n": 5}})");
    const fs::path cd = scratch() / "kappa-cauchy";
    REQUIRE(run_cli("kappa --config \"" + ccfg.string() + "\" --out \"" + cd.string() +
                    "\"").code == 0);
    const auto crows = csv_rows(cd / "kappa.csv");
    REQUIRE(crows.size() == 5);
    for (std::size_t i = 0; i < crows.size(); ++i) {
        const double y = -2.0 + static_cast<double>(i);
        const double kt = (3.0 * y * y - 1.0) / ((1.0 + y * y) * (1.0 + y * y));
        CHECK_THAT(crows[i][1], WithinAbs(kt, 1e-12));
        CHECK_THAT(crows[i][2], WithinAbs(kt + 1.0, 1e-9));
    }
    CHECK(crows[2][2] >= 0.0);
    CHECK_THAT(crows[2][2], WithinAbs(0.0, 1e-12));
}

TEST_CASE("qslab spectrum: CSV overlays the closed-form ladders") {
    // killed generator for the OU example: K + 3n/8
    const fs::path fd = scratch() / "spec-figure1";
    REQUIRE(run_cli("spectrum --preset figure1 --out \"" + fd.string() + "\"").code == 0);
    CHECK(first_line(slurp(fd / "spectrum.csv")) ==
          "index,numeric_eigenvalue,analytic_eigenvalue_if_known,abs_error");
    const auto frows = csv_rows(fd / "spectrum.csv");
    REQUIRE(frows.size() == 4);
    for (std::size_t n = 0; n < 4; ++n) {
        CHECK(frows[n][0] == static_cast<double>(n));
        CHECK(frows[n][2] == 17.0 / 64.0 + 3.0 * static_cast<double>(n) / 8.0);
        CHECK_THAT(frows[n][1], WithinRel(frows[n][2], 1e-3));
        CHECK(frows[n][3] < 1e-3);
    }

    // Brownian motion killed at y^2/2: harmonic-oscillator ladder (2n+1)/2
    const fs::path gd = scratch() / "spec-gauss";
    REQUIRE(run_cli("spectrum --preset gaussian-bm --out \"" + gd.string() + "\"").code == 0);
    const auto grows = csv_rows(gd / "spectrum.csv");
    REQUIRE(grows.size() == 4);
    for (std::size_t n = 0; n < 4; ++n) {
        CHECK(grows[n][2] == static_cast<double>(2 * n + 1) / 2.0);
        CHECK_THAT(grows[n][1], WithinRel(grows[n][2], 1e-3));
    }
    const nlohmann::json grep = nlohmann::json::parse(slurp(gd / "report.json"));
    CHECK(grep.at("max_rel_error").get<double>() < 1e-3);
}

TEST_CASE("qslab langevin: long-run moments near the Q-process law") {
    const fs::path cfg = write_config(
        "cfg_langevin.json",
        R"({"model": {"name": "ou-example"},
            "scheme": {"dt": 0.01},
            "langevin": {"replicas": 2, "horizon": 50, "burn_in_fraction": 0.5, "x0": -2}})");
    const fs::path dir = scratch() / "langevin";
    const CliResult r =
        run_cli("langevin --config \"" + cfg.string() + "\" --out \"" + dir.string() + "\"");
    REQUIRE(r.code == 0);
    CHECK(first_line(slurp(dir / "langevin.csv")) == "replica,n_samples,mean,variance");
    CHECK(csv_rows(dir / "langevin.csv").size() == 2);

    const nlohmann::json rep = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK_THAT(rep.at("analytic_mean").get<double>(), WithinRel(-2.0, 1e-12));
    CHECK_THAT(rep.at("analytic_variance").get<double>(), WithinRel(4.0 / 3.0, 1e-12));
    CHECK_THAT(rep.at("pooled_mean").get<double>(), WithinAbs(-2.0, 0.8));
    CHECK_THAT(rep.at("pooled_variance").get<double>(), WithinAbs(4.0 / 3.0, 0.8));
}

TEST_CASE("qslab: --preset and --config of the same document produce identical checks") {
    const fs::path a = scratch() / "eq-preset";
    const fs::path b = scratch() / "eq-config";
    REQUIRE(run_cli("check --preset figure1 --out \"" + a.string() + "\"").code == 0);
    REQUIRE(run_cli("check --config \"" + (fs::path(PRESETS_DIR) / "figure1.json").string() +
                    "\" --out \"" + b.string() + "\"").code == 0);
    CHECK(slurp(a / "assumptions.json") == slurp(b / "assumptions.json"));
}
