#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <qsmc/builtin.hpp>
#include <qsmc/dynamics.hpp>
#include <qsmc/rng.hpp>
#include <qsmc/stats.hpp>

using namespace qsmc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DriftFn zero_drift() {
    return [](const Vec& y) { return Vec(y.size(), 0.0); };
}

DriftFn ou_example_drift() {
    // grad A for A = -(nu-y)^2/(4 tau2), nu = 2, tau2 = 4: (2 - y)/8
    return [](const Vec& y) { return Vec{(2.0 - y[0]) / 8.0}; };
}

}  // namespace

TEST_CASE("euler_step worked examples") {
    // no drift: pure Brownian increment, exact in floating point for
    // dyadic dt (sqrt(0.25) = 0.5 exactly)
    const Vec bm = euler_step(zero_drift(), {1.5}, 0.25, {2.0});
    CHECK(bm[0] == 2.5);

    // OU-example drift at x = 3, dt = 0.01, no noise:
    // 3 + (2-3)/8 * 0.01 = 2.99875
    const Vec ou = euler_step(ou_example_drift(), {3.0}, 0.01, {0.0});
    CHECK_THAT(ou[0], WithinRel(2.99875, 1e-15));

    // step is affine in the noise: subtracting the noiseless step leaves
    // exactly sqrt(dt) * z up to one rounding of the final sum
    RngStream rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const double x = 4.0 * (2.0 * rng.uniform() - 1.0);
        const double z = rng.normal();
        const double dt = 0.01 + rng.uniform();
        const Vec with = euler_step(ou_example_drift(), {x}, dt, {z});
        const Vec without = euler_step(ou_example_drift(), {x}, dt, {0.0});
        const double want = std::sqrt(dt) * z;
        REQUIRE_THAT(with[0] - without[0],
                     WithinAbs(want, 4e-16 * (std::fabs(x) + std::fabs(want) + 1.0)));
    }
}

TEST_CASE("euler_step validates its inputs") {
    CHECK_THROWS_AS(euler_step(zero_drift(), {0.0}, 0.0, {0.0}), parameter_error);
    CHECK_THROWS_AS(euler_step(zero_drift(), {0.0}, -0.1, {0.0}), parameter_error);

    DriftFn wrong_dim = [](const Vec&) { return Vec{1.0, 2.0}; };
    CHECK_THROWS_AS(euler_step(wrong_dim, {0.0}, 0.1, {0.0}), evaluation_error);

    DriftFn blows_up = [](const Vec& y) {
        return Vec{std::numeric_limits<double>::quiet_NaN() * y[0]};
    };
    CHECK_THROWS_AS(euler_step(blows_up, {1.0}, 0.1, {0.0}), evaluation_error);
}

TEST_CASE("ou_exact_step worked examples") {
    // dt = 0: identity regardless of the noise draw (sd = 0)
    CHECK(ou_exact_step(2.0, 4.0, 3.0, 0.0, 1.7) == 3.0);

    // nu = 2, tau2 = 4, x = 3, dt = 8, no noise: 2 + e^{-8/8}
    CHECK_THAT(ou_exact_step(2.0, 4.0, 3.0, 8.0, 0.0), WithinRel(2.0 + std::exp(-1.0), 1e-15));

    CHECK_THROWS_AS(ou_exact_step(2.0, 0.0, 3.0, 1.0, 0.0), parameter_error);
    CHECK_THROWS_AS(ou_exact_step(2.0, -4.0, 3.0, 1.0, 0.0), parameter_error);
    CHECK_THROWS_AS(ou_exact_step(2.0, 4.0, 3.0, -1.0, 0.0), parameter_error);
}

TEST_CASE("ou_exact_step transition moments match the closed form") {
    const double nu = 2.0, tau2 = 4.0, x0 = 3.0;
    RngStream rng(21);
    const std::size_t n = 100000;

    SECTION("finite dt") {
        const double dt = 1.0;
        const double mean_want = nu + (x0 - nu) * std::exp(-dt / (2.0 * tau2));
        const double var_want = tau2 * (1.0 - std::exp(-dt / tau2));
        Vec xs(n);
        for (std::size_t i = 0; i < n; ++i)
            xs[i] = ou_exact_step(nu, tau2, x0, dt, rng.normal());
        const MomentSummary s = summarize_moments(xs, 1);
        CHECK_THAT(s.mean[0], WithinAbs(mean_want, 4.0 * std::sqrt(var_want / double(n))));
        CHECK_THAT(s.variance[0],
                   WithinAbs(var_want, 4.0 * var_want * std::sqrt(2.0 / double(n))));
    }

    SECTION("large dt forgets the start and lands on N(nu, tau2)") {
        const double dt = 1e9;
        Vec xs(n);
        for (std::size_t i = 0; i < n; ++i)
            xs[i] = ou_exact_step(nu, tau2, x0, dt, rng.normal());
        const MomentSummary s = summarize_moments(xs, 1);
        CHECK_THAT(s.mean[0], WithinAbs(nu, 4.0 * std::sqrt(tau2 / double(n))));
        CHECK_THAT(s.variance[0], WithinAbs(tau2, 4.0 * tau2 * std::sqrt(2.0 / double(n))));
        CHECK(ks_statistic(xs, [&](double x) { return normal_cdf(x, nu, tau2); }) < 0.01);
    }
}

TEST_CASE("langevin_drift is grad U - grad A") {
    const ModelBundle ou = make_ou_example(2.0, 4.0, -1.0, 2.0);
    const DriftFn lv = langevin_drift(ou.target, ou.drift);
    // grad U - grad A = -(y+1)/2 - (2-y)/8 = -(3/8)(y+2): the Q-process
    // drifts toward -2, not toward the target mean -1.
    for (double y : {-5.0, -2.0, 0.0, 1.0, 4.0}) {
        CHECK_THAT(lv({y})[0], WithinAbs(-(3.0 / 8.0) * (y + 2.0), 1e-13));
    }

    // A == 0: the Q-process is plain Langevin for pi^2, drift = grad U
    const ModelBundle g = make_gaussian(0.0, 2.0);
    const DriftFn lg = langevin_drift(g.target, g.drift);
    for (double y : {-3.0, 0.5, 2.0}) CHECK_THAT(lg({y})[0], WithinRel(-y / 2.0, 1e-13));
}

TEST_CASE("simulate_path grid construction") {
    SchemeConfig cfg;
    cfg.dt = 0.25;
    RngStream rng(31);

    SECTION("horizon a whole multiple of dt") {
        const PathGrid g = simulate_path(zero_drift(), {0.0}, 0.75, cfg, rng);
        REQUIRE(g.times.size() == 4);
        REQUIRE(g.states.size() == 4);
        CHECK(g.times[0] == 0.0);
        CHECK(g.times[1] == 0.25);
        CHECK(g.times[2] == 0.5);
        CHECK(g.times[3] == 0.75);
    }

    SECTION("truncated final step lands exactly on the horizon") {
        const PathGrid g = simulate_path(zero_drift(), {0.0}, 0.6, cfg, rng);
        REQUIRE(g.times.size() == 4);
        CHECK(g.times[2] == 0.5);
        CHECK(g.times.back() == 0.6);
        for (std::size_t i = 1; i < g.times.size(); ++i) REQUIRE(g.times[i] > g.times[i - 1]);
    }

    SECTION("parameter validation") {
        CHECK_THROWS_AS(simulate_path(zero_drift(), {0.0}, 0.0, cfg, rng), parameter_error);
        SchemeConfig bad = cfg;
        bad.dt = 0.0;
        CHECK_THROWS_AS(simulate_path(zero_drift(), {0.0}, 1.0, bad, rng), parameter_error);
    }
}

TEST_CASE("simulate_path is deterministic in the stream coordinates") {
    SchemeConfig cfg;
    cfg.dt = 0.01;
    RngStream a(7, 3, stream_purpose::path);
    RngStream b(7, 3, stream_purpose::path);
    const PathGrid ga = simulate_path(ou_example_drift(), {3.0}, 2.0, cfg, a);
    const PathGrid gb = simulate_path(ou_example_drift(), {3.0}, 2.0, cfg, b);
    REQUIRE(ga.states.size() == gb.states.size());
    for (std::size_t i = 0; i < ga.states.size(); ++i)
        REQUIRE(ga.states[i][0] == gb.states[i][0]);

    RngStream c(7, 4, stream_purpose::path);  // different substream differs
    const PathGrid gc = simulate_path(ou_example_drift(), {3.0}, 2.0, cfg, c);
    CHECK(gc.states.back()[0] != ga.states.back()[0]);
}

TEST_CASE("exact schemes verify the supplied drift") {
    RngStream rng(41);
    SchemeConfig cfg;
    cfg.dt = 0.1;
    cfg.scheme = Scheme::exact_ou;
    cfg.ou_nu = 2.0;
    cfg.ou_tau2 = 4.0;

    // consistent OU drift: accepted
    CHECK_NOTHROW(simulate_path(ou_example_drift(), {3.0}, 0.5, cfg, rng));
    // multi-dimensional state: rejected
    CHECK_THROWS_AS(simulate_path(zero_drift(), {0.0, 0.0}, 0.5, cfg, rng),
                    configuration_error);
    // zero drift is not the OU drift
    CHECK_THROWS_AS(simulate_path(zero_drift(), {3.0}, 0.5, cfg, rng), configuration_error);

    SchemeConfig bm = cfg;
    bm.scheme = Scheme::exact_bm;
    CHECK_NOTHROW(simulate_path(zero_drift(), {3.0}, 0.5, bm, rng));
    CHECK_THROWS_AS(simulate_path(ou_example_drift(), {3.0}, 0.5, bm, rng),
                    configuration_error);
}

TEST_CASE("scheme names") {
    CHECK(std::string(scheme_name(Scheme::euler)) == "euler");
    CHECK(std::string(scheme_name(Scheme::exact_ou)) == "exact_ou");
    CHECK(std::string(scheme_name(Scheme::exact_bm)) == "exact_bm");
}

TEST_CASE("euler endpoint law converges to the exact OU transition") {
    // X_0 = 3, horizon 1, OU(nu=2, tau2=4): X_1 ~ N(2 + e^{-1/8}, 4(1-e^{-1/4}))
    const double nu = 2.0, tau2 = 4.0, x0 = 3.0, horizon = 1.0;
    const double mean = nu + (x0 - nu) * std::exp(-horizon / (2.0 * tau2));
    const double var = tau2 * (1.0 - std::exp(-horizon / tau2));
    auto cdf = [&](double x) { return normal_cdf(x, mean, var); };

    const std::size_t n = 10000;

    SchemeConfig exact;
    exact.dt = 0.05;
    exact.scheme = Scheme::exact_ou;
    exact.ou_nu = nu;
    exact.ou_tau2 = tau2;
    Vec end_exact(n);
    for (std::size_t r = 0; r < n; ++r) {
        RngStream rng(99, r, stream_purpose::path);
        end_exact[r] = simulate_path(ou_example_drift(), {x0}, horizon, exact, rng)
                           .states.back()[0];
    }
    // composing exact transitions is exact: only MC noise remains
    CHECK(ks_statistic(end_exact, cdf) < 0.02);

    SchemeConfig euler;
    euler.dt = 1e-3;
    Vec end_euler(n);
    for (std::size_t r = 0; r < n; ++r) {
        RngStream rng(99, r, stream_purpose::path);
        end_euler[r] = simulate_path(ou_example_drift(), {x0}, horizon, euler, rng)
                           .states.back()[0];
    }
    CHECK(ks_statistic(end_euler, cdf) < 0.02);
}
