#pragma once

// Built-in (target, drift) pairs with hand-coded derivatives, plus the
// expression-driven "custom" model.  Each bundle also carries scalar (1-d)
// fast paths used by the simulation hot loops, and an exact sampler of the
// target density where one exists (needed to start ensembles at
// quasi-stationarity).
//
// Catalogue:
//   gaussian         product Gaussian target (mu_i, sigma2_i per axis), A == 0
//                    -> kappa_tilde = (1/2) sum_i ((y_i-mu_i)^2/sigma_i^4 - 1/sigma_i^2)
//   cauchy           1-d Cauchy target pi ~ 1/(1+y^2), A == 0
//                    -> kappa_tilde = (3y^2-1)/(1+y^2)^2
//   ou-example       1-d Gaussian target N(mu, sigma2) under an OU drift
//                    toward nu with stationary variance tau2 (A = -(nu-y)^2/(4 tau2))
//   exponential-tail 1-d smoothed exponential-tail target U = -beta*sqrt(1+y^2),
//                    A == 0; kappa_tilde -> beta^2/2 at infinity
//   custom           U and A given as expression strings with their
//                    derivatives supplied explicitly

#include <functional>
#include <map>
#include <string>

#include "common.hpp"
#include "expr.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace qsmc {

struct ModelBundle {
    std::string name;
    int dim = 1;
    TargetSpec target;
    DriftSpec drift;
    Box default_box;  // sensible search/quadrature box for this model
    std::map<std::string, double> params;

    // Scalar fast paths, non-null iff dim == 1.  They duplicate the generic
    // fields without vector plumbing; hot loops call these millions of times.
    std::function<double(double)> drift1;        // A'(y)
    std::function<double(double)> kappa_tilde1;  // kappa_tilde(y)
    std::function<double(double)> log_density1;  // U(y)

    // Exact draw from the (normalized) target density; null when unavailable.
    std::function<double(RngStream&)> sample_target1;
};

namespace detail {

inline ScalarField zero_field(int dim) {
    ScalarField f;
    f.dim = dim;
    f.name = "A";
    f.eval = [](const Vec&) { return 0.0; };
    f.grad = [dim](const Vec&) { return Vec(dim, 0.0); };
    f.laplacian = [](const Vec&) { return 0.0; };
    return f;
}

}  // namespace detail

// Product Gaussian target, Brownian dynamics (A == 0).  U is unnormalized:
// U(y) = -sum (y_i - mu_i)^2 / (2 sigma2_i).
inline ModelBundle make_gaussian(Vec mu, Vec sigma2) {
    if (mu.size() != sigma2.size() || mu.empty())
        throw configuration_error("gaussian model: mu/sigma2 size mismatch");
    for (double s : sigma2)
        if (!(s > 0.0)) throw configuration_error("gaussian model: sigma2 must be > 0");
    const int d = static_cast<int>(mu.size());

    ModelBundle m;
    m.name = "gaussian";
    m.dim = d;
    ScalarField U;
    U.dim = d;
    U.name = "U";
    U.eval = [mu, sigma2](const Vec& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const double z = y[i] - mu[i];
            s -= z * z / (2.0 * sigma2[i]);
        }
        return s;
    };
    U.grad = [mu, sigma2](const Vec& y) {
        Vec g(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) g[i] = -(y[i] - mu[i]) / sigma2[i];
        return g;
    };
    U.laplacian = [sigma2](const Vec&) {
        double s = 0.0;
        for (double v : sigma2) s -= 1.0 / v;
        return s;
    };
    m.target.log_density = U;
    m.drift = make_drift(detail::zero_field(d));

    Vec lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        lo[i] = mu[i] - 15.0 * std::sqrt(sigma2[i]);
        hi[i] = mu[i] + 15.0 * std::sqrt(sigma2[i]);
    }
    m.default_box = Box(lo, hi);
    if (d == 1) {
        const double mu0 = mu[0], s20 = sigma2[0];
        m.params = {{"mu", mu0}, {"sigma2", s20}};
        m.drift1 = [](double) { return 0.0; };
        m.kappa_tilde1 = [mu0, s20](double y) {
            const double z = y - mu0;
            return 0.5 * (z * z / (s20 * s20) - 1.0 / s20);
        };
        m.log_density1 = [mu0, s20](double y) {
            const double z = y - mu0;
            return -z * z / (2.0 * s20);
        };
        m.sample_target1 = [mu0, sd = std::sqrt(s20)](RngStream& rng) {
            return mu0 + sd * rng.normal();
        };
    }
    return m;
}

inline ModelBundle make_gaussian(double mu, double sigma2) {
    return make_gaussian(Vec{mu}, Vec{sigma2});
}

// 1-d Cauchy target pi ~ 1/(1+y^2), Brownian dynamics.
inline ModelBundle make_cauchy() {
    ModelBundle m;
    m.name = "cauchy";
    m.dim = 1;
    ScalarField U;
    U.dim = 1;
    U.name = "U";
    U.eval = [](const Vec& y) { return -std::log1p(y[0] * y[0]); };
    U.grad = [](const Vec& y) { return Vec{-2.0 * y[0] / (1.0 + y[0] * y[0])}; };
    U.laplacian = [](const Vec& y) {
        const double q = 1.0 + y[0] * y[0];
        return (2.0 * y[0] * y[0] - 2.0) / (q * q);
    };
    m.target.log_density = U;
    m.drift = make_drift(detail::zero_field(1));
    m.default_box = Box(-30.0, 30.0);
    m.drift1 = [](double) { return 0.0; };
    m.kappa_tilde1 = [](double y) {
        const double q = 1.0 + y * y;
        return (3.0 * y * y - 1.0) / (q * q);
    };
    m.log_density1 = [](double y) { return -std::log1p(y * y); };
    m.sample_target1 = [](RngStream& rng) {
        return std::tan(3.14159265358979323846 * (rng.uniform() - 0.5));
    };
    return m;
}

// 1-d Gaussian target N(mu, sigma2) under the OU drift toward nu with
// stationary variance tau2:  A(y) = -(nu-y)^2/(4 tau2), drift (nu-y)/(2 tau2).
// Requires tau2 > sigma2 for kappa_tilde to be bounded below (the underlying
// diffusion must have heavier tails than the target).
inline ModelBundle make_ou_example(double nu, double tau2, double mu, double sigma2) {
    if (!(tau2 > 0.0) || !(sigma2 > 0.0))
        throw configuration_error("ou-example: tau2 and sigma2 must be > 0");

    ModelBundle m;
    m.name = "ou-example";
    m.dim = 1;
    m.params = {{"nu", nu}, {"tau2", tau2}, {"mu", mu}, {"sigma2", sigma2}};

    ScalarField U;
    U.dim = 1;
    U.name = "U";
    U.eval = [mu, sigma2](const Vec& y) {
        const double z = y[0] - mu;
        return -z * z / (2.0 * sigma2);
    };
    U.grad = [mu, sigma2](const Vec& y) { return Vec{-(y[0] - mu) / sigma2}; };
    U.laplacian = [sigma2](const Vec&) { return -1.0 / sigma2; };
    m.target.log_density = U;

    ScalarField A;
    A.dim = 1;
    A.name = "A";
    A.eval = [nu, tau2](const Vec& y) {
        const double z = nu - y[0];
        return -z * z / (4.0 * tau2);
    };
    A.grad = [nu, tau2](const Vec& y) { return Vec{(nu - y[0]) / (2.0 * tau2)}; };
    A.laplacian = [tau2](const Vec&) { return -1.0 / (2.0 * tau2); };
    m.drift = make_drift(A);

    const double spread = 15.0 * std::sqrt(std::max(tau2, sigma2));
    m.default_box = Box(std::min(mu, nu) - spread, std::max(mu, nu) + spread);

    m.drift1 = [nu, tau2](double y) { return (nu - y) / (2.0 * tau2); };
    m.kappa_tilde1 = [nu, tau2, mu, sigma2](double y) {
        const double z = y - mu;
        return 0.5 * (z * z / (sigma2 * sigma2) - 1.0 / sigma2 +
                      (nu - y) * z / (tau2 * sigma2) + 1.0 / tau2);
    };
    m.log_density1 = [mu, sigma2](double y) {
        const double z = y - mu;
        return -z * z / (2.0 * sigma2);
    };
    m.sample_target1 = [mu, sd = std::sqrt(sigma2)](RngStream& rng) {
        return mu + sd * rng.normal();
    };
    return m;
}

// 1-d exponential-tail target, smoothed at the origin so pi stays C^2:
// U(y) = -beta sqrt(1+y^2), A == 0.  Off a compact set this behaves like
// pi ~ exp(-beta|y|) and kappa_tilde tends to beta^2/2, a positive constant,
// so the spectral-gap sufficient condition holds with a finite liminf.
inline ModelBundle make_exponential_tail(double beta) {
    if (!(beta > 0.0)) throw configuration_error("exponential-tail model: beta must be > 0");

    ModelBundle m;
    m.name = "exponential-tail";
    m.dim = 1;
    m.params = {{"beta", beta}};

    ScalarField U;
    U.dim = 1;
    U.name = "U";
    U.eval = [beta](const Vec& y) { return -beta * std::sqrt(1.0 + y[0] * y[0]); };
    U.grad = [beta](const Vec& y) {
        return Vec{-beta * y[0] / std::sqrt(1.0 + y[0] * y[0])};
    };
    U.laplacian = [beta](const Vec& y) {
        const double q = 1.0 + y[0] * y[0];
        return -beta / (q * std::sqrt(q));
    };
    m.target.log_density = U;
    m.drift = make_drift(detail::zero_field(1));
    m.default_box = Box(-40.0 / beta, 40.0 / beta);

    m.drift1 = [](double) { return 0.0; };
    m.kappa_tilde1 = [beta](double y) {
        const double q = 1.0 + y * y;
        const double r = std::sqrt(q);
        const double up = -beta * y / r;
        return 0.5 * (-beta / (q * r) + up * up);
    };
    m.log_density1 = [beta](double y) { return -beta * std::sqrt(1.0 + y * y); };
    // Rejection from the Laplace(0, 1/beta) envelope: since sqrt(1+y^2) >= |y|,
    // accept with probability exp(-beta(sqrt(1+y^2) - |y|)) <= 1.
    m.sample_target1 = [beta](RngStream& rng) {
        for (;;) {
            const double e = rng.exponential(beta);
            const double y = rng.uniform() < 0.5 ? -e : e;
            const double acc = std::exp(-beta * (std::sqrt(1.0 + y * y) - std::fabs(y)));
            if (rng.uniform() < acc) return y;
        }
    };
    return m;
}

// Expression-driven model: U and A given as strings, derivatives supplied as
// separate expressions (one gradient component per axis).
struct CustomModelSpec {
    int dim = 1;
    std::string U, U_lap;
    std::vector<std::string> U_grad;
    std::string A = "0", A_lap = "0";
    std::vector<std::string> A_grad;  // defaults to all-"0"
};

inline ModelBundle make_custom(const CustomModelSpec& cs) {
    if (cs.dim < 1) throw configuration_error("custom model: dim must be >= 1");
    if (static_cast<int>(cs.U_grad.size()) != cs.dim)
        throw configuration_error("custom model: U_grad needs one expression per axis");
    std::vector<std::string> a_grad = cs.A_grad;
    if (a_grad.empty()) a_grad.assign(cs.dim, "0");
    if (static_cast<int>(a_grad.size()) != cs.dim)
        throw configuration_error("custom model: A_grad needs one expression per axis");

    auto field_from = [&](const std::string& fname, const std::string& e,
                          const std::vector<std::string>& grad, const std::string& lap) {
        ScalarField f;
        f.dim = cs.dim;
        f.name = fname;
        Expr ev = Expr::parse(e);
        Expr lv = Expr::parse(lap);
        std::vector<Expr> gv;
        gv.reserve(grad.size());
        for (const auto& g : grad) gv.push_back(Expr::parse(g));
        f.eval = [ev](const Vec& y) { return ev.eval(y); };
        f.laplacian = [lv](const Vec& y) { return lv.eval(y); };
        f.grad = [gv](const Vec& y) {
            Vec out(gv.size());
            for (std::size_t i = 0; i < gv.size(); ++i) out[i] = gv[i].eval(y);
            return out;
        };
        return f;
    };

    ModelBundle m;
    m.name = "custom";
    m.dim = cs.dim;
    m.target.log_density = field_from("U", cs.U, cs.U_grad, cs.U_lap);
    m.drift = make_drift(field_from("A", cs.A, a_grad, cs.A_lap));
    m.default_box = Box(Vec(cs.dim, -20.0), Vec(cs.dim, 20.0));

    if (cs.dim == 1) {
        // Scalar fast paths re-parse the expressions and evaluate through
        // Expr::eval1, which allocates nothing and is safe to call on the
        // same object from many workers.
        const Expr ue = Expr::parse(cs.U);
        const Expr ug = Expr::parse(cs.U_grad[0]);
        const Expr ul = Expr::parse(cs.U_lap);
        const Expr ag = Expr::parse(a_grad[0]);
        const Expr al = Expr::parse(cs.A_lap);
        m.drift1 = [ag](double y) { return ag.eval1(y); };
        m.kappa_tilde1 = [ug, ul, ag, al](double y) {
            const double du = ug.eval1(y), da = ag.eval1(y);
            return 0.5 * (ul.eval1(y) + du * du - 2.0 * da * du - 2.0 * al.eval1(y));
        };
        m.log_density1 = [ue](double y) { return ue.eval1(y); };
    }
    return m;
}

}  // namespace qsmc
