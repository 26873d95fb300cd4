#include <doctest.h>

#include <cmath>
#include <random>

#include "absde/condexp.hpp"
#include "absde/paths.hpp"

using namespace absde;

namespace {
std::vector<double> normals(std::size_t n, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, sd);
    std::vector<double> v(n);
    for (double& x : v) x = N(rng);
    return v;
}
}  // namespace

TEST_CASE("identity target is reproduced") {
    const auto x = normals(10000, 1);
    BasisSpec b;
    b.degree = 1;
    const CondEstimator est = fit_conditional(x, x, b);
    CHECK(est.diagnostics().residual_rms <= 1e-10);
    CHECK(apply_conditional(est, 0.7) == doctest::Approx(0.7).epsilon(1e-10));
}

TEST_CASE("quadratic coefficient under noise") {
    const auto x = normals(100000, 2);
    const auto noise = normals(100000, 3, 0.01);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i] + noise[i];
    BasisSpec b;
    b.degree = 2;
    const auto mono = fit_conditional(x, y, b).monomial_coefficients();
    REQUIRE(mono.size() == 3);
    CHECK(std::fabs(mono[2] - 1.0) <= 0.01);
}

TEST_CASE("constant targets regress exactly") {
    const auto x = normals(5000, 4);
    const std::vector<double> y(x.size(), 3.25);
    for (BasisKind kind : {BasisKind::Polynomial, BasisKind::Binned}) {
        BasisSpec b;
        b.kind = kind;
        const CondEstimator est = fit_conditional(x, y, b);
        for (double s : {-3.0, -0.1, 0.0, 2.5, 10.0}) CHECK(std::fabs(apply_conditional(est, s) - 3.25) <= 1e-12);
    }
}

TEST_CASE("conditional second moment of Brownian motion") {
    const TimeGrid g = build_time_grid(1.0, 0.0, 4);
    const PathEnsemble e = simulate_brownian(g, 1, 100000, 9, false);
    const int i = 2;
    std::vector<double> s(e.n_paths), y(e.n_paths);
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        s[p] = e.W(i, p);
        y[p] = e.W(g.n_T, p) * e.W(g.n_T, p);
    }
    BasisSpec b;
    b.degree = 2;
    const CondEstimator est = fit_conditional(s, y, b);
    CHECK(apply_conditional(est, 1.5) == doctest::Approx(2.25 + 0.5).epsilon(0.02));
}

TEST_CASE("flat tails when clipping") {
    const auto x = normals(20000, 5);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i] * x[i];
    BasisSpec b;
    b.clip = 2.0;
    const CondEstimator est = fit_conditional(x, y, b);
    CHECK(apply_conditional(est, 8.0) == apply_conditional(est, 20.0));
    CHECK(fit_conditional(x, y, BasisSpec{}).apply(8.0) == doctest::Approx(512.0).epsilon(1e-8));
}

TEST_CASE("nested Monte Carlo oracle") {
    ProblemSpec p;
    const TimeGrid g = build_time_grid(1.0, 0.0, 8);
    const std::size_t n = 20000;
    const int i = 3;
    const double tau = g.T - g.time(i);
    const double x = 0.4;
    const double m1 = nested_mc_oracle(p, g, i, {x}, [](const double* w) { return w[0]; }, n, 1);
    CHECK(std::fabs(m1 - x) <= 4.0 / std::sqrt(double(n)) * std::sqrt(tau));
    const double m2 = nested_mc_oracle(p, g, i, {x}, [](const double* w) { return w[0] * w[0]; }, n, 2);
    CHECK(std::fabs(m2 - (x * x + tau)) <= 5.0 * std::sqrt(2 * tau * tau + 4 * x * x * tau) / std::sqrt(double(n)));
}

TEST_CASE("regression against the oracle on an exponential payoff") {
    const TimeGrid g = build_time_grid(1.0, 0.0, 4);
    const PathEnsemble e = simulate_brownian(g, 1, 100000, 21, false);
    const int i = 1;
    std::vector<double> s(e.n_paths), y(e.n_paths);
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        s[p] = e.W(i, p);
        y[p] = std::exp(e.W(g.n_T, p));
    }
    BasisSpec b;
    b.degree = 5;
    const CondEstimator est = fit_conditional(s, y, b);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);  // two standard deviations of W at slice i
    const double tau = g.T - g.time(i);
    ProblemSpec p;
    for (int k = 0; k < 20; ++k) {
        const double x = U(rng);
        const double exact = std::exp(x + tau / 2);
        const double oracle = nested_mc_oracle(p, g, i, {x}, [](const double* w) { return std::exp(w[0]); }, 20000, 100 + k);
        const double mc = 5.0 * exact * std::sqrt(std::exp(tau) - 1) / std::sqrt(20000.0);
        CHECK(std::fabs(est.apply(x) - oracle) <= mc + 0.02 * exact);
    }
}

TEST_CASE("joint regression recovers the martingale integrand") {
    const TimeGrid g = build_time_grid(1.0, 0.0, 16);
    const PathEnsemble e = simulate_brownian(g, 1, 100000, 17, false);
    const int i = 8;
    const SliceRegression base(e.state_row(i), e.n_paths, 1, BasisSpec{});
    const JointRegression joint(base, e.increment_row(i), 1, g.h);
    std::vector<double> target(e.n_paths), mean(e.n_paths), z(e.n_paths);
    for (std::size_t p = 0; p < e.n_paths; ++p) target[p] = e.W(i + 1, p) * e.W(i + 1, p);
    joint.fit(target.data(), mean.data(), z.data());
    double worst = 0;
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        const double x = e.W(i, p);
        if (std::fabs(x) > 0.3 && std::fabs(x) < 2.0) worst = std::max(worst, std::fabs(z[p] - 2 * x) / (2 * std::fabs(x)));
    }
    CHECK(worst <= 0.05);
}
