#include <doctest.h>

#include <cmath>

#include "absde/errors.hpp"
#include "absde/solver.hpp"

using namespace absde;

namespace {

NumericsSpec numerics(int n_T = 64, std::size_t n = 100000, std::uint64_t seed = 5) {
    NumericsSpec s;
    s.n_T = n_T;
    s.n_paths = n;
    s.seed = seed;
    return s;
}

ProblemSpec martingale() {
    ProblemSpec p;
    p.generator = make_builtin_generator("zero");
    p.terminal_xi = ExprTerminal::from_source("w");
    p.terminal_eta = ExprTerminal::from_source("1");
    return p;
}

}  // namespace

TEST_CASE("martingale integrand of simple targets") {
    const TimeGrid g = build_time_grid(1.0, 0.0, 64);
    const PathEnsemble e = simulate_brownian(g, 1, 100000, 8, false);
    const int i = 40;
    std::vector<double> next(e.n_paths);
    BasisSpec b;

    SUBCASE("Brownian motion itself") {
        for (std::size_t p = 0; p < e.n_paths; ++p) next[p] = e.W(i + 1, p);
        const MartingaleZ r = martingale_representation_z(next.data(), e.increment_row(i), e.state_row(i), e.n_paths, 1, b, g.h);
        double worst = 0;
        for (double z : r.z) worst = std::max(worst, std::fabs(z - 1.0));
        CHECK(worst <= 0.05);
    }
    SUBCASE("constant") {
        std::fill(next.begin(), next.end(), 2.5);
        const MartingaleZ r = martingale_representation_z(next.data(), e.increment_row(i), e.state_row(i), e.n_paths, 1, b, g.h);
        double worst = 0;
        for (double z : r.z) worst = std::max(worst, std::fabs(z));
        CHECK(worst <= 0.02);
    }
    SUBCASE("square") {
        for (std::size_t p = 0; p < e.n_paths; ++p) next[p] = e.W(i + 1, p) * e.W(i + 1, p);
        const MartingaleZ r = martingale_representation_z(next.data(), e.increment_row(i), e.state_row(i), e.n_paths, 1, b, g.h);
        double worst = 0;
        for (std::size_t p = 0; p < e.n_paths; ++p) {
            const double x = e.W(i, p);
            if (std::fabs(x) >= 0.25) worst = std::max(worst, std::fabs(r.z[p] - 2 * x) / std::fabs(2 * x));
        }
        CHECK(worst <= 0.05);
    }
}

TEST_CASE("martingale problem") {
    const DiscreteSolution s = solve_anticipated_lipschitz(martingale(), numerics());
    CHECK(std::fabs(s.Y0_mean) <= 3 * s.Y0_stderr);
    double worst = 0;
    for (int i = 0; i < s.grid.n_T; ++i)
        for (std::size_t p = 0; p < s.n_paths; ++p) worst = std::max(worst, std::fabs(s.z(i, p) - 1.0));
    CHECK(worst <= 0.05);
}

TEST_CASE("constant driver telescopes") {
    ProblemSpec p;
    p.generator = make_builtin_generator("constant", {{"c", 1.5}});
    p.terminal_xi = ExprTerminal::from_source("0");
    p.terminal_eta = ExprTerminal::from_source("0");
    const DiscreteSolution s = solve_anticipated_lipschitz(p, numerics(32, 2000));
    for (int i = 0; i <= s.grid.n_T; ++i)
        for (std::size_t q = 0; q < s.n_paths; q += 97) CHECK(std::fabs(s.y(i, q) - 1.5 * (1.0 - s.grid.time(i))) <= 1e-12);
}

TEST_CASE("anticipated mean closed form") {
    ProblemSpec p;
    p.K = 1.0;
    p.delta_shift = DelaySpec::constant(1.0);
    p.zeta_shift = DelaySpec::constant(1.0);
    p.generator = make_builtin_generator("anticipated_mean");
    p.terminal_xi = ExprTerminal::from_source("1");
    p.terminal_eta = ExprTerminal::from_source("0");
    const DiscreteSolution s = solve_anticipated_lipschitz(p, numerics());
    CHECK(std::fabs(s.Y0_mean - 2.0) <= 0.01 * 2.0);
    // Y_t = 1 + (T - t) along the whole horizon
    for (int i = 0; i <= s.grid.n_T; i += 8) CHECK(s.y(i, 0) == doctest::Approx(2.0 - s.grid.time(i)).epsilon(1e-9));
}

TEST_CASE("terminal block holds the extension exactly") {
    ProblemSpec p;
    p.K = 0.5;
    p.delta_shift = DelaySpec::constant(0.5);
    p.zeta_shift = DelaySpec::constant(0.5);
    p.generator = ExprGenerator::from_source("0.5*sin(y) + E[ydelta]");
    p.terminal_xi = ExprTerminal::from_source("sin(w) + t");
    p.terminal_eta = ExprTerminal::from_source("cos(w)");
    const DiscreteSolution s = solve_anticipated_lipschitz(p, numerics(16, 4000));
    for (int i = s.grid.n_T; i <= s.grid.n_total; ++i)
        for (std::size_t q = 0; q < s.n_paths; q += 131) {
            const double w = s.paths->W(i, q), t = s.grid.time(i);
            CHECK(s.y(i, q) == std::sin(w) + t);
            CHECK(s.z(i, q) == std::cos(w));
        }
    for (double v : s.Y) CHECK(std::isfinite(v));
}

TEST_CASE("same seed, same tables") {
    const DiscreteSolution a = solve_anticipated_lipschitz(martingale(), numerics(16, 10000, 3));
    const DiscreteSolution b = solve_anticipated_lipschitz(martingale(), numerics(16, 10000, 3));
    CHECK(a.Y == b.Y);
    CHECK(a.Z == b.Z);
}

TEST_CASE("explicit and implicit schemes agree on a smooth driver") {
    ProblemSpec p;
    p.generator = ExprGenerator::from_source("0.5*sin(y) + 0.2*z");
    p.terminal_xi = ExprTerminal::from_source("cos(w)");
    p.terminal_eta = ExprTerminal::from_source("0");
    NumericsSpec n = numerics(64, 20000);
    const DiscreteSolution a = solve_anticipated_lipschitz(p, n);
    n.scheme = Scheme::Implicit;
    const DiscreteSolution b = solve_anticipated_lipschitz(p, n);
    CHECK(std::fabs(a.Y0_mean - b.Y0_mean) <= 0.01);
}

TEST_CASE("multi-dimensional solve") {
    ProblemSpec p;
    p.m = 2;
    p.d = 2;
    p.generator = make_builtin_generator("example_3_3", {}, 2, 2);
    p.terminal_xi = ExprTerminal::from_source("0.01*sin(w1)", 2);
    p.terminal_eta = ExprTerminal::from_source("0", 4);
    const DiscreteSolution s = solve_anticipated_lipschitz(p, numerics(16, 5000));
    CHECK(s.Y.size() == static_cast<std::size_t>(s.grid.n_total + 1) * 5000 * 2);
    for (double v : s.Y) CHECK(std::isfinite(v));
}
