#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "absde/errors.hpp"
#include "absde/quadratic.hpp"

using namespace absde;

namespace {

NumericsSpec numerics(int n_T = 32, std::size_t n = 20000, std::uint64_t seed = 5) {
    NumericsSpec s;
    s.n_T = n_T;
    s.n_paths = n;
    s.seed = seed;
    return s;
}

TerminalPtr term(const char* s) { return ExprTerminal::from_source(s); }

bool has_warning(const DiscreteSolution& s, const std::string& prefix) {
    return std::any_of(s.warnings.begin(), s.warnings.end(), [&](const std::string& w) { return w.rfind(prefix, 0) == 0; });
}

}  // namespace

TEST_CASE("inner step roots") {
    SUBCASE("driver independent of y") {
        const GeneratorPtr g = ExprGenerator::from_source("3 + z^2");
        CHECK(inner_quadratic_step(0.5, 0.1, 2.0, nullptr, *g, 0.0, 1e-12, 50) == doctest::Approx(0.5 + 0.1 * 7.0).epsilon(1e-12));
    }
    SUBCASE("linear driver") {
        const GeneratorPtr g = ExprGenerator::from_source("y");
        CHECK(inner_quadratic_step(1.0, 0.25, 0.0, nullptr, *g, 0.0, 1e-13, 50) == doctest::Approx(1.0 / 0.75).epsilon(1e-12));
    }
    SUBCASE("quadratic driver, smaller root") {
        // y = 1 + 0.1 y^2  ->  y = (1 - sqrt(0.6)) / 0.2
        const GeneratorPtr g = ExprGenerator::from_source("y^2");
        int iters = 0;
        const double y = inner_quadratic_step(1.0, 0.1, 0.0, nullptr, *g, 0.0, 1e-13, 50, &iters);
        CHECK(y == doctest::Approx((1.0 - std::sqrt(0.6)) / 0.2).epsilon(1e-11));
        CHECK(y == doctest::Approx(1.1270).epsilon(1e-4));
        CHECK(iters > 0);
    }
    SUBCASE("quadratic driver at the double root") {
        // y = 1 + y^2 / 4 has the single root y = 2
        const GeneratorPtr g = ExprGenerator::from_source("y^2");
        CHECK(inner_quadratic_step(1.0, 0.25, 0.0, nullptr, *g, 0.0, 1e-12, 200) == doctest::Approx(2.0).epsilon(1e-5));
    }
    SUBCASE("no real root") {
        const GeneratorPtr g = ExprGenerator::from_source("y^2");
        CHECK_THROWS_AS(inner_quadratic_step(2.0, 0.25, 0.0, nullptr, *g, 0.0, 1e-12, 50), Error);
    }
}

TEST_CASE("small-data Picard on the zero fixed point") {
    ProblemSpec p;
    p.generator = make_builtin_generator("example_3_3");
    p.terminal_xi = term("0");
    p.terminal_eta = term("0");
    const QuadraticSolveResult r = solve_picard_small(p, numerics(16, 5000));
    CHECK(r.outer_iterations == 1);
    CHECK(r.certified);
    for (double v : r.solution.Y) CHECK(v == 0.0);
    for (double v : r.solution.Z) CHECK(v == 0.0);
}

TEST_CASE("small-data Picard contracts inside the ball") {
    ProblemSpec p;
    p.generator = make_builtin_generator("example_3_3");
    p.constants.L = 1.0;
    const double rho = std::sqrt(double(thm34_constants(1.0, 1.0, 1.0, 0.0, {}).rho2));
    p.terminal_xi = ExprTerminal::from_source(std::to_string(rho / 2));
    p.terminal_eta = term("0");
    OuterSpec o;
    o.tol = 1e-12;
    const QuadraticSolveResult r = solve_picard_small(p, numerics(), o);
    CHECK(r.certified);
    REQUIRE(r.diagnostics.contraction);
    CHECK(r.diagnostics.contraction->geometric);
    CHECK(r.diagnostics.contraction->fitted_rate < 1.0);
    REQUIRE(r.diagnostics.ball);
    CHECK(r.diagnostics.ball->member);
}

TEST_CASE("large terminal is solved but not certified") {
    ProblemSpec p;
    p.generator = make_builtin_generator("example_3_3");
    p.terminal_xi = term("10");
    p.terminal_eta = term("0");
    OuterSpec o;
    o.max_iter = 3;
    try {
        const QuadraticSolveResult r = solve_picard_small(p, numerics(16, 2000), o);
        CHECK_FALSE(r.certified);
        CHECK(has_warning(r.solution, "CertificationFailed"));
    } catch (const OuterDivergence& e) {
        const auto& w = e.warnings();
        CHECK(std::any_of(w.begin(), w.end(), [](const std::string& s) { return s.rfind("CertificationFailed", 0) == 0; }));
    }
}

TEST_CASE("local contraction with a zero driver is the Lipschitz solve") {
    ProblemSpec p;
    p.generator = make_builtin_generator("zero");
    p.terminal_xi = term("sin(w)");
    p.terminal_eta = term("0");
    OuterSpec o;
    o.t_lo = 0.0;
    const NumericsSpec n = numerics(16, 5000);
    const QuadraticSolveResult r = solve_local_contraction(p, n, o);
    const DiscreteSolution s = solve_anticipated_lipschitz(p, n);
    double worst = 0;
    for (std::size_t k = 0; k < s.Y.size(); ++k) worst = std::max(worst, std::fabs(r.solution.Y[k] - s.Y[k]));
    CHECK(worst <= 1e-12);
}

TEST_CASE("local window wider than certified") {
    ProblemSpec p;
    p.K = 0.5;
    p.delta_shift = DelaySpec::constant(0.5);
    p.zeta_shift = DelaySpec::constant(0.5);
    p.generator = make_builtin_generator("example_4_3", {{"alpha", 0.5}});
    p.constants.alpha_holder = 0.5;
    p.terminal_xi = term("0.1");
    p.terminal_eta = term("0");
    OuterSpec o;
    o.t_lo = 0.5;
    const QuadraticSolveResult r = solve_local_contraction(p, numerics(16, 5000), o);
    CHECK_FALSE(r.certified);
    CHECK(has_warning(r.solution, "CertificationFailed"));
    CHECK(r.outer_diffs.back() <= o.tol);
    REQUIRE(r.outer_diffs.size() >= 2);
    CHECK(r.outer_diffs[1] < r.outer_diffs[0]);
}

TEST_CASE("global stitch under the barrier") {
    ProblemSpec p;
    p.K = 0.5;
    p.delta_shift = DelaySpec::constant(0.5);
    p.zeta_shift = DelaySpec::constant(0.5);
    p.generator = make_builtin_generator("example_4_7");
    p.constants.C = 2.0;
    p.terminal_xi = term("0.5");
    p.terminal_eta = term("0");
    const QuadraticSolveResult r = solve_global_stitch(p, numerics(16, 5000));
    REQUIRE(r.diagnostics.barrier);
    CHECK(r.diagnostics.barrier->holds);
    CHECK(r.diagnostics.window_edges.front() == 16);
    CHECK(r.diagnostics.window_edges.back() == 0);
    CHECK(std::isfinite(r.solution.Y0_mean));
}

TEST_CASE("single stitch window equals one local solve") {
    ProblemSpec p;
    p.generator = make_builtin_generator("quadratic_z");
    p.terminal_xi = term("0.3*sin(w)");
    p.terminal_eta = term("0");
    const NumericsSpec n = numerics(16, 5000);
    OuterSpec o;
    o.window_steps = n.n_T;
    o.barrier_slack = 1e6;
    const QuadraticSolveResult a = solve_global_stitch(p, n, o);
    o.t_lo = 0.0;
    const QuadraticSolveResult b = solve_local_contraction(p, n, o);
    CHECK(a.solution.Y == b.solution.Y);
}

TEST_CASE("pure quadratic driver: stitch against transform") {
    ProblemSpec p;
    p.generator = make_builtin_generator("quadratic_z");
    p.terminal_xi = term("0");
    p.terminal_eta = term("0");
    // explicit Euler on the transformed linear driver is O(h): n_T = 64 keeps it near 1.5%
    const NumericsSpec n = numerics(64, 10000);
    const QuadraticSolveResult a = solve_global_stitch(p, n);
    ProblemSpec q = p;
    q.generator = make_builtin_generator("constant", {{"c", 1.0}});
    q.lambda_term = std::make_shared<ConstantLambda>(1.0);
    const QuadraticSolveResult b = solve_transform(q, n);
    CHECK(std::fabs(a.solution.Y0_mean - b.solution.Y0_mean) <= 0.02 * std::max(1.0, std::fabs(b.solution.Y0_mean)));
    CHECK(a.solution.Y0_mean == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("transform with zero lambda is the Lipschitz solve") {
    ProblemSpec p;
    p.generator = ExprGenerator::from_source("0.5*sin(y) + 0.1*z");
    p.lambda_term = std::make_shared<ConstantLambda>(0.0);
    p.terminal_xi = term("sin(w)");
    p.terminal_eta = term("0");
    const NumericsSpec n = numerics(16, 5000);
    const QuadraticSolveResult a = solve_transform(p, n);
    const DiscreteSolution b = solve_anticipated_lipschitz(p, n);
    CHECK(a.solution.Y == b.Y);
    CHECK(a.solution.Z == b.Z);
}

TEST_CASE("unbounded terminal through the transform is stable in the path count") {
    ProblemSpec p;
    p.K = 0.5;
    p.delta_shift = DelaySpec::constant(0.5);
    p.zeta_shift = DelaySpec::constant(0.5);
    p.generator = make_builtin_generator("example_5_5");
    p.lambda_term = make_builtin_lambda("example_5_5");
    p.terminal_xi = term("w");
    p.terminal_eta = term("1");
    const QuadraticSolveResult a = solve_transform(p, numerics(32, 20000, 1));
    const QuadraticSolveResult b = solve_transform(p, numerics(32, 40000, 2));
    CHECK(std::isfinite(a.solution.Y0_mean));
    CHECK(std::fabs(a.solution.Y0_mean - b.solution.Y0_mean) <=
          3 * std::hypot(a.solution.Y0_stderr, b.solution.Y0_stderr));
}

TEST_CASE("strategy choice") {
    ProblemSpec p;
    p.terminal_eta = ExprTerminal::from_source("0");

    p.generator = make_builtin_generator("example_3_3");
    p.terminal_xi = term("0.001");
    Thm34Norms small{0.001, 0.0, 0.0};
    CHECK(choose_strategy(p, applicability_report(p, small)) == Strategy::PicardSmall);

    p.generator = ExprGenerator::from_source("0.5*sin(y) + z");
    p.terminal_xi = term("w");
    CHECK(choose_strategy(p, applicability_report(p, {1.0, 0.0, 0.0})) == Strategy::Lipschitz);

    p.generator = make_builtin_generator("example_5_5");
    p.lambda_term = make_builtin_lambda("example_5_5");
    CHECK(choose_strategy(p, applicability_report(p, {1.0, 0.0, 0.0})) == Strategy::Transform);

    CHECK_THROWS_AS(solve_with_strategy(Strategy::Manual, p, numerics()), Error);
}
