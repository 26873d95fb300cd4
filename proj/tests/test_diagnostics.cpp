#include <doctest.h>

#include <cmath>

#include "absde/diagnostics.hpp"
#include "absde/errors.hpp"

using namespace absde;

namespace {

// A solution table on a real ensemble with user-filled Y and Z.
DiscreteSolution blank(int n_T = 32, std::size_t n = 4000, double K = 0.0) {
    ProblemSpec p;
    p.K = K;
    p.generator = make_builtin_generator("zero");
    p.terminal_xi = ExprTerminal::from_source("0");
    p.terminal_eta = ExprTerminal::from_source("0");
    NumericsSpec num;
    num.n_T = n_T;
    num.n_paths = n;
    return solve_anticipated_lipschitz(p, num);
}

void fill_z(DiscreteSolution& s, double (*f)(double)) {
    for (int i = 0; i <= s.grid.n_total; ++i)
        for (std::size_t p = 0; p < s.n_paths; ++p) s.z_row(i)[p] = f(s.grid.time(i));
}

}  // namespace

TEST_CASE("Z^2 norm of deterministic integrands") {
    DiscreteSolution s = blank();
    SUBCASE("zero") {
        CHECK(z2_norm_estimate(s, BasisSpec{}).z_z2 == 0.0);
    }
    SUBCASE("constant") {
        fill_z(s, [](double) { return 0.7; });
        CHECK(std::fabs(z2_norm_estimate(s, BasisSpec{}).z_z2 - 0.49) <= 1e-10);
    }
    SUBCASE("linear in time") {
        fill_z(s, [](double t) { return t; });
        const NormReport r = z2_norm_estimate(s, BasisSpec{});
        CHECK(std::fabs(r.z_z2 - 1.0 / 3.0) <= 2 * s.grid.h);
        CHECK(r.per_slice_z2.front() == doctest::Approx(r.z_z2));
        CHECK_FALSE(r.bias_note.empty());
    }
}

TEST_CASE("a-priori bound") {
    ProblemSpec p;
    p.generator = make_builtin_generator("zero");
    p.terminal_xi = ExprTerminal::from_source("sin(w)");
    p.terminal_eta = ExprTerminal::from_source("0");
    NumericsSpec n;
    n.n_T = 32;
    n.n_paths = 20000;
    DiscreteSolution s = solve_anticipated_lipschitz(p, n);
    const AprioriReport ok = apriori_bound_check(s, {0.0}, 2.0, 0.0);
    CHECK(ok.holds);
    CHECK(ok.margin > 0);
    s.Y0_mean *= 10.0;
    s.Y0_mean += 5.0;
    CHECK_FALSE(apriori_bound_check(s, {0.0}, 2.0, 0.0).holds);
    CHECK_THROWS_AS(apriori_bound_check(s, {0.0, 1.0}, 2.0, 0.0), InvalidArgument);
}

TEST_CASE("ball membership") {
    DiscreteSolution s = blank();
    const Thm34Bundle b34 = thm34_constants(1, 1, 1, 0, {});
    CHECK(ball_membership(s, b34, BasisSpec{}).member);

    Thm44Params p;
    p.C = 0.2;
    p.T = 1.0;
    const Thm44Bundle b44 = thm44_constants(p, {0.05, 0.0});
    CHECK(ball_membership(s, b44, p, 0, BasisSpec{}).member);

    // Z scaled far beyond A fails on the Z condition
    fill_z(s, [](double) { return 100.0; });
    const MembershipReport bad = ball_membership(s, b44, p, 0, BasisSpec{});
    CHECK_FALSE(bad.member);
    bool z_item_failed = false;
    for (const auto& it : bad.items)
        if (it.name.find("A") != std::string::npos && !it.holds) z_item_failed = true;
    CHECK(z_item_failed);
    CHECK_FALSE(ball_membership(s, b34, BasisSpec{}).member);
}

TEST_CASE("contraction reports") {
    const ContractionReport g = contraction_report({1, 0.5, 0.25, 0.125});
    REQUIRE(g.ratios.size() == 3);
    for (double r : g.ratios) CHECK(r == doctest::Approx(0.5));
    CHECK(g.geometric);
    CHECK(g.fitted_rate == doctest::Approx(0.5));
    CHECK_FALSE(contraction_report({1, 2, 4}).geometric);
    CHECK_THROWS(contraction_report({1, 0.5}));
}

TEST_CASE("barrier check") {
    DiscreteSolution s = blank(16, 1000);
    const Thm48Bundle b = thm48_alpha(1.0, 1.0, 1.0, 0.0);
    CHECK(barrier_check(s, b, 0.1).holds);
    s.y_row(16)[3] = 1.2;  // 1.44 > 1.1 * alpha(T) = 1.1
    const BarrierReport r = barrier_check(s, b, 0.1);
    CHECK_FALSE(r.holds);
    CHECK(r.worst_slice == 16);
    CHECK(r.worst_ratio == doctest::Approx(1.44));
}

TEST_CASE("terminal norm estimates") {
    ProblemSpec p;
    p.K = 0.5;
    p.generator = make_builtin_generator("constant", {{"c", 2.0}});
    p.terminal_xi = ExprTerminal::from_source("0.3");
    p.terminal_eta = ExprTerminal::from_source("0.5");
    NumericsSpec n;
    n.n_T = 16;
    n.n_paths = 2000;
    const DiscreteSolution s = solve_anticipated_lipschitz(p, n);
    const Thm34Norms t = estimate_terminal_norms(p, s, n.basis);
    CHECK(t.xi_sup == doctest::Approx(0.3));
    CHECK(t.eta_z2 == doctest::Approx(0.5 * std::sqrt(0.5)));
    CHECK(t.f0_int == doctest::Approx(2.0));
}
