#include <doctest.h>

#include <cmath>
#include <random>

#include "absde/constants.hpp"
#include "absde/errors.hpp"

using namespace absde;

TEST_CASE("small-data constants at the unit parameters") {
    const Thm34Bundle b = thm34_constants(1.0, 1.0, 1.0, 0.0, {});
    CHECK(b.M == 2048.0L);
    CHECK(b.rho2 == 1.0L / 32768.0L);
    CHECK(double(b.rho2) == 3.0517578125e-5);
    CHECK(double(b.beta_small) == doctest::Approx(32.0 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(b.admissible);
}

TEST_CASE("small-data identity over random parameters") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.1, 5.0);
    for (int k = 0; k < 100; ++k) {
        const Thm34Bundle b = thm34_constants(U(rng), U(rng), U(rng), U(rng) - 0.1, {});
        CHECK(std::fabs(double(b.rho2 * 16.0L * b.M - 1.0L)) <= 1e-15);
        CHECK(b.admissible);
    }
}

TEST_CASE("small-data admissibility follows the norms") {
    CHECK(thm34_constants(1, 1, 1, 0, {0.001, 0.0, 0.0}).admissible);
    CHECK_FALSE(thm34_constants(1, 1, 1, 0, {1.0, 0.0, 0.0}).admissible);
}

TEST_CASE("window constants at alpha = 0, gamma = 1") {
    Thm44Params p;
    p.C = 0.2;
    p.gamma = 1.0;
    p.alpha_holder = 0.0;
    p.L = 1.0;
    p.T = 0.5;
    p.K = 0.0;
    const Thm44Bundle b = thm44_constants(p, {0.05, 0.0});
    CHECK(double(b.mu1) == doctest::Approx(2.0));
    CHECK(double(b.mu2) == doctest::Approx(1.0));
    CHECK(b.eps > 0);
    CHECK(b.Delta >= 0);
    CHECK(b.identity_residual <= 1e-9L);
    CHECK(b.delta_aux * b.A < 1);
}

TEST_CASE("window constants over random admissible draws") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int found = 0;
    for (int k = 0; k < 400 && found < 20; ++k) {
        Thm44Params p;
        p.C = 0.1 + 0.9 * U(rng);
        p.gamma = 0.2 + 0.8 * U(rng);
        p.alpha_holder = 0.9 * U(rng);
        p.L = 1.0 + U(rng);
        p.T = 0.1 + 0.9 * U(rng);
        p.K = U(rng);
        try {
            const Thm44Bundle b = thm44_constants(p, {0.2 * U(rng), 0.2 * U(rng)});
            ++found;
            CHECK(b.Delta >= 0);
            CHECK(b.identity_residual <= 1e-9L);
        } catch (const OverflowRegime&) {
        } catch (const NoAdmissibleEps&) {
        }
    }
    CHECK(found == 20);
}

TEST_CASE("barrier closed form") {
    const Thm48Bundle b = thm48_alpha(1.0, 1.0, 1.0, 0.0);
    CHECK(b.alpha_bound(1.0) == 1.0L);
    CHECK(double(b.alpha_bound(0.0)) == doctest::Approx(4.0 / 3.0 * std::exp(3.0) - 1.0 / 3.0).epsilon(1e-14));
    CHECK(double(b.lambda_bar) == doctest::Approx(26.447382564250224).epsilon(1e-14));
    for (double t : {0.0, 0.13, 0.5, 0.77, 1.0})
        CHECK(std::fabs(double(b.alpha_bound(t) - alpha_bound_volterra(1.0, 1.0, 1.0, 0.0, t))) <= 1e-8);

    const Thm48Bundle e = thm48_alpha(6.0, 1.0, 1.0, 0.5);
    CHECK(e.alpha_bound(1.5) == 6.0L);
    for (double t : {0.0, 0.4, 1.2})
        CHECK(std::fabs(double(e.alpha_bound(t) - alpha_bound_volterra(6.0, 1.0, 1.0, 0.5, t))) <= 1e-8 * double(e.lambda_bar));
    CHECK(c_tilde_from(2.0, 0.5) == 6.0);
    CHECK(c_tilde_from(0.1, 2.0) == 4.0);
}

namespace {
ProblemSpec base(const char* gen, const char* xi) {
    ProblemSpec p;
    p.generator = ExprGenerator::from_source(gen);
    p.terminal_xi = ExprTerminal::from_source(xi);
    p.terminal_eta = ExprTerminal::from_source("0");
    return p;
}
}  // namespace

TEST_CASE("applicability verdicts") {
    SUBCASE("small-data generator with tiny terminal") {
        ProblemSpec p = base("0", "0.001");
        p.generator = make_builtin_generator("example_3_3");
        const ApplicabilityReport r = applicability_report(p, {0.001, 0.0, 0.0});
        CHECK(r.small_data_global.kind == VerdictKind::Applies);
    }
    SUBCASE("split generator with bounded terminal") {
        ProblemSpec p = base("0", "0.5");
        p.K = 0.5;
        p.delta_shift = DelaySpec::constant(0.5);
        p.zeta_shift = DelaySpec::constant(0.5);
        p.generator = make_builtin_generator("example_4_7");
        const ApplicabilityReport r = applicability_report(p, {0.5, 0.0, 2.0});
        CHECK(r.bounded_global.kind == VerdictKind::Applies);
        CHECK(r.small_data_global.kind == VerdictKind::Fails);
    }
    SUBCASE("unclassified generator") {
        const ApplicabilityReport r = applicability_report(base("y*z", "0"), {});
        CHECK(r.small_data_global.kind == VerdictKind::NotCheckable);
        CHECK(r.bounded_local.kind == VerdictKind::NotCheckable);
        CHECK(r.bounded_global.kind == VerdictKind::NotCheckable);
        CHECK(r.unbounded_transform.kind == VerdictKind::NotCheckable);
    }
    SUBCASE("unbounded terminal through the transform") {
        ProblemSpec p = base("0", "w");
        p.generator = make_builtin_generator("example_5_5");
        p.lambda_term = make_builtin_lambda("example_5_5");
        const ApplicabilityReport r = applicability_report(p, {});
        CHECK(r.unbounded_transform.kind == VerdictKind::Applies);
        CHECK(r.small_data_global.kind == VerdictKind::Fails);
    }
}

TEST_CASE("terminal boundedness and lambda integrability") {
    CHECK(terminal_bounded(*ExprTerminal::from_source("sin(w) + 2")));
    CHECK_FALSE(terminal_bounded(*ExprTerminal::from_source("w")));
    CHECK(lambda_integrable(*make_builtin_lambda("example_5_5"), 1.0));
    CHECK_FALSE(lambda_integrable(ConstantLambda(0.5), 1.0));
}
