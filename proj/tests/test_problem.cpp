#include <doctest.h>

#include <cmath>

#include "absde/errors.hpp"
#include "absde/problem.hpp"

using namespace absde;

TEST_CASE("time grid without extension") {
    const TimeGrid g = build_time_grid(1.0, 0.0, 4);
    CHECK(g.n_total == 4);
    const std::vector<double> t = g.times();
    REQUIRE(t.size() == 5);
    CHECK(t[0] == 0.0);
    CHECK(t[1] == 0.25);
    CHECK(t[2] == 0.5);
    CHECK(t[3] == 0.75);
    CHECK(t[4] == 1.0);
}

TEST_CASE("time grid with extension") {
    const TimeGrid g = build_time_grid(1.0, 0.5, 4);
    CHECK(g.h == 0.25);
    CHECK(g.n_total == 6);
    CHECK(g.time(g.n_T) == 1.0);
    CHECK(g.time(g.n_total) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("non-commensurate extension is rejected") {
    CHECK_THROWS_AS(build_time_grid(1.0, 0.3, 4), NonCommensurateHorizon);
    CHECK_THROWS_AS(build_time_grid(1.0, 0.0, 0), InvalidArgument);
}

TEST_CASE("snapping an exact constant delay") {
    const TimeGrid g = build_time_grid(1.0, 0.5, 4);
    const DelayMap m = snap_delay(g, DelaySpec::constant(0.5));
    CHECK(m.shift_index[0] == 2);
    CHECK(m.max_snap_error() < 1e-12);
    CHECK(m.warnings.empty());
}

TEST_CASE("delay reaching the horizon end") {
    // delta(t) = (T + K) - t maps every slice to T + K
    const TimeGrid g = build_time_grid(1.0, 1.0, 4);
    const DelayMap m = snap_delay(g, DelaySpec::affine(2.0, -1.0));
    CHECK(m.shift_index[2] == 8);
    for (int j : m.shift_index) CHECK(j == 8);
}

TEST_CASE("off-grid delay snaps to the nearest point with a warning") {
    const TimeGrid g = build_time_grid(1.0, 0.5, 4);
    const DelayMap m = snap_delay(g, DelaySpec::constant(0.3));
    CHECK(m.shift_index[0] == 1);
    CHECK(m.snap_errors[0] == doctest::Approx(0.05));
    CHECK_FALSE(m.warnings.empty());
    CHECK(m.max_snap_error() <= g.h / 2);
}

TEST_CASE("anticipation never looks backward") {
    const TimeGrid g = build_time_grid(1.0, 0.5, 8);
    const DelayMap m = snap_delay(g, DelaySpec::constant(0.0));
    for (std::size_t i = 0; i < m.shift_index.size(); ++i) CHECK(m.shift_index[i] >= static_cast<int>(i));
}

TEST_CASE("delay density constants") {
    CHECK(delay_density_L(DelaySpec::constant(0.5)) == doctest::Approx(1.0));
    CHECK(delay_density_L(DelaySpec::affine(0.0, 1.0)) == doctest::Approx(0.5));
    CHECK(delay_density_L(DelaySpec::affine(0.5, -0.5)) == doctest::Approx(2.0));
    CHECK(delay_density_L(DelaySpec::tabulated({0.1, 0.2}, 3.0)) == 3.0);
}

TEST_CASE("problem validation") {
    ProblemSpec p;
    p.generator = make_builtin_generator("zero");
    p.terminal_xi = ExprTerminal::from_source("w");
    p.terminal_eta = ExprTerminal::from_source("1");
    CHECK_NOTHROW(p.validate());

    SUBCASE("delay beyond the horizon") {
        p.delta_shift = DelaySpec::constant(0.5);
        CHECK_THROWS_AS(p.validate(), HorizonViolation);
    }
    SUBCASE("holder exponent out of range") {
        p.constants.alpha_holder = 1.0;
        CHECK_THROWS_AS(p.validate(), InvalidArgument);
    }
    SUBCASE("terminal referencing a missing component") {
        p.terminal_xi = ExprTerminal::from_source("w2");
        CHECK_THROWS_AS(p.validate(), InvalidArgument);
    }
    SUBCASE("explicit L wins") {
        p.constants.L = 4.0;
        CHECK(p.L() == 4.0);
    }
}
