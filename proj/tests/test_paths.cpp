#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numeric>

#include "absde/errors.hpp"
#include "absde/paths.hpp"

using namespace absde;

TEST_CASE("increments have the right moments") {
    const TimeGrid g = build_time_grid(1.0, 0.0, 8);
    const std::size_t n = 100000;
    const PathEnsemble e = simulate_brownian(g, 1, n, 42, false);
    for (int i = 0; i < g.n_total; ++i) {
        double s = 0, s2 = 0;
        for (std::size_t p = 0; p < n; ++p) {
            s += e.dW(i, p);
            s2 += e.dW(i, p) * e.dW(i, p);
        }
        const double mean = s / n, var = s2 / n - mean * mean;
        CHECK(std::fabs(mean) <= 4 * std::sqrt(g.h / n));
        CHECK(std::fabs(var - g.h) <= 0.1 * g.h);
    }
}

TEST_CASE("states are prefix sums of increments") {
    const PathEnsemble e = simulate_brownian(build_time_grid(1.0, 0.5, 4), 2, 100, 3, false);
    CHECK(e.n_steps == 6);
    for (std::size_t p = 0; p < e.n_paths; ++p)
        for (int k = 0; k < 2; ++k) {
            CHECK(e.W(0, p, k) == 0.0);
            double w = 0;
            for (int i = 0; i < e.n_steps; ++i) {
                w += e.dW(i, p, k);
                CHECK(e.W(i + 1, p, k) == w);
            }
        }
}

TEST_CASE("seeding is deterministic") {
    const TimeGrid g = build_time_grid(1.0, 0.0, 16);
    const PathEnsemble a = simulate_brownian(g, 1, 5000, 42, false);
    const PathEnsemble b = simulate_brownian(g, 1, 5000, 42, false);
    const PathEnsemble c = simulate_brownian(g, 1, 5000, 43, false);
    CHECK(a.increments == b.increments);
    CHECK(a.increments != c.increments);
}

TEST_CASE("antithetic pairs") {
    const PathEnsemble e = simulate_brownian(build_time_grid(1.0, 0.0, 8), 1, 1000, 7, true);
    for (int i = 0; i < e.n_steps; ++i)
        for (std::size_t p = 0; p < e.n_paths; p += 2) CHECK(e.dW(i, p + 1) == -e.dW(i, p));
    CHECK_THROWS_AS(simulate_brownian(build_time_grid(1.0, 0.0, 8), 1, 999, 7, true), OddAntitheticCount);
}

TEST_CASE("coarsening keeps the paths") {
    const PathEnsemble fine = simulate_brownian(build_time_grid(1.0, 0.0, 16), 1, 200, 5, false);
    const PathEnsemble coarse = fine.coarsen(4);
    CHECK(coarse.n_steps == 4);
    CHECK(coarse.h == doctest::Approx(0.25));
    for (std::size_t p = 0; p < 200; ++p)
        for (int i = 0; i <= 4; ++i) CHECK(coarse.W(i, p) == doctest::Approx(fine.W(4 * i, p)).epsilon(1e-14));
    const PathEnsemble head = fine.prefix(50);
    CHECK(head.n_paths == 50);
    CHECK(head.W(16, 49) == fine.W(16, 49));
}

TEST_CASE("normal quantile") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-12));
}

TEST_CASE("ensembles survive a binary round trip") {
    const PathEnsemble e = simulate_brownian(build_time_grid(1.0, 0.25, 8), 2, 64, 11, false);
    char name[] = "/tmp/absde_ensemble_XXXXXX";
    REQUIRE(mkstemp(name) != -1);
    save_ensemble(e, name);
    const PathEnsemble r = load_ensemble(name);
    std::remove(name);
    CHECK(r.increments == e.increments);
    CHECK(r.states == e.states);
    CHECK(r.seed == e.seed);
}
