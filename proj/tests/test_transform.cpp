#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "absde/errors.hpp"
#include "absde/transform.hpp"

using namespace absde;

TEST_CASE("vanishing lambda is the identity") {
    const auto phi = build_phi_transform(std::make_shared<ConstantLambda>(0.0));
    CHECK(phi->identity());
    for (double y : {-3.0, 0.0, 2.5}) {
        CHECK(phi->phi(0.4, y) == y);
        CHECK(phi->phi_inv(0.4, y) == y);
        CHECK(phi->phi_y(0.4, y) == 1.0);
        CHECK(phi->phi_t(0.4, y) == 0.0);
    }
}

TEST_CASE("constant lambda has a closed form") {
    // phi = (e^{2cy} - 1) / (2c)
    const double c = 0.5;
    const auto phi = build_phi_transform(std::make_shared<ConstantLambda>(c));
    for (double y : {-2.0, -0.5, 0.3, 1.7}) {
        CHECK(phi->phi(0.2, y) == doctest::Approx(std::expm1(2 * c * y) / (2 * c)).epsilon(1e-12));
        CHECK(phi->phi_y(0.2, y) == doctest::Approx(std::exp(2 * c * y)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(phi->phi_inv(0.2, -1.5), DomainError);  // below the range (-1/(2c), inf)
}

TEST_CASE("gaussian ramp lambda against an independent oracle") {
    const auto phi = build_phi_transform(make_builtin_lambda("example_5_5"), 1e-10);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double oracle =
        ts.integrate([](double s) { return std::exp(std::sqrt(M_PI) * boost::math::erf(s)); }, 0.0, 1.0, 1e-12);
    CHECK(std::fabs(phi->phi(1.0, 1.0) - oracle) <= 10 * 1e-10);
    CHECK(phi->phi(0.3, 0.0) == 0.0);
}

TEST_CASE("round trip, monotonicity and the ODE identity") {
    const auto phi = build_phi_transform(make_builtin_lambda("example_5_5"));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ut(0.0, 1.0), uy(-5.0, 5.0);
    for (int k = 0; k < 500; ++k) {
        const double t = ut(rng), y = uy(rng);
        CHECK(std::fabs(phi->phi_inv(t, phi->phi(t, y)) - y) <= 1e-9);
        CHECK(phi->phi_y(t, y) > 0.0);
        CHECK(phi->phi(t, y + 0.01) > phi->phi(t, y));
        const double d = 1e-4;
        const double pyy = (phi->phi_y(t, y + d) - phi->phi_y(t, y - d)) / (2 * d);
        CHECK(std::fabs(pyy - 2 * phi->lambda().value(t, y) * phi->phi_y(t, y)) <= 1e-6);
    }
}

TEST_CASE("time derivative against finite differences") {
    const auto phi = build_phi_transform(make_builtin_lambda("example_5_5"));
    for (double y : {-1.0, 0.5, 2.0}) {
        const double t = 0.5, d = 1e-5;
        CHECK(phi->phi_t(t, y) == doctest::Approx((phi->phi(t + d, y) - phi->phi(t - d, y)) / (2 * d)).epsilon(1e-6));
    }
}

TEST_CASE("tabulated evaluators match the exact ones") {
    auto phi = build_phi_transform(make_builtin_lambda("example_5_5"));
    phi->tabulate({0.0, 0.25, 0.5});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uy(-6.0, 6.0);
    for (int k = 0; k < 300; ++k) {
        const double y = uy(rng);
        for (double t : {0.0, 0.25, 0.5}) {
            CHECK(phi->phi_fast(t, y) == doctest::Approx(phi->phi(t, y)).epsilon(1e-7));
            CHECK(phi->phi_y_fast(t, y) == doctest::Approx(phi->phi_y(t, y)).epsilon(1e-7));
            const double yb = phi->phi(t, y);
            CHECK(std::fabs(phi->phi_inv_fast(t, yb) - y) <= 1e-7);
        }
    }
    // untabulated time falls back to the exact evaluator
    CHECK(phi->phi_fast(0.3, 1.0) == phi->phi(0.3, 1.0));
}
