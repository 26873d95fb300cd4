#include <doctest.h>

#include <cmath>
#include <unordered_map>

#include "absde/errors.hpp"
#include "absde/generator.hpp"
#include "absde/genexpr.hpp"

using namespace absde;

TEST_CASE("sub-quadratic anticipated generator parses") {
    const Ast a = parse_generator("1 + abs(y) + z^2 + E[abs(ydelta)] + E[abs(zzeta)^1.5]");
    CHECK(count_summands(a) == 5);
    CHECK(expectation_nodes(a).size() == 2);
}

TEST_CASE("zero generator") {
    const Ast a = parse_generator("0");
    REQUIRE(a.root);
    CHECK(a.root->kind == NodeKind::Constant);
    EvalContext ctx;
    ctx.y = 3.0;
    ctx.z = -1.0;
    CHECK(eval_generator(a, ctx) == 0.0);
}

TEST_CASE("malformed input reports the offset") {
    try {
        (void)parse_generator("1 + * y");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 4);
    }
}

TEST_CASE("scope rules") {
    CHECK_THROWS_AS(parse_generator("ydelta + 1"), Error);
    CHECK_THROWS_AS(parse_generator("E[E[ydelta]]"), Error);
    CHECK_THROWS_AS(parse_expression("y", ExprContext::Terminal), Error);
    CHECK_THROWS_AS(parse_generator("y^0.5"), Error);  // fractional powers need abs
    CHECK_NOTHROW(parse_generator("abs(y)^0.5"));
    CHECK_NOTHROW(parse_expression("sin(w) + w2", ExprContext::Terminal));
}

TEST_CASE("evaluation with an expectation table") {
    const Ast a = parse_generator("y^2 + z^2 + E[ydelta^2] + E[zzeta^2]");
    const auto nodes = expectation_nodes(a);
    REQUIRE(nodes.size() == 2);
    std::unordered_map<std::string, double> table{{expectation_key(nodes[0]), 3.0}, {expectation_key(nodes[1]), 4.0}};
    EvalContext ctx;
    ctx.y = 1.0;
    ctx.z = 2.0;
    ctx.expectations = &table;
    // 1 + 4 + 3 + 4
    CHECK(eval_generator(a, ctx) == doctest::Approx(12.0).epsilon(1e-15));

    EvalContext missing;
    CHECK_THROWS_AS(eval_generator(a, missing), MissingExpectation);
}

TEST_CASE("sin at zero") {
    EvalContext ctx;
    CHECK(eval_generator(parse_generator("sin(y)"), ctx) == 0.0);
}

TEST_CASE("canonical text reparses to the same tree") {
    for (const char* src : {"1 + abs(y) + z^2 + E[abs(ydelta)] + E[abs(zzeta)^1.5]", "-(y - 2)*cos(t)/3",
                            "exp(-abs(z))^2 + E[sin(ydelta)*zzeta]"}) {
        const Ast a = parse_generator(src);
        const Ast b = parse_generator(to_string(a));
        CHECK(structurally_equal(a.root, b.root));
    }
}

TEST_CASE("compiled programs agree with the tree walker") {
    const Ast a = parse_generator("1 + abs(y)^1.5 - z*sin(t) + exp(-y^2)/2");
    const CompiledExpr c = CompiledExpr::compile(a.root);
    for (double y : {-2.0, -0.3, 0.0, 1.7})
        for (double z : {-1.0, 0.5}) {
            EvalContext ctx;
            ctx.t = 0.4;
            ctx.y = y;
            ctx.z = z;
            double vars[kVarSlots] = {};
            vars[static_cast<int>(Var::T)] = 0.4;
            vars[static_cast<int>(Var::Y)] = y;
            vars[static_cast<int>(Var::Z)] = z;
            CHECK(c.eval(vars) == eval_generator(a, ctx));
        }
}

TEST_CASE("growth classification") {
    CHECK(analyze_growth(parse_generator("z^2")).z_growth == ZGrowth::Quadratic);
    CHECK(analyze_growth(parse_generator("sin(y)")).y_growth == YGrowth::Bounded);
    const GrowthReport mixed = analyze_growth(parse_generator("y*z"));
    CHECK(mixed.z_growth == ZGrowth::Unclassified);
    CHECK(mixed.suggested_strategy == Strategy::Manual);
    const GrowthReport e43 = analyze_growth(parse_generator("1 + abs(y) + z^2 + E[abs(ydelta)] + E[abs(zzeta)^1.5]"));
    CHECK(e43.anticipated_growth == AnticipatedGrowth::Power);
    CHECK(e43.anticipated_power == doctest::Approx(1.5));
    CHECK(analyze_growth(parse_generator("0.5*sin(y) + E[ydelta]")).suggested_strategy == Strategy::Lipschitz);
}

TEST_CASE("strategy names round trip") {
    for (Strategy s : {Strategy::PicardSmall, Strategy::LocalContraction, Strategy::GlobalStitch, Strategy::Transform,
                       Strategy::Lipschitz, Strategy::Manual, Strategy::Auto})
        CHECK(strategy_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(strategy_from_string("picard"), ConfigError);
}

TEST_CASE("expression generator matches closures") {
    const GeneratorPtr g = ExprGenerator::from_source("1 + abs(y) + abs(z)^2 + E[abs(ydelta) + abs(zzeta)^1.5]");
    REQUIRE(g->expectation_count() == 1);
    const double yd = -0.7, zz = 1.3;
    Anticipated a;
    a.ydelta = &yd;
    a.zzeta = &zz;
    a.y_at_zeta = &yd;
    CHECK(g->expectation_integrand(0, 0.2, a) == doctest::Approx(0.7 + std::pow(1.3, 1.5)).epsilon(1e-14));
    const double e = 2.0;
    CHECK(g->evaluate_scalar(0.2, -1.0, 0.5, &e) == doctest::Approx(1 + 1 + 0.25 + 2).epsilon(1e-14));
}

TEST_CASE("builtin catalog") {
    for (const std::string& name : builtin_generator_names()) {
        const Params p = name == "constant" ? Params{{"c", 1.0}} : name == "example_4_3" ? Params{{"alpha", 0.5}} : Params{};
        CHECK_NOTHROW(make_builtin_generator(name, p));
    }
    CHECK_THROWS_AS(make_builtin_generator("nope"), Error);
    const GeneratorPtr q = make_builtin_generator("example_3_3", {}, 2, 2);
    CHECK(q->m() == 2);
    CHECK(q->expectation_count() == 2);
}
