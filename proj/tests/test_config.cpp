#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "absde/app.hpp"
#include "absde/config.hpp"
#include "absde/errors.hpp"

using namespace absde;
using nlohmann::json;

namespace {

json martingale() {
    return json::parse(R"J({
      "problem": {"generator": {"builtin": "zero"}, "xi": "w", "eta": "1"},
      "numerics": {"n_T": 32, "n_paths": 20000, "seed": 3},
      "strategy": "lipschitz"
    })J");
}

std::string config_error(const json& j) {
    try {
        (void)parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("strict schema names the offending key") {
    json j = martingale();
    j["problem"]["typo"] = 1;
    CHECK(config_error(j).find("problem.typo") != std::string::npos);

    j = martingale();
    j["problem"]["generator"] = {{"builtin", "no_such"}};
    CHECK(config_error(j).find("problem.generator") != std::string::npos);

    j = martingale();
    j["numerics"]["n_T"] = "many";
    CHECK(config_error(j).find("numerics.n_T") != std::string::npos);

    j = martingale();
    j["problem"]["generator"] = "1 + * y";
    CHECK(config_error(j).find("problem.generator") != std::string::npos);

    j = martingale();
    j["strategy"] = "fastest";
    CHECK_FALSE(config_error(j).empty());

    j = martingale();
    j["problem"]["generator"] = "zero";
    CHECK(config_error(j).find("builtin") != std::string::npos);

    j = martingale();
    j["study"] = {{"grids", {8, 12}}, {"paths", {1000}}};
    CHECK_FALSE(config_error(j).empty());
}

TEST_CASE("defaults and closed forms") {
    const RunConfig c = parse_config(martingale());
    CHECK(c.numerics.n_T == 32);
    CHECK(c.numerics.seed == 3);
    CHECK(c.strategy == Strategy::Lipschitz);
    CHECK(c.closed_form_y0 == 0.0);

    json a = json::parse(R"J({"problem": {"T": 1, "K": 1, "generator": {"builtin": "anticipated_mean"},
                                         "xi": 1, "eta": 0, "delta": 1}})J");
    CHECK(parse_config(a).closed_form_y0 == 2.0);
    CHECK(parse_config(a).strategy == Strategy::Auto);
}

TEST_CASE("solve summary") {
    const RunConfig c = parse_config(martingale());
    const SolveArtifacts a = run_solve(c);
    const json& s = a.summary;
    CHECK(std::fabs(s["Y0_mean"].get<double>()) <= 3 * s["Y0_stderr"].get<double>());
    for (const char* k : {"Y0_mean", "Y0_stderr", "outer_iterations", "norms", "certified", "applicability", "seed", "timings"})
        CHECK(s.contains(k));
    CHECK(s["seed"] == 3);
    CHECK(a.slices_csv.rfind("t,mean_Y,std_Y,mean_abs_Z,z2_tail\r\n", 0) == 0);
    // one row per slice plus the header
    CHECK(std::count(a.slices_csv.begin(), a.slices_csv.end(), '\n') == c.numerics.n_T + 2);

    json again = run_solve(c).summary;
    json first = s;
    first.erase("timings");
    again.erase("timings");
    CHECK(first.dump() == again.dump());
}

TEST_CASE("anticipated closed form through the config") {
    json a = json::parse(R"J({"problem": {"T": 1, "K": 1, "generator": {"builtin": "anticipated_mean"},
                                         "xi": 1, "eta": 0, "delta": 1},
                             "numerics": {"n_T": 32, "n_paths": 10000}, "strategy": "auto"})J");
    const SolveArtifacts r = run_solve(parse_config(a));
    CHECK(std::fabs(r.summary["Y0_mean"].get<double>() - 2.0) <= 0.02);
}

TEST_CASE("check output") {
    json j = json::parse(R"J({"problem": {"generator": {"builtin": "example_3_3"}, "xi": 0.001, "eta": 0,
                                         "constants": {"C": 1, "L": 1}}})J");
    const json r = run_check(parse_config(j));
    CHECK(r["small_data_global"]["verdict"] == "applies");
    CHECK(r["thm34"]["rho2"].get<double>() == 3.0517578125e-5);

    j["problem"]["generator"] = "y*z";
    const json u = run_check(parse_config(j));
    for (const char* k : {"small_data_global", "bounded_local", "bounded_global", "unbounded_transform"})
        CHECK(u[k]["verdict"] == "not-checkable");
}

TEST_CASE("convergence studies") {
    SUBCASE("refinement on the closed form") {
        json j = json::parse(R"J({"problem": {"T": 1, "K": 1, "generator": {"builtin": "anticipated_mean"},
                                             "xi": 1, "eta": 0, "delta": 1},
                                 "numerics": {"n_paths": 5000}, "strategy": "lipschitz",
                                 "study": {"grids": [8, 16, 32], "paths": [5000]}})J");
        std::istringstream csv(run_convergence(parse_config(j), 2));
        std::string line;
        std::getline(csv, line);
        CHECK(line == "n_T,n_paths,Y0,Y0_stderr,abs_error,runtime_ms\r");
        double prev = INFINITY;
        int rows = 0;
        while (std::getline(csv, line)) {
            double v[6];
            REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", v, v + 1, v + 2, v + 3, v + 4, v + 5) == 6);
            CHECK(v[4] <= prev + 1e-12);
            prev = v[4];
            ++rows;
        }
        CHECK(rows == 3);
    }
    SUBCASE("standard error shrinks with the path count") {
        json j = json::parse(R"J({"problem": {"generator": {"builtin": "zero"}, "xi": "sin(w)", "eta": 0},
                                 "numerics": {"n_T": 16}, "strategy": "lipschitz",
                                 "study": {"grids": [16], "paths": [1000, 10000, 100000], "reference": 0}})J");
        std::istringstream csv(run_convergence(parse_config(j), 1));
        std::string line;
        std::getline(csv, line);
        std::vector<double> se;
        while (std::getline(csv, line)) {
            double v[6];
            std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", v, v + 1, v + 2, v + 3, v + 4, v + 5);
            se.push_back(v[3]);
        }
        REQUIRE(se.size() == 3);
        for (int k = 0; k < 2; ++k) CHECK(std::fabs(se[k] / se[k + 1] / std::sqrt(10.0) - 1.0) <= 0.3);
    }
    SUBCASE("single cell equals the solve") {
        json j = martingale();
        j["study"] = {{"grids", {32}}, {"paths", {20000}}};
        const RunConfig c = parse_config(j);
        std::istringstream csv(run_convergence(c, 1));
        std::string line;
        std::getline(csv, line);
        std::getline(csv, line);
        double v[6];
        std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", v, v + 1, v + 2, v + 3, v + 4, v + 5);
        CHECK(v[2] == doctest::Approx(run_solve(c).summary["Y0_mean"].get<double>()).epsilon(1e-10));
    }
}
