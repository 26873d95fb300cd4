#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "absde/acceptance.hpp"
#include "absde/errors.hpp"

using namespace absde;

TEST_CASE("catalog covers twelve criteria") {
    const auto cat = acceptance_catalog();
    REQUIRE(cat.size() == 12);
    for (std::size_t k = 0; k < cat.size(); ++k) CHECK(cat[k].id == static_cast<int>(k) + 1);
}

TEST_CASE("tag filter runs only the constants criteria") {
    AcceptanceOptions opt;
    opt.filter = "constants";
    const auto r = run_acceptance(opt);
    REQUIRE(r.size() == 3);
    for (const auto& c : r) {
        CHECK(c.passed);
        CHECK(std::find(c.tags.begin(), c.tags.end(), "constants") != c.tags.end());
    }
}

TEST_CASE("a perturbed fixture fails the named criterion") {
    const auto dir = std::filesystem::temp_directory_path() / "absde_tamper_fixture";
    std::filesystem::create_directories(dir);
    nlohmann::json fx = nlohmann::json::parse(std::ifstream(default_fixtures_dir() + "/acceptance.json"));
    fx["constants"]["rho2"] = 3.0517578125e-05 * (1 + 1e-12);
    std::ofstream(dir / "acceptance.json") << fx.dump();
    AcceptanceOptions opt;
    opt.filter = "constants_exactness";
    opt.fixtures_dir = dir.string();
    const auto r = run_acceptance(opt);
    REQUIRE(r.size() == 1);
    CHECK_FALSE(r[0].passed);
    CHECK(format_result(r[0]).rfind("FAIL  C01 constants_exactness", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("missing fixtures are a configuration error") {
    AcceptanceOptions opt;
    opt.fixtures_dir = "/nonexistent/absde";
    CHECK_THROWS_AS(run_acceptance(opt), ConfigError);
}
