// One line per criterion; exit status 1 when any criterion fails.
#include <cstdio>

#include <CLI11.hpp>

#include "absde/acceptance.hpp"
#include "absde/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    absde::AcceptanceOptions opt;
    std::uint64_t seed = 0;
    app.add_option("--filter", opt.filter, "tag, key or id");
    app.add_option("--fixtures", opt.fixtures_dir, "directory holding acceptance.json");
    auto* s = app.add_option("--seed", seed);
    CLI11_PARSE(app, argc, argv);
    if (*s) opt.seed = seed;

    int failed = 0, total = 0;
    try {
        absde::run_acceptance(opt, [&](const absde::CriterionResult& r) {
            ++total;
            failed += !r.passed;
            std::printf("%s\n", absde::format_result(r).c_str());
            std::fflush(stdout);
        });
    } catch (const absde::Error& e) {
        std::fprintf(stderr, "acceptance: %s\n", e.what());
        return 2;
    }
    std::printf("%d/%d criteria passed\n", total - failed, total);
    return failed == 0 ? 0 : 1;
}
