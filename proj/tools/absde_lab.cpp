// Batch front end. Exit codes: 0 ok, 1 validation failures, 2 config errors, 3 solver errors.
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "absde/acceptance.hpp"
#include "absde/app.hpp"
#include "absde/errors.hpp"

namespace {

constexpr int kExitValidate = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::size_t jobs = 1;
    std::string filter;
    std::string fixtures;
};

absde::RunConfig load(const Flags& f) {
    absde::RunConfig c = absde::load_config(f.config);
    if (f.has_seed) c.numerics.seed = f.seed;
    return c;
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw absde::ConfigError("cannot write output file '" + path + "'");
    out << text;
}

int validate(const Flags& f) {
    absde::AcceptanceOptions opt;
    opt.filter = f.filter;
    opt.fixtures_dir = f.fixtures;
    if (f.has_seed) opt.seed = f.seed;
    int total = 0, failed = 0;
    absde::run_acceptance(opt, [&](const absde::CriterionResult& r) {
        ++total;
        failed += !r.passed;
        std::printf("%s\n", absde::format_result(r).c_str());
        std::fflush(stdout);
    });
    if (total == 0) throw absde::ConfigError("filter '" + f.filter + "' selects no criteria");
    std::printf("%d/%d criteria passed\n", total - failed, total);
    return failed ? kExitValidate : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"absde_lab: anticipated BSDE solvers, diagnostics and validation"};
    app.require_subcommand(1);
    Flags f;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", f.config, "JSON run configuration");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", f.seed, "override numerics.seed")->each([&](const std::string&) { f.has_seed = true; });
    };
    auto* solve = app.add_subcommand("solve", "solve one problem and write summary, slices and diagnostics");
    add_common(solve, true);
    auto* check = app.add_subcommand("check", "applicability verdicts and constants, no solve");
    add_common(check, true);
    auto* conv = app.add_subcommand("convergence", "convergence table over the study lattice");
    add_common(conv, true);
    conv->add_option("--jobs", f.jobs, "study cells run concurrently")->check(CLI::PositiveNumber);
    auto* val = app.add_subcommand("validate", "run the acceptance suite");
    add_common(val, false);
    val->add_option("--filter", f.filter, "tag, key or id of the criteria to run");
    val->add_option("--fixtures", f.fixtures, "directory holding acceptance.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*solve) {
            const absde::RunConfig c = load(f);
            const absde::SolveArtifacts a = absde::run_solve(c);
            absde::write_solve_outputs(c, a, std::cout);
            for (const auto& w : a.result.solution.warnings) std::cerr << "warning: " << w << '\n';
        } else if (*check) {
            emit(absde::run_check(load(f)).dump(2) + "\n", "");
        } else if (*conv) {
            const absde::RunConfig c = load(f);
            emit(absde::run_convergence(c, f.jobs), c.outputs.table);
        } else if (*val) {
            return validate(f);
        }
    } catch (const absde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const absde::ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const absde::ScopeError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    }
    return 0;
}
