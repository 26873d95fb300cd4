#pragma once

#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "absde/config.hpp"

namespace absde {

// JSON views of the library's reports. Non-finite numbers serialize as null.
nlohmann::json to_json(const Thm34Bundle& b);
nlohmann::json to_json(const Thm44Bundle& b);
nlohmann::json to_json(const Thm48Bundle& b);
nlohmann::json to_json(const Verdict& v);
nlohmann::json to_json(const ApplicabilityReport& r);
nlohmann::json to_json(const NormReport& r, bool per_slice = true);
nlohmann::json to_json(const MembershipReport& r);
nlohmann::json to_json(const ContractionReport& r);
nlohmann::json to_json(const BarrierReport& r);
nlohmann::json to_json(const GrowthReport& g);

/// Norms of the terminal block from a terminal-only ensemble (capped path count).
Thm34Norms terminal_norms(const RunConfig& config);

struct SolveArtifacts {
    QuadraticSolveResult result;
    ApplicabilityReport applicability;
    NormReport norms;
    nlohmann::json summary;
    nlohmann::json diagnostics;
    std::string slices_csv;
};

/// Resolves auto, solves, and assembles the summary, diagnostics and per-slice table.
/// Timings are kept under "timings" so the rest of the summary is reproducible byte for byte.
SolveArtifacts run_solve(const RunConfig& config);
/// Writes the artifacts named in config.outputs; the summary goes to `out` when it has no path.
void write_solve_outputs(const RunConfig& config, const SolveArtifacts& a, std::ostream& out);

nlohmann::json run_check(const RunConfig& config);

/// CSV rows n_T, n_paths, Y0, Y0_stderr, abs_error, runtime_ms over the study lattice, with one
/// ensemble at the finest grid shared by every cell. Cells run on up to `jobs` threads.
std::string run_convergence(const RunConfig& config, std::size_t jobs);

}  // namespace absde
