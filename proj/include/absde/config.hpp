#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "absde/quadratic.hpp"

namespace absde {

struct OutputSpec {
    std::string summary;      // JSON; empty: standard output
    std::string slices;       // CSV; empty: not written
    std::string diagnostics;  // JSON; empty: not written
    std::string table;        // convergence CSV; empty: standard output
};

struct StudySpec {
    std::vector<int> grids;
    std::vector<std::size_t> paths;
    /// Reference Y0; unset means the closed form when one is known, else the finest cell.
    std::optional<double> reference;
    bool self_reference = false;
};

struct RunConfig {
    ProblemSpec problem;
    NumericsSpec numerics;
    OuterSpec outer;
    Strategy strategy = Strategy::Auto;
    OutputSpec outputs;
    std::optional<StudySpec> study;
    /// Closed-form Y0 for catalog problems that have one.
    std::optional<double> closed_form_y0;
};

/// Strict reader: unknown keys, wrong types and unknown catalog names raise ConfigError naming the key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

}  // namespace absde
