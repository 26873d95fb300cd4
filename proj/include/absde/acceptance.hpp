#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace absde {

struct CriterionResult {
    int id = 0;
    std::string key;
    std::vector<std::string> tags;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    /// Runs criteria carrying this tag, or with this key or id ("7", "C07"); empty runs all.
    std::string filter;
    /// Directory holding acceptance.json; empty uses the bundled fixtures.
    std::string fixtures_dir;
    std::optional<std::uint64_t> seed;
};

std::string default_fixtures_dir();

/// Every criterion with its key and tags, in run order.
std::vector<CriterionResult> acceptance_catalog();

/// Runs the selected criteria; `on_result` sees each result as soon as it is known.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS  C04 martingale_problem  (1.2 s)  detail"
std::string format_result(const CriterionResult& r);

}  // namespace absde
