#pragma once

#include <optional>
#include <string>
#include <vector>

#include "absde/constants.hpp"
#include "absde/diagnostics.hpp"
#include "absde/solver.hpp"

namespace absde {

struct OuterSpec {
    double tol = 1e-6;
    int max_iter = 50;
    double barrier_slack = 0.1;
    /// Stitch window in grid steps; 0 derives it from theta_lambda.
    int window_steps = 0;
    /// Left edge of the local window; unset means T - eps from the constants, clamped to [0, T).
    std::optional<double> t_lo;
    double quad_tol = 1e-10;
};

struct QuadraticDiagnostics {
    std::optional<MembershipReport> ball;
    std::optional<BarrierReport> barrier;
    std::optional<ContractionReport> contraction;
    std::optional<Thm34Bundle> thm34;
    std::optional<Thm44Bundle> thm44;
    std::optional<Thm48Bundle> thm48;
    /// Slice indices of the window edges, right to left, including n_T and the last left edge.
    std::vector<int> window_edges;
    std::vector<std::string> notes;
};

struct QuadraticSolveResult {
    DiscreteSolution solution;
    Strategy strategy = Strategy::Lipschitz;
    int outer_iterations = 0;
    std::vector<double> outer_diffs;
    bool certified = false;
    QuadraticDiagnostics diagnostics;
};

/// Root of y - a - h f(t, y, z, e) = 0: bracket around a, then safeguarded Newton with bisection.
double inner_quadratic_step(double a, double h, double z, const double* e, const Generator& gen, double t, double tol,
                            int max_iter, int* iterations = nullptr);

/// Global Picard iteration freezing every generator argument.
QuadraticSolveResult solve_picard_small(const ProblemSpec& problem, const NumericsSpec& numerics,
                                        const OuterSpec& outer = {}, const PathEnsemble* paths = nullptr);

/// Outer iteration on the frozen anticipated pair over [t_lo, T]; slices below the window stay zero
/// and Y0 statistics refer to the window's left edge.
QuadraticSolveResult solve_local_contraction(const ProblemSpec& problem, const NumericsSpec& numerics,
                                             const OuterSpec& outer = {}, const PathEnsemble* paths = nullptr);

/// Backward windows of width theta_lambda, each a local contraction, under the alpha(t) barrier.
QuadraticSolveResult solve_global_stitch(const ProblemSpec& problem, const NumericsSpec& numerics,
                                         const OuterSpec& outer = {}, const PathEnsemble* paths = nullptr);

/// Removes the lambda(t, y) z^2 term with phi, solves the Lipschitz problem and maps back.
QuadraticSolveResult solve_transform(const ProblemSpec& problem, const NumericsSpec& numerics,
                                     const OuterSpec& outer = {}, const PathEnsemble* paths = nullptr);

/// Picks a strategy from the applicability report: transform, global stitch, small data, then Lipschitz.
Strategy choose_strategy(const ProblemSpec& problem, const ApplicabilityReport& report);

QuadraticSolveResult solve_with_strategy(Strategy s, const ProblemSpec& problem, const NumericsSpec& numerics,
                                         const OuterSpec& outer = {}, const PathEnsemble* paths = nullptr);

}  // namespace absde
