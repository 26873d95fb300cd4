#pragma once

#include <string>
#include <vector>

#include "absde/constants.hpp"
#include "absde/solver.hpp"

namespace absde {

struct NormReport {
    double y_sup = 0.0;
    double z_z2 = 0.0;                // squared Z^2 norm estimate
    std::vector<double> per_slice_z2;  // max over paths of the regressed tail sum, per slice
    std::string bias_note;
};

/// Tail sums sum_{j >= i} |Z_j|^2 h over slices [i_from, i_to), regressed on slice-i states.
/// i_to = -1 means n_T; the sup over y covers the same slices.
NormReport z2_norm_estimate(const DiscreteSolution& sol, const BasisSpec& basis, int i_from = 0, int i_to = -1);

/// Sup norm of xi and Z^2 norm of eta on the terminal block, plus int_0^T |f(t,0,0,0,0)| dt.
Thm34Norms estimate_terminal_norms(const ProblemSpec& problem, const DiscreteSolution& sol, const BasisSpec& basis);
double f0_integral(const Generator& gen, const TimeGrid& grid);

struct AprioriReport {
    bool holds = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double rhs_rel_stderr = 0.0;
    double margin = 0.0;
};

/// e^{gamma |Y_0|} <= E[exp(gamma e^{beta T} |xi| + gamma int_0^T |g_s| e^{beta s} ds)] with the
/// expectation replaced by the ensemble mean. g_bound holds one value per slice 0..n_T-1
/// (a single value is broadcast).
AprioriReport apriori_bound_check(const DiscreteSolution& sol, const std::vector<double>& g_bound, double gamma,
                                  double beta_lin);

struct MembershipItem {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool holds = false;
};

struct MembershipReport {
    bool member = false;
    std::vector<MembershipItem> items;
};

inline constexpr double kBallSlack = 0.1;

/// Small-data ball: ||Y||_inf^2 + ||Z||^2 <= rho2 (1 + slack).
MembershipReport ball_membership(const DiscreteSolution& sol, const Thm34Bundle& b, const BasisSpec& basis,
                                 double slack = kBallSlack);
/// Local set on [i_lo, n_T): the exponential sup bound in both exponent forms, and ||V||^2 <= A.
MembershipReport ball_membership(const DiscreteSolution& sol, const Thm44Bundle& b, const Thm44Params& p, int i_lo,
                                 const BasisSpec& basis, double slack = kBallSlack);

struct ContractionReport {
    std::vector<double> ratios;
    bool geometric = false;
    double fitted_rate = 0.0;
};

ContractionReport contraction_report(const std::vector<double>& outer_diffs);

struct BarrierReport {
    bool holds = true;
    double worst_ratio = 0.0;  // max_i max_p Y_i^2 / alpha(t_i)
    int worst_slice = 0;
};

BarrierReport barrier_check(const DiscreteSolution& sol, const Thm48Bundle& b, double slack);

}  // namespace absde
