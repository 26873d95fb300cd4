#pragma once

#include <string>
#include <vector>

#include "absde/problem.hpp"

namespace absde {

// All bundle arithmetic is long double; exponentials are carried in log space and only
// exponentiated for reporting.

struct Thm34Norms {
    double xi_sup = 0.0;  // ||xi||_inf on [T, T+K]
    double eta_z2 = 0.0;  // ||eta||_{Z^2[T, T+K]} (the norm, not its square)
    double f0_int = 0.0;  // || int_0^T |f(t,0,0,0,0)| dt ||_inf
};

struct Thm34Bundle {
    long double M = 0;
    long double beta_small = 0;
    long double rho2 = 0;
    long double R = 0;
    long double lhs = 0;  // xi_sup^2 + eta_z2^2 + f0_int^2
    bool admissible = false;
};

Thm34Bundle thm34_constants(double C, double L, double T, double K, const Thm34Norms& norms);

struct Thm44Params {
    double C = 1.0;
    double gamma = 1.0;
    double alpha_holder = 0.0;
    double L = 1.0;
    double T = 1.0;
    double K = 0.0;
};

struct Thm44Norms {
    double xi_sup = 0.0;
    double eta_z2 = 0.0;
};

struct Thm44Bundle {
    long double C_delta = 0;  // may be +inf for reporting; log_C_delta is always finite
    long double log_C_delta = 0;
    long double beta44 = 0;
    long double mu1 = 0;
    long double mu2 = 0;
    long double mu = 0;
    long double mu_tilde = 0;
    long double Q = 0;  // mu_tilde e^{2 gamma xi / (1 - alpha)} + eta^2 / 4
    long double delta_aux = 0;
    long double kappa = 0;  // exponent rate multiplying eps
    long double eps = 0;
    long double Delta = 0;
    long double A = 0;
    long double identity_residual = 0;
    /// The two sides of the eps min-condition evaluated at eps; the smaller one binds.
    long double branch_horizon = 0;
    long double branch_quadratic = 0;
    /// Exponential bound of the B_eps set, e^{(2 gamma / (1 - alpha)) ||U||} <= ball_exp_bound, in log form.
    long double log_ball_exp_bound = 0;
};

/// Throws OverflowRegime when eps leaves the long double range, NoAdmissibleEps when no eps > 0 works.
Thm44Bundle thm44_constants(const Thm44Params& p, const Thm44Norms& norms);

struct Thm48Bundle {
    double C_tilde = 1.0;
    double L = 1.0;
    double T = 1.0;
    double K = 0.0;
    long double lambda_bar = 0;
    /// Window width; 0 when the underlying eps computation overflows.
    long double theta_lambda = 0;
    bool theta_overflow = false;
    std::string theta_note;

    long double alpha_bound(double t) const;
};

/// C_tilde = max(3C, xi_sup^2, 1).
double c_tilde_from(double C, double xi_sup);

/// Closed-form barrier, lambda_bar = alpha(0), and theta from thm44 with xi_sup = sqrt(lambda_bar).
Thm48Bundle thm48_alpha(double C_tilde, double L, double T, double K, const Thm44Params& window_params, double eta_z2);
Thm48Bundle thm48_alpha(double C_tilde, double L, double T, double K);

/// Independent oracle: Picard iteration of the Volterra equation on polynomial iterates in T+K-t.
long double alpha_bound_volterra(double C_tilde, double L, double T, double K, double t, long double tol = 1e-18L);

// ---------------------------------------------------------------------------

enum class VerdictKind { Applies, Fails, NotCheckable };
std::string to_string(VerdictKind v);

struct Verdict {
    VerdictKind kind = VerdictKind::NotCheckable;
    std::string reason;
    std::string binding;  // name of the binding constant, when any
    double value = 0.0;   // its value
};

struct ApplicabilityReport {
    Verdict small_data_global;     // bounded terminal small enough for the global Picard fixed point
    Verdict bounded_local;         // local window with bounded terminal and sub-quadratic anticipation
    Verdict bounded_global;        // split generator, stitched windows under the alpha barrier
    Verdict unbounded_transform;   // lambda(t,y) z^2 structure removed by the exponential transform
    Thm34Bundle thm34;
    bool has_thm44 = false;
    Thm44Bundle thm44;
    bool has_thm48 = false;
    Thm48Bundle thm48;
    std::vector<std::string> notes;
};

/// Whether every terminal expression is bounded on the whole horizon (syntactic check).
bool terminal_bounded(const TerminalFunction& f);

/// Largest |lambda| sampled over t in [0, T] integrated in y over [-R, R]; used for the integrability check.
double lambda_sup_integral(const LambdaFunction& lambda, double T, double R);
bool lambda_integrable(const LambdaFunction& lambda, double T);

ApplicabilityReport applicability_report(const ProblemSpec& problem, const Thm34Norms& norms);

}  // namespace absde
