#include "absde/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "absde/errors.hpp"

namespace absde {

namespace {

using ld = long double;

constexpr ld kLogMax = 11355.0L;  // log of the largest finite long double, rounded down

ld logaddexp(ld a, ld b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    ld m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

ld safe_exp(ld x) { return x > kLogMax ? static_cast<ld>(INFINITY) : std::exp(x); }

std::string fmt(ld v) {
    std::ostringstream os;
    os.precision(6);
    os << static_cast<double>(v);
    return os.str();
}

}  // namespace

Thm34Bundle thm34_constants(double C, double L, double T, double K, const Thm34Norms& n) {
    if (!(C > 0.0) || !(L > 0.0) || !(T > 0.0) || !(K >= 0.0)) throw InvalidArgument("thm34 needs C, L, T > 0 and K >= 0");
    if (!(n.xi_sup >= 0.0) || !(n.eta_z2 >= 0.0) || !(n.f0_int >= 0.0)) throw InvalidArgument("norms must be nonnegative");
    Thm34Bundle b;
    const ld c = C, l = L, tk = static_cast<ld>(T) + static_cast<ld>(K);
    b.M = 256.0L * c * c * (1.0L + l) * (1.0L + l) * (tk * tk + 1.0L);
    b.beta_small = 16.0L * c * (1.0L + l) * std::sqrt(tk * tk + 1.0L);
    b.rho2 = 1.0L / (16.0L * b.M);
    const ld xi = n.xi_sup, eta = n.eta_z2, f0 = n.f0_int;
    b.R = std::sqrt(8.0L * (xi * xi + eta * eta));
    b.lhs = xi * xi + eta * eta + f0 * f0;
    b.admissible = b.lhs <= b.rho2;
    return b;
}

Thm44Bundle thm44_constants(const Thm44Params& p, const Thm44Norms& n) {
    if (!(p.C > 0.0) || !(p.gamma > 0.0) || !(p.L > 0.0) || !(p.T > 0.0) || !(p.K >= 0.0))
        throw InvalidArgument("thm44 needs C, gamma, L, T > 0 and K >= 0");
    if (!(p.alpha_holder >= 0.0 && p.alpha_holder < 1.0)) throw InvalidArgument("alpha_holder must lie in [0, 1)");
    if (!(n.xi_sup >= 0.0) || !(n.eta_z2 >= 0.0)) throw InvalidArgument("norms must be nonnegative");
    const ld a = p.alpha_holder, g = p.gamma, C = p.C, L = p.L, T = p.T, K = p.K;
    const ld xi = n.xi_sup, eta = n.eta_z2;
    const ld om = 1.0L - a, op = 1.0L + a;
    Thm44Bundle b;
    b.mu1 = om * (1.0L + om / (op * g));
    b.mu2 = 0.5L * op * (1.0L + om / (op * g));
    const ld log_beta = std::log(0.5L * om) + (2.0L / om) * std::log(C) + (op / om) * std::log(2.0L * L * op);
    b.beta44 = safe_exp(log_beta);
    const ld log_mu = logaddexp(logaddexp(log_beta, std::log(C * b.mu1)) + (2.0L / (a - 1.0L)) * std::log(g),
                                std::log(C * b.mu2 * (1.0L + L)));
    b.mu = safe_exp(log_mu);
    b.mu_tilde = 1.0L / (g * g) + C * b.mu2 * L * K;
    const ld log_Q = logaddexp(std::log(b.mu_tilde) + 2.0L * g * xi / om,
                               eta > 0 ? std::log(eta * eta / 4.0L) : static_cast<ld>(-INFINITY));
    if (log_Q > kLogMax - 10.0L) throw OverflowRegime("Q = mu_tilde e^{2 gamma xi / (1 - alpha)} overflows", log_Q);
    b.Q = std::exp(log_Q);
    const ld log_delta = -std::log(8.0L) - log_Q;
    b.delta_aux = std::exp(log_delta);
    const ld eCT = std::exp(C * T);
    const ld lead = (3.0L * g / om) * eCT * (1.0L + C * L * K) * xi;
    b.kappa = lead + b.delta_aux * eta * eta;

    const ld a1 = (3.0L * g / om) * eCT * C * (T + K);
    const ld log_a2 = -std::log(L) + std::log(om / 2.0L) + (2.0L / om) * (std::log(3.0L * g * C * L / om) + C * T) +
                      (op / om) * (std::log(op / 2.0L) - log_delta) + std::log(T + K);
    if (log_a2 > kLogMax) throw OverflowRegime("C_delta exponent overflows", log_a2);
    b.log_C_delta = a1 + std::exp(log_a2);
    if (!std::isfinite(b.log_C_delta)) throw OverflowRegime("C_delta exponent overflows", log_a2);
    b.C_delta = safe_exp(b.log_C_delta);

    // eps = largest solution of eps <= min{e^{-CT}/(3CL), Q / (8 mu C_delta e^{kappa eps})}
    const ld log_b1 = -C * T - std::log(3.0L * C * L);
    auto log_rhs = [&](ld u) { return log_Q - std::log(8.0L) - log_mu - b.log_C_delta - b.kappa * std::exp(u); };
    auto gfun = [&](ld u) { return u - std::min(log_b1, log_rhs(u)); };
    ld hi = log_b1;
    ld lo = std::min(log_b1, log_rhs(-kLogMax)) - 1.0L;
    if (lo < -kLogMax) throw OverflowRegime("admissible eps underflows", lo);
    if (!(gfun(lo) < 0.0L)) {
        // kappa * eps not negligible even at this lo: walk down
        for (int k = 0; k < 64 && !(gfun(lo) < 0.0L); ++k) lo -= 16.0L;
        if (!(gfun(lo) < 0.0L)) throw NoAdmissibleEps("no positive eps satisfies the window condition");
        if (lo < -kLogMax) throw OverflowRegime("admissible eps underflows", lo);
    }
    if (gfun(hi) < 0.0L) throw NoAdmissibleEps("window condition bracket failed");
    for (int it = 0; it < 400 && hi - lo > 1e-16L * std::max<ld>(1.0L, std::fabs(hi)); ++it) {
        ld mid = 0.5L * (lo + hi);
        if (gfun(mid) < 0.0L) lo = mid;
        else hi = mid;
    }
    const ld u = lo;  // largest point known to satisfy the condition
    b.eps = std::exp(u);
    if (!(b.eps > 0.0L) || !std::isfinite(b.eps)) throw NoAdmissibleEps("eps is not a positive finite number");
    b.branch_horizon = std::exp(log_b1);
    b.branch_quadratic = safe_exp(log_rhs(u));

    // x = mu C_delta e^{kappa eps} eps / Q; Delta = 1/4 - 2x once delta_aux = 1/(8Q)
    const ld log_x = log_mu + b.log_C_delta + b.kappa * b.eps + u - log_Q;
    const ld x = std::exp(log_x);
    ld Delta = 0.25L - 2.0L * x;
    if (Delta < 0.0L && Delta > -64.0L * std::numeric_limits<ld>::epsilon()) Delta = 0.0L;
    if (Delta < 0.0L) throw NoAdmissibleEps("discriminant is negative at the selected eps");
    b.Delta = Delta;
    const ld sq = std::sqrt(Delta);
    b.A = (3.0L - 2.0L * sq) / (4.0L * b.delta_aux);
    // 1 - delta A = (1 + 2 sqrt(Delta)) / 4; closing identity divided through by Q
    const ld one_minus_dA = 1.0L - b.delta_aux * b.A;
    const ld AQ = b.A / b.Q;
    const ld lhs = 1.0L + x / one_minus_dA + 0.25L * AQ;
    const ld rhs = 0.5L * AQ;
    b.identity_residual = std::fabs(lhs - rhs) / std::fabs(rhs);
    b.log_ball_exp_bound = b.log_C_delta + lead + b.delta_aux * eta * eta - std::log(one_minus_dA);
    return b;
}

// ---------------------------------------------------------------------------

double c_tilde_from(double C, double xi_sup) { return std::max({3.0 * C, xi_sup * xi_sup, 1.0}); }

long double Thm48Bundle::alpha_bound(double t) const {
    const ld c = 1.0L / (2.0L + L);
    const ld k = (2.0L + L) * static_cast<ld>(C_tilde);
    const ld tau = static_cast<ld>(T) + static_cast<ld>(K) - static_cast<ld>(t);
    // C + (C + c)(e^{k tau} - 1): equals C_tilde exactly at tau = 0
    return static_cast<ld>(C_tilde) + (static_cast<ld>(C_tilde) + c) * std::expm1(k * tau);
}

Thm48Bundle thm48_alpha(double C_tilde, double L, double T, double K) {
    if (!(C_tilde > 0.0) || !(L > 0.0) || !(T > 0.0) || !(K >= 0.0)) throw InvalidArgument("thm48 needs C_tilde, L, T > 0");
    Thm48Bundle b;
    b.C_tilde = C_tilde;
    b.L = L;
    b.T = T;
    b.K = K;
    b.lambda_bar = b.alpha_bound(0.0);
    return b;
}

Thm48Bundle thm48_alpha(double C_tilde, double L, double T, double K, const Thm44Params& wp, double eta_z2) {
    Thm48Bundle b = thm48_alpha(C_tilde, L, T, K);
    try {
        Thm44Bundle w = thm44_constants(wp, {static_cast<double>(std::sqrt(b.lambda_bar)), eta_z2});
        b.theta_lambda = w.eps;
    } catch (const OverflowRegime& e) {
        b.theta_lambda = 0.0L;
        b.theta_overflow = true;
        b.theta_note = std::string("window width not representable: ") + e.what() + " (log " + fmt(e.log_value()) + ")";
    }
    return b;
}

long double alpha_bound_volterra(double C_tilde, double L, double T, double K, double t, long double tol) {
    const ld C = C_tilde, k = (2.0L + static_cast<ld>(L)) * C;
    const ld tau = static_cast<ld>(T) + static_cast<ld>(K) - static_cast<ld>(t);
    // alpha_{n+1}(tau) = C + C tau + k int_0^tau alpha_n, with polynomial iterates in tau
    std::vector<ld> coef{C};
    auto eval = [&](const std::vector<ld>& c) {
        ld s = 0.0L;
        for (std::size_t j = c.size(); j-- > 0;) s = s * tau + c[j];
        return s;
    };
    ld prev = eval(coef);
    for (int n = 0; n < 5000; ++n) {
        std::vector<ld> next(coef.size() + 1, 0.0L);
        next[0] = C;
        next[1] = C;
        for (std::size_t j = 0; j < coef.size(); ++j) next[j + 1] += k * coef[j] / static_cast<ld>(j + 1);
        coef = std::move(next);
        ld cur = eval(coef);
        if (std::fabs(cur - prev) <= tol * std::max<ld>(1.0L, std::fabs(cur))) return cur;
        prev = cur;
    }
    throw NoAdmissibleEps("Volterra iteration did not converge");
}

// ---------------------------------------------------------------------------

std::string to_string(VerdictKind v) {
    switch (v) {
        case VerdictKind::Applies: return "applies";
        case VerdictKind::Fails: return "fails";
        case VerdictKind::NotCheckable: return "not-checkable";
    }
    return "not-checkable";
}

namespace {

bool node_bounded(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Constant: return true;
        case NodeKind::Variable: return n->var == Var::T;
        case NodeKind::Sin:
        case NodeKind::Cos: return true;
        case NodeKind::Neg:
        case NodeKind::Abs:
        case NodeKind::Exp:
        case NodeKind::Pow: return node_bounded(n->kids[0]);
        case NodeKind::Add:
        case NodeKind::Sub:
        case NodeKind::Mul: return node_bounded(n->kids[0]) && node_bounded(n->kids[1]);
        case NodeKind::Div:
            return node_bounded(n->kids[0]) && n->kids[1]->kind == NodeKind::Constant && n->kids[1]->value != 0.0;
        case NodeKind::Expect: return node_bounded(n->kids[0]);
    }
    return false;
}

void collect_vars(const NodePtr& n, std::set<Var>& out, bool inside_e) {
    if (n->kind == NodeKind::Variable) out.insert(n->var);
    if (n->kind == NodeKind::Expect) out.insert(Var::YDelta);  // any anticipated term counts as the h-part
    for (const auto& k : n->kids) collect_vars(k, out, inside_e || n->kind == NodeKind::Expect);
}

void summands(const NodePtr& n, std::vector<NodePtr>& out) {
    if (n->kind == NodeKind::Add || n->kind == NodeKind::Sub) {
        summands(n->kids[0], out);
        summands(n->kids[1], out);
    } else {
        out.push_back(n);
    }
}

// f(t, z) + h(t, y, anticipated): every top-level summand touches z alone or only y / E-terms.
bool split_structure(const Generator& g) {
    const auto* eg = dynamic_cast<const ExprGenerator*>(&g);
    if (!eg) return false;
    std::vector<NodePtr> parts;
    summands(eg->ast().root, parts);
    for (const auto& s : parts) {
        std::set<Var> v;
        collect_vars(s, v, false);
        bool has_z = v.count(Var::Z) > 0;
        bool has_other = v.count(Var::Y) > 0 || v.count(Var::YDelta) > 0;
        if (has_z && has_other) return false;
    }
    return true;
}

bool any_unclassified(const GrowthReport& r) {
    return r.z_growth == ZGrowth::Unclassified || r.y_growth == YGrowth::Unclassified ||
           r.anticipated_growth == AnticipatedGrowth::Unclassified;
}

bool constant_lambda(const LambdaFunction& l) {
    if (dynamic_cast<const ConstantLambda*>(&l)) return true;
    return l.describe().find_first_of("ty") == std::string::npos;
}

Verdict make(VerdictKind k, std::string reason, std::string binding = {}, double value = 0.0) {
    return Verdict{k, std::move(reason), std::move(binding), value};
}

}  // namespace

bool terminal_bounded(const TerminalFunction& f) {
    if (f.constant_value()) return true;
    const auto* et = dynamic_cast<const ExprTerminal*>(&f);
    if (!et) return false;
    for (const auto& a : et->expressions())
        if (!node_bounded(a.root)) return false;
    return true;
}

double lambda_sup_integral(const LambdaFunction& lambda, double T, double R) {
    const int nt = 17;
    const double dy = 1.0 / 64.0;
    const int ny = static_cast<int>(std::ceil(2.0 * R / dy));
    double s = 0.0;
    for (int j = 0; j <= ny; ++j) {
        const double y = -R + j * (2.0 * R / ny);
        double mx = 0.0;
        for (int q = 0; q < nt; ++q) mx = std::max(mx, std::fabs(lambda.value(T * q / (nt - 1), y)));
        s += (j == 0 || j == ny ? 0.5 : 1.0) * mx;
    }
    return s * (2.0 * R / ny);
}

bool lambda_integrable(const LambdaFunction& lambda, double T) {
    if (lambda.is_zero()) return true;
    const double inner = lambda_sup_integral(lambda, T, 16.0);
    const double outer = lambda_sup_integral(lambda, T, 64.0);
    return std::isfinite(outer) && outer - inner <= 1e-6 * std::max(1.0, inner);
}

ApplicabilityReport applicability_report(const ProblemSpec& problem, const Thm34Norms& norms) {
    ApplicabilityReport rep;
    const double L = problem.L();
    const auto& sc = problem.constants;
    rep.thm34 = thm34_constants(sc.C, L, problem.T, problem.K, norms);
    const GrowthReport gr = problem.generator->growth();
    const bool scalar = problem.m == 1 && problem.d == 1;
    const bool bounded_term = terminal_bounded(*problem.terminal_xi) && terminal_bounded(*problem.terminal_eta);

    if (any_unclassified(gr)) {
        const std::string why = "generator growth could not be classified";
        rep.small_data_global = rep.bounded_local = rep.bounded_global = rep.unbounded_transform =
            make(VerdictKind::NotCheckable, why);
        return rep;
    }

    // small-data global fixed point
    if (!bounded_term) {
        rep.small_data_global = make(VerdictKind::Fails, "terminal data is not bounded", "xi_sup", norms.xi_sup);
    } else if (rep.thm34.admissible) {
        rep.small_data_global = make(VerdictKind::Applies,
                                     "terminal norms " + fmt(rep.thm34.lhs) + " <= rho2 = " + fmt(rep.thm34.rho2), "rho2",
                                     static_cast<double>(rep.thm34.rho2));
    } else {
        rep.small_data_global = make(VerdictKind::Fails,
                                     "terminal data not small: " + fmt(rep.thm34.lhs) + " > rho2 = " + fmt(rep.thm34.rho2),
                                     "rho2", static_cast<double>(rep.thm34.rho2));
    }

    Thm44Params wp{sc.C, sc.gamma, sc.alpha_holder, L, problem.T, problem.K};

    // local window with bounded terminal
    if (!scalar) {
        rep.bounded_local = make(VerdictKind::Fails, "local theory is scalar (m = d = 1)");
    } else if (gr.y_growth == YGrowth::Quadratic) {
        rep.bounded_local = make(VerdictKind::Fails, "generator is quadratic in y");
    } else if (gr.anticipated_growth == AnticipatedGrowth::Quadratic) {
        rep.bounded_local = make(VerdictKind::Fails, "anticipated arguments enter quadratically");
    } else if (gr.anticipated_growth == AnticipatedGrowth::Power && gr.anticipated_power > 1.0 + sc.alpha_holder + 1e-12) {
        rep.bounded_local = make(VerdictKind::Fails,
                                 "anticipated Z exponent " + fmt(gr.anticipated_power) + " exceeds 1 + alpha_holder",
                                 "alpha_holder", sc.alpha_holder);
    } else if (!bounded_term) {
        rep.bounded_local = make(VerdictKind::Fails, "terminal data is not bounded");
    } else {
        try {
            rep.thm44 = thm44_constants(wp, {norms.xi_sup, norms.eta_z2});
            rep.has_thm44 = true;
            rep.bounded_local = make(VerdictKind::Applies, "solvable on the window [T - eps, T]", "eps",
                                     static_cast<double>(rep.thm44.eps));
        } catch (const OverflowRegime& e) {
            rep.bounded_local = make(VerdictKind::NotCheckable,
                                     std::string("overflow regime: ") + e.what() + " (log " + fmt(e.log_value()) + ")");
        } catch (const NoAdmissibleEps& e) {
            rep.bounded_local = make(VerdictKind::Fails, e.what());
        }
    }

    // split generator, global by stitching
    const bool lambda_ok = !problem.has_lambda() || constant_lambda(*problem.lambda_term);
    if (!scalar) {
        rep.bounded_global = make(VerdictKind::Fails, "global stitching is scalar (m = d = 1)");
    } else if (!split_structure(*problem.generator) || !lambda_ok) {
        rep.bounded_global = make(VerdictKind::Fails, "generator does not split as f(t, z) + h(t, y, anticipated)");
    } else if (!gr.anticipated_z_bounded) {
        rep.bounded_global = make(VerdictKind::Fails, "h is not bounded in the anticipated Z argument");
    } else if (gr.y_growth == YGrowth::Quadratic || gr.anticipated_growth == AnticipatedGrowth::Quadratic ||
               gr.anticipated_growth == AnticipatedGrowth::Power) {
        rep.bounded_global = make(VerdictKind::Fails, "h grows faster than linearly");
    } else if (!bounded_term) {
        rep.bounded_global = make(VerdictKind::Fails, "terminal data is not bounded");
    } else {
        const double ct = c_tilde_from(sc.C, norms.xi_sup);
        rep.thm48 = thm48_alpha(ct, L, problem.T, problem.K, wp, norms.eta_z2);
        rep.has_thm48 = true;
        std::string why = "barrier lambda_bar = " + fmt(rep.thm48.lambda_bar);
        if (rep.thm48.theta_overflow) rep.notes.push_back(rep.thm48.theta_note);
        rep.bounded_global = make(VerdictKind::Applies, why, "lambda_bar", static_cast<double>(rep.thm48.lambda_bar));
    }

    // exponential transform
    if (!scalar) {
        rep.unbounded_transform = make(VerdictKind::Fails, "transform theory is scalar (m = d = 1)");
    } else if (!gr.z_free) {
        rep.unbounded_transform = make(VerdictKind::Fails, "base generator depends on z outside lambda(t,y) z^2");
    } else if (!gr.bounded) {
        rep.unbounded_transform = make(VerdictKind::Fails, "base generator is not bounded");
    } else if (problem.has_lambda() && !lambda_integrable(*problem.lambda_term, problem.T)) {
        rep.unbounded_transform = make(VerdictKind::Fails, "sup_t |lambda(t, .)| is not integrable in y");
    } else {
        rep.unbounded_transform = make(VerdictKind::Applies, "bounded z-free generator with integrable lambda");
    }
    rep.notes.push_back("Step-3 contraction constants built from existence-only BMO inequalities are not computable");
    return rep;
}

}  // namespace absde
