#include "absde/quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "absde/errors.hpp"
#include "absde/parallel.hpp"
#include "absde/sweep.hpp"
#include "absde/transform.hpp"

namespace absde {

// ---------------------------------------------------------------------------

double inner_quadratic_step(double a, double h, double z, const double* e, const Generator& gen, double t, double tol,
                            int max_iter, int* iterations) {
    auto f = [&](double y) { return gen.evaluate_scalar(t, y, z, e); };
    auto F = [&](double y) { return y - a - h * f(y); };
    auto done = [&](int it, double y) {
        if (iterations) *iterations = it;
        return y;
    };
    const double fa = f(a);
    if (!std::isfinite(fa)) throw DomainError("generator is not finite at the regressed value");
    if (fa == 0.0) return done(0, a);

    double r = std::max(2.0 * h * std::fabs(fa), tol * (1.0 + std::fabs(a)));
    double lo = a - r, hi = a + r, Flo = F(lo), Fhi = F(hi);
    bool bracket = false;
    for (int k = 0; k < 60; ++k) {
        if (std::isfinite(Flo) && std::isfinite(Fhi) && (Flo <= 0.0) != (Fhi <= 0.0)) {
            bracket = true;
            break;
        }
        r *= 2.0;
        lo = a - r;
        hi = a + r;
        Flo = F(lo);
        Fhi = F(hi);
    }

    auto derivative = [&](double y) {
        const double eps = 1e-7 * (1.0 + std::fabs(y));
        return 1.0 - h * (f(y + eps) - f(y - eps)) / (2.0 * eps);
    };

    if (!bracket) {
        // A tangent root (F touches zero without crossing) has no sign change; plain Newton still finds it.
        double y = a;
        for (int it = 1; it <= max_iter; ++it) {
            const double Fy = F(y);
            if (!std::isfinite(Fy)) break;
            if (std::fabs(Fy) <= tol * (1.0 + std::fabs(y))) return done(it, y);
            const double dF = derivative(y);
            if (!std::isfinite(dF) || dF == 0.0) break;
            y -= Fy / dF;
        }
        throw NoBracket("no sign change of y - a - h f around a = " + std::to_string(a) + " at t = " + std::to_string(t));
    }

    const bool increasing = Flo <= 0.0;  // orientation of the bracket
    double y = std::clamp(a + h * fa, lo, hi);
    for (int it = 1; it <= max_iter; ++it) {
        const double Fy = F(y);
        if (!std::isfinite(Fy)) throw DomainError("generator is not finite inside the bracket");
        if (Fy == 0.0) return done(it, y);
        if ((Fy < 0.0) == increasing)
            lo = y;
        else
            hi = y;
        const double dF = derivative(y);
        double next = y - Fy / dF;
        if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
        const double step = std::fabs(next - y);
        y = next;
        if (step <= tol * (1.0 + std::fabs(y)) || hi - lo <= tol * (1.0 + std::fabs(y))) return done(it, y);
    }
    throw InnerDivergence("inner quadratic step did not converge in " + std::to_string(max_iter) +
                          " iterations at t = " + std::to_string(t));
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

bool stalled(const std::vector<double>& diffs) {
    return diffs.size() < 2 || !(diffs.back() < diffs[diffs.size() - 2]);
}

void attach_contraction(QuadraticSolveResult& r) {
    if (r.outer_diffs.size() >= 3) r.diagnostics.contraction = contraction_report(r.outer_diffs);
}

Thm44Params thm44_params(const ProblemSpec& p) {
    return {p.constants.C, p.constants.gamma, p.constants.alpha_holder, p.L(), p.T, p.K};
}

struct WindowOutcome {
    std::vector<double> diffs;
    bool converged = false;
};

// Outer iteration on one window [i_lo, i_hi): QuadraticImplicit sweeps against `frozen`, the
// previous iterate. Slices right of the window must already agree in `sol` and `frozen`; on
// return the window is synced too, so consecutive windows can share one frozen copy.
WindowOutcome local_window(const SweepSetup& s, DiscreteSolution& sol, DiscreteSolution& frozen, int i_lo, int i_hi,
                           const OuterSpec& outer) {
    WindowOutcome w;
    SweepOptions opt;
    opt.mode = UpdateMode::QuadraticImplicit;
    opt.i_lo = i_lo;
    opt.i_hi = i_hi;
    opt.frozen = &frozen;
    const std::size_t ny = sol.y_stride(), nz = sol.z_stride();
    auto sync = [&] {
        for (int i = i_lo; i < i_hi; ++i) {
            std::copy_n(sol.y_row(i), ny, frozen.y_row(i));
            std::copy_n(sol.z_row(i), nz, frozen.z_row(i));
        }
    };
    sync();
    for (int n = 0; n < outer.max_iter; ++n) {
        try {
            backward_sweep(s, sol, opt);
        } catch (const DomainError& e) {
            w.diffs.push_back(INFINITY);
            throw OuterDivergence(std::string("iterate blew up: ") + e.what(), w.diffs, sol.warnings);
        }
        const double diff = iterate_distance(sol, frozen, i_lo, i_hi);
        w.diffs.push_back(diff);
        if (!std::isfinite(diff)) throw OuterDivergence("outer difference is not finite", w.diffs, sol.warnings);
        sync();
        if (diff <= outer.tol) {
            w.converged = true;
            break;
        }
    }
    if (!w.converged) {
        if (stalled(w.diffs))
            throw OuterDivergence("outer iteration exhausted with nondecreasing differences", w.diffs, sol.warnings);
        sol.warnings.push_back("outer iteration reached outer_max = " + std::to_string(outer.max_iter) +
                               " with last difference " + fmt(w.diffs.back()));
    }
    return w;
}

void require_scalar(const ProblemSpec& p, const char* who) {
    if (p.m != 1 || p.d != 1) throw InvalidArgument(std::string(who) + " needs a scalar problem (m = d = 1)");
}

void check_outer(const OuterSpec& o) {
    if (!(o.tol > 0.0)) throw InvalidArgument("outer tol must be positive");
    if (o.max_iter < 1) throw InvalidArgument("outer max_iter must be positive");
    if (!(o.barrier_slack >= 0.0)) throw InvalidArgument("barrier_slack must be nonnegative");
    if (o.window_steps < 0) throw InvalidArgument("window_steps must be nonnegative");
}

}  // namespace

// ---------------------------------------------------------------------------

QuadraticSolveResult solve_picard_small(const ProblemSpec& problem, const NumericsSpec& numerics,
                                        const OuterSpec& outer, const PathEnsemble* paths) {
    check_outer(outer);
    SweepSetup s = make_setup(problem, problem.full_generator(), problem.terminal_xi, problem.terminal_eta, numerics, paths);
    QuadraticSolveResult r;
    r.strategy = Strategy::PicardSmall;
    DiscreteSolution prev = init_solution(s);
    const Thm34Norms norms = estimate_terminal_norms(problem, prev, numerics.basis);
    const Thm34Bundle b = thm34_constants(problem.constants.C, problem.L(), problem.T, problem.K, norms);
    r.diagnostics.thm34 = b;
    r.certified = b.admissible;
    if (!b.admissible)
        prev.warnings.push_back("CertificationFailed: small-data condition does not hold (" + fmt(double(b.lhs)) +
                                " > rho2 = " + fmt(double(b.rho2)) + "); solving anyway");
    DiscreteSolution cur = prev;
    SweepOptions opt;
    opt.mode = UpdateMode::FrozenDriver;
    bool converged = false;
    for (int n = 0; n < outer.max_iter; ++n) {
        opt.driver = &prev;
        opt.frozen = &prev;
        try {
            backward_sweep(s, cur, opt);
        } catch (const DomainError& e) {
            r.outer_diffs.push_back(INFINITY);
            throw OuterDivergence(std::string("iterate blew up: ") + e.what(), r.outer_diffs, prev.warnings);
        }
        const double diff = iterate_distance(cur, prev, 0, s.grid.n_T);
        r.outer_diffs.push_back(diff);
        cur.max_inner_iterations = std::max(cur.max_inner_iterations, prev.max_inner_iterations);
        std::swap(cur, prev);
        if (!std::isfinite(diff)) throw OuterDivergence("outer difference is not finite", r.outer_diffs, prev.warnings);
        if (diff <= outer.tol) {
            converged = true;
            break;
        }
    }
    r.outer_iterations = static_cast<int>(r.outer_diffs.size());
    if (!converged) {
        if (stalled(r.outer_diffs))
            throw OuterDivergence("outer iteration exhausted with nondecreasing differences", r.outer_diffs, prev.warnings);
        prev.warnings.push_back("outer iteration reached outer_max = " + std::to_string(outer.max_iter) +
                                " with last difference " + fmt(r.outer_diffs.back()));
    }
    finalize_solution(prev);
    r.diagnostics.ball = ball_membership(prev, b, numerics.basis);
    r.solution = std::move(prev);
    attach_contraction(r);
    return r;
}

QuadraticSolveResult solve_local_contraction(const ProblemSpec& problem, const NumericsSpec& numerics,
                                             const OuterSpec& outer, const PathEnsemble* paths) {
    check_outer(outer);
    require_scalar(problem, "local contraction");
    SweepSetup s = make_setup(problem, problem.full_generator(), problem.terminal_xi, problem.terminal_eta, numerics, paths);
    QuadraticSolveResult r;
    r.strategy = Strategy::LocalContraction;
    DiscreteSolution sol = init_solution(s);
    const Thm34Norms norms = estimate_terminal_norms(problem, sol, numerics.basis);
    const Thm44Params wp = thm44_params(problem);
    std::optional<Thm44Bundle> b;
    try {
        b = thm44_constants(wp, {norms.xi_sup, norms.eta_z2});
        r.diagnostics.thm44 = *b;
    } catch (const OverflowRegime& e) {
        r.diagnostics.notes.push_back(std::string("window constants overflow: ") + e.what());
    } catch (const NoAdmissibleEps& e) {
        r.diagnostics.notes.push_back(std::string("no admissible eps: ") + e.what());
    }
    const TimeGrid& g = s.grid;
    double t_lo = 0.0;
    if (outer.t_lo) {
        t_lo = *outer.t_lo;
        if (!(t_lo >= 0.0 && t_lo < g.T)) throw InvalidArgument("window left edge must lie in [0, T)");
    } else if (b) {
        t_lo = std::max(0.0, g.T - static_cast<double>(b->eps));
    }
    const int width = std::max(1, static_cast<int>(std::lround((g.T - t_lo) / g.h)));
    const int i_lo = std::max(0, g.n_T - width);
    const double window = g.T - g.time(i_lo);
    r.certified = b.has_value() && window <= static_cast<double>(b->eps) * (1.0 + 1e-12);
    if (!r.certified)
        sol.warnings.push_back("CertificationFailed: window width " + fmt(window) + " exceeds the certified eps" +
                               (b ? " = " + fmt(double(b->eps)) : std::string(" (not computable)")) + "; solving anyway");
    DiscreteSolution frozen = sol;
    WindowOutcome w = local_window(s, sol, frozen, i_lo, g.n_T, outer);
    r.outer_diffs = w.diffs;
    r.outer_iterations = static_cast<int>(w.diffs.size());
    r.diagnostics.window_edges = {g.n_T, i_lo};
    if (i_lo > 0) r.diagnostics.notes.push_back("Y0 statistics refer to the window edge t = " + fmt(g.time(i_lo)));
    finalize_solution(sol, i_lo);
    if (b) r.diagnostics.ball = ball_membership(sol, *b, wp, i_lo, numerics.basis);
    r.solution = std::move(sol);
    attach_contraction(r);
    return r;
}

QuadraticSolveResult solve_global_stitch(const ProblemSpec& problem, const NumericsSpec& numerics,
                                         const OuterSpec& outer, const PathEnsemble* paths) {
    check_outer(outer);
    require_scalar(problem, "global stitch");
    SweepSetup s = make_setup(problem, problem.full_generator(), problem.terminal_xi, problem.terminal_eta, numerics, paths);
    QuadraticSolveResult r;
    r.strategy = Strategy::GlobalStitch;
    DiscreteSolution sol = init_solution(s);
    const Thm34Norms norms = estimate_terminal_norms(problem, sol, numerics.basis);
    const ApplicabilityReport rep = applicability_report(problem, norms);
    r.certified = rep.bounded_global.kind == VerdictKind::Applies;
    if (!r.certified) sol.warnings.push_back("CertificationFailed: " + rep.bounded_global.reason + "; solving anyway");

    const double ct = c_tilde_from(problem.constants.C, norms.xi_sup);
    const Thm48Bundle b = thm48_alpha(ct, problem.L(), problem.T, problem.K, thm44_params(problem), norms.eta_z2);
    r.diagnostics.thm48 = b;
    const TimeGrid& g = s.grid;
    int steps = outer.window_steps;
    if (steps == 0) {
        const long double th = b.theta_lambda;
        steps = static_cast<int>(std::min<long double>(g.n_T, std::floor(th / g.h)));
        if (steps < 1) {
            steps = 1;
            r.diagnostics.notes.push_back("theta_lambda = " + fmt(double(th)) +
                                          " is below one grid step; stitching uses one-step windows");
            if (b.theta_overflow) r.diagnostics.notes.push_back(b.theta_note);
        }
    }
    steps = std::min(steps, g.n_T);

    r.diagnostics.window_edges.push_back(g.n_T);
    DiscreteSolution frozen = sol;
    for (int i_hi = g.n_T; i_hi > 0;) {
        const int i_lo = std::max(0, i_hi - steps);
        WindowOutcome w = local_window(s, sol, frozen, i_lo, i_hi, outer);
        for (std::size_t k = 0; k < w.diffs.size(); ++k) {
            if (k < r.outer_diffs.size())
                r.outer_diffs[k] = std::max(r.outer_diffs[k], w.diffs[k]);
            else
                r.outer_diffs.push_back(w.diffs[k]);
        }
        r.diagnostics.window_edges.push_back(i_lo);
        i_hi = i_lo;
    }
    r.outer_iterations = static_cast<int>(r.outer_diffs.size());
    finalize_solution(sol);
    BarrierReport br = barrier_check(sol, b, outer.barrier_slack);
    r.diagnostics.barrier = br;
    if (!br.holds)
        throw BarrierViolation("max |Y|^2 / alpha(t) = " + fmt(br.worst_ratio) + " at slice " +
                               std::to_string(br.worst_slice) + " exceeds 1 + " + fmt(outer.barrier_slack));
    r.solution = std::move(sol);
    // per-window diffs are merged by iteration index, so the series is only indicative
    attach_contraction(r);
    return r;
}

QuadraticSolveResult solve_transform(const ProblemSpec& problem, const NumericsSpec& numerics, const OuterSpec& outer,
                                     const PathEnsemble* paths) {
    require_scalar(problem, "transform");
    QuadraticSolveResult r;
    r.strategy = Strategy::Transform;
    r.outer_iterations = 1;
    if (!problem.has_lambda()) {
        r.solution = solve_anticipated_lipschitz(problem, numerics, paths);
        r.certified = true;
        r.diagnostics.notes.push_back("lambda vanishes; phi is the identity");
        return r;
    }
    const TimeGrid g = build_time_grid(problem.T, problem.K, numerics.n_T);
    auto phi = build_phi_transform(problem.lambda_term, outer.quad_tol);
    phi->tabulate(g.times());
    auto gen = std::make_shared<TransformedGenerator>(problem.generator, phi);
    auto xi_bar = std::make_shared<TransformedTerminal>(problem.terminal_xi, nullptr, phi);
    auto eta_bar = std::make_shared<TransformedTerminal>(problem.terminal_xi, problem.terminal_eta, phi);
    SweepSetup s = make_setup(problem, gen, xi_bar, eta_bar, numerics, paths);
    s.clamp_fitted = true;  // phi has a bounded-below image; keep fits inside it
    DiscreteSolution sol = init_solution(s);
    SweepOptions opt;
    opt.mode = numerics.scheme == Scheme::Explicit ? UpdateMode::Explicit : UpdateMode::Implicit;
    backward_sweep(s, sol, opt);
    finalize_solution(sol);
    const double ybar_stderr = sol.Y0_stderr;

    // back to the original coordinates; drift and estimators stay in transformed coordinates
    const std::size_t n = sol.n_paths;
    for (int i = 0; i < g.n_T; ++i) {
        const double t = g.time(i);
        double* y = sol.y_row(i);
        double* z = sol.z_row(i);
        parallel_chunks(n, [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t p = b; p < e; ++p) {
                y[p] = phi->phi_inv_fast(t, y[p]);
                z[p] /= phi->phi_y_fast(t, y[p]);
            }
        });
    }
    for (int i = g.n_T; i <= g.n_total; ++i) {
        const double t = g.time(i);
        const double* w = s.paths->state_row(i);
        double* y = sol.y_row(i);
        double* z = sol.z_row(i);
        for (std::size_t p = 0; p < n; ++p) {
            problem.terminal_xi->evaluate(t, w + p, y + p);
            problem.terminal_eta->evaluate(t, w + p, z + p);
        }
    }
    for (int i = 0; i < g.n_T; ++i)
        for (std::size_t q = 0; q < n; ++q)
            if (!std::isfinite(sol.y_row(i)[q]) || !std::isfinite(sol.z_row(i)[q]))
                throw DomainError("back-mapped solution is not finite at t = " + std::to_string(g.time(i)));
    double mean = 0.0;
    for (std::size_t p = 0; p < n; ++p) mean += sol.y_row(0)[p];
    sol.Y0_mean = mean / static_cast<double>(n);
    sol.Y0_stderr = ybar_stderr / phi->phi_y(0.0, sol.Y0_mean);

    const Thm34Norms norms = estimate_terminal_norms(problem, sol, numerics.basis);
    const ApplicabilityReport rep = applicability_report(problem, norms);
    r.certified = rep.unbounded_transform.kind == VerdictKind::Applies;
    if (!r.certified) sol.warnings.push_back("CertificationFailed: " + rep.unbounded_transform.reason + "; solving anyway");
    r.solution = std::move(sol);
    return r;
}

Strategy choose_strategy(const ProblemSpec& problem, const ApplicabilityReport& rep) {
    if (problem.has_lambda() && rep.unbounded_transform.kind == VerdictKind::Applies) return Strategy::Transform;
    if (rep.small_data_global.kind == VerdictKind::Applies) return Strategy::PicardSmall;
    if (rep.bounded_global.kind == VerdictKind::Applies) return Strategy::GlobalStitch;
    return Strategy::Lipschitz;
}

QuadraticSolveResult solve_with_strategy(Strategy st, const ProblemSpec& problem, const NumericsSpec& numerics,
                                         const OuterSpec& outer, const PathEnsemble* paths) {
    switch (st) {
        case Strategy::PicardSmall: return solve_picard_small(problem, numerics, outer, paths);
        case Strategy::LocalContraction: return solve_local_contraction(problem, numerics, outer, paths);
        case Strategy::GlobalStitch: return solve_global_stitch(problem, numerics, outer, paths);
        case Strategy::Transform: return solve_transform(problem, numerics, outer, paths);
        case Strategy::Lipschitz: {
            QuadraticSolveResult r;
            r.strategy = Strategy::Lipschitz;
            r.solution = solve_anticipated_lipschitz(problem, numerics, paths);
            r.outer_iterations = 1;
            {
                const GrowthReport g = problem.full_generator()->growth();
                r.certified = g.suggested_strategy == Strategy::Lipschitz;
            }
            return r;
        }
        case Strategy::Auto:
        case Strategy::Manual: break;
    }
    throw InvalidArgument("strategy must be resolved before dispatch");
}

}  // namespace absde
