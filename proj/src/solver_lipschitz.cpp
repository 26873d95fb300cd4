#include "absde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absde/errors.hpp"
#include "absde/parallel.hpp"
#include "absde/quadratic.hpp"
#include "absde/sweep.hpp"

namespace absde {

MartingaleZ martingale_representation_z(const double* y_next, const double* dW, const double* states, std::size_t n,
                                        int d, const BasisSpec& basis, double h) {
    SliceRegression base(states, n, d, basis);
    JointRegression joint(base, dW, d, h);
    MartingaleZ out;
    out.z.resize(n * d);
    out.mean.resize(n);
    JointFit fit = joint.fit(y_next, out.mean.data(), out.z.data());
    out.est = std::move(fit.z);
    return out;
}

SweepSetup make_setup(const ProblemSpec& problem, GeneratorPtr gen, TerminalPtr xi, TerminalPtr eta,
                      const NumericsSpec& num, const PathEnsemble* paths) {
    problem.validate();
    SweepSetup s;
    s.problem = &problem;
    s.gen = std::move(gen);
    s.xi = std::move(xi);
    s.eta = std::move(eta);
    s.grid = build_time_grid(problem.T, problem.K, num.n_T);
    s.num = num;
    s.dmap = snap_delay(s.grid, problem.delta_shift);
    s.zmap = snap_delay(s.grid, problem.zeta_shift);
    if (!(num.inner_tol > 0.0)) throw InvalidArgument("inner_tol must be positive");
    if (num.inner_max_iter < 1) throw InvalidArgument("inner_max_iter must be positive");
    if (paths) {
        if (paths->n_steps != s.grid.n_total || paths->d != problem.d || std::fabs(paths->h - s.grid.h) > 1e-12 * s.grid.h)
            throw InvalidArgument("path ensemble does not match the time grid");
        s.paths = paths;
        s.num.n_paths = paths->n_paths;
        s.num.seed = paths->seed;
        s.num.antithetic = paths->antithetic;
    } else {
        s.owned = std::make_shared<PathEnsemble>(simulate_brownian(s.grid, problem.d, num.n_paths, num.seed, num.antithetic));
        s.paths = s.owned.get();
    }
    return s;
}

DiscreteSolution init_solution(const SweepSetup& s) {
    DiscreteSolution sol;
    sol.grid = s.grid;
    sol.m = s.problem->m;
    sol.d = s.problem->d;
    sol.n_paths = s.paths->n_paths;
    sol.seed = s.num.seed;
    sol.numerics = s.num;
    sol.paths = s.owned ? s.owned : std::shared_ptr<const PathEnsemble>(s.paths, [](const PathEnsemble*) {});
    const int m = sol.m, d = sol.d;
    const std::size_t slices = static_cast<std::size_t>(s.grid.n_total) + 1;
    sol.Y.assign(slices * sol.y_stride(), 0.0);
    sol.Z.assign(slices * sol.z_stride(), 0.0);
    sol.drift.assign(static_cast<std::size_t>(s.grid.n_T) * sol.y_stride(), 0.0);
    sol.estimators.resize(static_cast<std::size_t>(s.grid.n_T));
    sol.residual_rms.assign(static_cast<std::size_t>(s.grid.n_T), 0.0);
    for (const DelayMap* dm : {&s.dmap, &s.zmap})
        for (const auto& w : dm->warnings) sol.warnings.push_back(w);
    for (int i = s.grid.n_T; i <= s.grid.n_total; ++i) {
        const double t = s.grid.time(i);
        const double* w = s.paths->state_row(i);
        double* y = sol.y_row(i);
        double* z = sol.z_row(i);
        parallel_chunks(sol.n_paths, [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t p = b; p < e; ++p) {
                s.xi->evaluate(t, w + p * d, y + p * m);
                s.eta->evaluate(t, w + p * d, z + p * m * d);
            }
        });
    }
    for (double v : sol.Y)
        if (!std::isfinite(v)) throw DomainError("terminal_xi produced a non-finite value");
    for (double v : sol.Z)
        if (!std::isfinite(v)) throw DomainError("terminal_eta produced a non-finite value");
    return sol;
}

namespace {

// A conditional expectation lies in the range of its target; polynomial fits can leave it in the tails.
void clamp_to_range(const double* target, double* fitted, std::size_t n) {
    const auto [lo, hi] = std::minmax_element(target, target + n);
    const double a = *lo, b = *hi;
    for (std::size_t p = 0; p < n; ++p) fitted[p] = std::clamp(fitted[p], a, b);
}

struct SliceWork {
    const SweepSetup& s;
    DiscreteSolution& sol;
    const SweepOptions& opt;
    int i;
    double t, h;
    std::size_t n;
    int m, d;
    std::size_t ne;
    const SliceRegression& base;
    std::vector<double> e;  // n x ne
    std::vector<double> target, fitted;

    // E[...] values on slice i from the given source tables.
    void expectations(const DiscreteSolution& src, bool keep) {
        if (ne == 0) return;
        const int jd = s.dmap.shift_index[i], jz = s.zmap.shift_index[i];
        const double td = s.grid.time(jd), tz = s.grid.time(jz);
        const double* yd = src.y_row(jd);
        const double* yz = src.y_row(jz);
        const double* zz = src.z_row(jz);
        target.resize(n);
        fitted.resize(n);
        if (keep) sol.estimators[i].e.clear();
        for (std::size_t k = 0; k < ne; ++k) {
            parallel_chunks(n, [&](std::size_t, std::size_t b, std::size_t end) {
                Anticipated a;
                a.t_delta = td;
                a.t_zeta = tz;
                for (std::size_t p = b; p < end; ++p) {
                    a.ydelta = yd + p * m;
                    a.y_at_zeta = yz + p * m;
                    a.zzeta = zz + p * m * d;
                    target[p] = s.gen->expectation_integrand(k, t, a);
                }
            });
            for (std::size_t p = 0; p < n; ++p)
                if (!std::isfinite(target[p])) throw DomainError("anticipated integrand is not finite");
            CondEstimator est = base.fit(target.data(), fitted.data());
            if (s.clamp_fitted) clamp_to_range(target.data(), fitted.data(), n);
            for (std::size_t p = 0; p < n; ++p) e[p * ne + k] = fitted[p];
            if (keep) sol.estimators[i].e.push_back(std::move(est));
        }
    }
};

bool needs_current_y(const SweepSetup& s, int i) {
    const std::size_t ne = s.gen->expectation_count();
    for (std::size_t k = 0; k < ne; ++k) {
        ExpectationUse u = s.gen->expectation_use(k);
        if (u.ydelta && s.dmap.shift_index[i] == i) return true;
        if (u.y_at_zeta && s.zmap.shift_index[i] == i) return true;
    }
    return false;
}

double damped_fixed_point(const Generator& g, double t, double a, double h, const double* z, const double* e, double tol,
                          int max_iter, int& iters) {
    double y = a, omega = 1.0, prev_res = INFINITY;
    for (int it = 1; it <= max_iter; ++it) {
        const double next = a + h * g.evaluate_scalar(t, y, z[0], e);
        const double res = std::fabs(next - y);
        if (!std::isfinite(next)) break;
        if (res > prev_res) omega *= 0.5;
        prev_res = res;
        y = (1.0 - omega) * y + omega * next;
        if (res <= tol * (1.0 + std::fabs(y))) {
            iters = it;
            return y;
        }
    }
    throw InnerDivergence("implicit step did not converge in " + std::to_string(max_iter) + " iterations at t = " +
                          std::to_string(t));
}

}  // namespace

void backward_sweep(const SweepSetup& s, DiscreteSolution& sol, const SweepOptions& opt) {
    const int i_hi = opt.i_hi < 0 ? s.grid.n_T : opt.i_hi;
    if (opt.i_lo < 0 || opt.i_lo > i_hi || i_hi > s.grid.n_T) throw InvalidArgument("sweep range out of bounds");
    if (opt.mode == UpdateMode::FrozenDriver && !opt.driver) throw InvalidArgument("frozen-driver sweep needs an iterate");
    const std::size_t n = sol.n_paths;
    const int m = sol.m, d = sol.d;
    const double h = s.grid.h;
    const std::size_t ne = s.gen->expectation_count();
    const bool scalar_only = opt.mode == UpdateMode::Implicit || opt.mode == UpdateMode::QuadraticImplicit;
    if (scalar_only && (m != 1 || d != 1)) throw InvalidArgument("implicit schemes need a scalar problem");

    std::vector<double> col(n), a(n * m), y_new(n * m);
    for (int i = i_hi - 1; i >= opt.i_lo; --i) {
        const double t = s.grid.time(i);
        const double* states = s.paths->state_row(i);
        SliceRegression base(states, n, d, s.num.basis);
        JointRegression joint(base, s.paths->increment_row(i), d, h);
        SliceEstimators& est = sol.estimators[i];
        est.y.clear();
        est.z.clear();
        double* z = sol.z_row(i);
        const double* y_next = sol.y_row(i + 1);
        std::vector<double> zc(n * d), ac(n);
        double rms = 0.0;
        for (int c = 0; c < m; ++c) {
            const double* target = y_next;
            if (m > 1) {
                for (std::size_t p = 0; p < n; ++p) col[p] = y_next[p * m + c];
                target = col.data();
            }
            JointFit fit = joint.fit(target, ac.data(), zc.data());
            if (s.clamp_fitted) clamp_to_range(target, ac.data(), n);
            rms = std::max(rms, fit.mean.diagnostics().residual_rms);
            est.y.push_back(std::move(fit.mean));
            for (auto& ez : fit.z) est.z.push_back(std::move(ez));
            for (std::size_t p = 0; p < n; ++p) {
                a[p * m + c] = ac[p];
                for (int k = 0; k < d; ++k) z[p * m * d + c * d + k] = zc[p * d + k];
            }
        }
        sol.residual_rms[i] = rms;

        SliceWork w{s, sol, opt, i, t, h, n, m, d, ne, base, std::vector<double>(n * std::max<std::size_t>(ne, 1)), {}, {}};
        double* y = sol.y_row(i);
        double* drift = sol.drift.data() + i * sol.y_stride();

        if (opt.mode == UpdateMode::FrozenDriver) {
            const DiscreteSolution& it = *opt.driver;
            w.expectations(opt.frozen ? *opt.frozen : it, true);
            const double* yn = it.y_row(i);
            const double* zn = it.z_row(i);
            parallel_chunks(n, [&](std::size_t, std::size_t b, std::size_t end) {
                for (std::size_t p = b; p < end; ++p) {
                    s.gen->evaluate(t, yn + p * m, zn + p * m * d, ne ? &w.e[p * ne] : nullptr, drift + p * m);
                    for (int c = 0; c < m; ++c) {
                        drift[p * m + c] *= h;
                        y[p * m + c] = a[p * m + c] + drift[p * m + c];
                    }
                }
            });
        } else {
            const bool live = opt.frozen == nullptr;
            const bool fixed_point = live && needs_current_y(s, i);
            // Seed the current slice so E-nodes that look at slice i see a sensible value.
            if (fixed_point) std::copy(a.begin(), a.end(), y);
            int inner_used = 0;
            for (int pass = 0;; ++pass) {
                w.expectations(live ? sol : *opt.frozen, true);
                std::vector<int> iters(chunk_count(n), 0);
                parallel_chunks(n, [&](std::size_t ch, std::size_t b, std::size_t end) {
                    int local = 0;
                    for (std::size_t p = b; p < end; ++p) {
                        const double* ep = ne ? &w.e[p * ne] : nullptr;
                        const double* zp = z + p * m * d;
                        switch (opt.mode) {
                            case UpdateMode::Explicit: {
                                s.gen->evaluate(t, a.data() + p * m, zp, ep, y_new.data() + p * m);
                                for (int c = 0; c < m; ++c) y_new[p * m + c] = a[p * m + c] + h * y_new[p * m + c];
                                break;
                            }
                            case UpdateMode::Implicit: {
                                int it = 0;
                                y_new[p] = damped_fixed_point(*s.gen, t, a[p], h, zp, ep, s.num.inner_tol,
                                                              s.num.inner_max_iter, it);
                                local = std::max(local, it);
                                break;
                            }
                            case UpdateMode::QuadraticImplicit: {
                                int it = 0;
                                y_new[p] = inner_quadratic_step(a[p], h, zp[0], ep, *s.gen, t, s.num.inner_tol,
                                                                s.num.inner_max_iter, &it);
                                local = std::max(local, it);
                                break;
                            }
                            case UpdateMode::FrozenDriver: break;
                        }
                    }
                    iters[ch] = local;
                });
                inner_used = std::max(inner_used, *std::max_element(iters.begin(), iters.end()));
                double change = 0.0, scale = 1.0;
                for (std::size_t q = 0; q < n * m; ++q) {
                    change = std::max(change, std::fabs(y_new[q] - y[q]));
                    scale = std::max(scale, std::fabs(y_new[q]));
                }
                std::copy(y_new.begin(), y_new.end(), y);
                if (!fixed_point || change <= s.num.inner_tol * scale) break;
                if (pass + 1 >= s.num.inner_max_iter)
                    throw InnerDivergence("slice fixed point for a zero delay did not converge at t = " + std::to_string(t));
            }
            sol.max_inner_iterations = std::max(sol.max_inner_iterations, inner_used);
            for (std::size_t q = 0; q < n * m; ++q) drift[q] = y[q] - a[q];
        }
        for (std::size_t q = 0; q < n * m; ++q)
            if (!std::isfinite(y[q])) throw DomainError("solution became non-finite at t = " + std::to_string(t));
    }
}

void finalize_solution(DiscreteSolution& sol, int i0) {
    const std::size_t n = sol.n_paths;
    const int n_T = sol.grid.n_T;
    const double* y0 = sol.y_row(i0);
    double mean = 0.0;
    for (std::size_t p = 0; p < n; ++p) mean += y0[p * sol.m];
    sol.Y0_mean = mean / static_cast<double>(n);
    // flow_p = Y_{n_T} + sum_i h f_i: an unbiased plain Monte Carlo estimate of Y_0 (first component)
    std::vector<double> flow(n);
    const double* yT = sol.y_row(n_T);
    for (std::size_t p = 0; p < n; ++p) flow[p] = yT[p * sol.m];
    for (int i = i0; i < n_T; ++i) {
        const double* dr = sol.drift.data() + i * sol.y_stride();
        for (std::size_t p = 0; p < n; ++p) flow[p] += dr[p * sol.m];
    }
    double fm = std::accumulate(flow.begin(), flow.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double f : flow) var += (f - fm) * (f - fm);
    var /= static_cast<double>(n - 1);
    sol.Y0_stderr = std::sqrt(var / static_cast<double>(n));
}

double iterate_distance(const DiscreteSolution& a, const DiscreteSolution& b, int i_lo, int i_hi) {
    double sup = 0.0, z2 = 0.0;
    const std::size_t ny = a.y_stride(), nz = a.z_stride();
    for (int i = i_lo; i < i_hi; ++i) {
        const double* ya = a.y_row(i);
        const double* yb = b.y_row(i);
        for (std::size_t q = 0; q < ny; ++q) sup = std::max(sup, std::fabs(ya[q] - yb[q]));
        const double* za = a.z_row(i);
        const double* zb = b.z_row(i);
        double s = 0.0;
        for (std::size_t q = 0; q < nz; ++q) s += (za[q] - zb[q]) * (za[q] - zb[q]);
        z2 += s / static_cast<double>(a.n_paths);
    }
    return sup + std::sqrt(a.grid.h * z2);
}

DiscreteSolution solve_anticipated_lipschitz(const ProblemSpec& problem, const NumericsSpec& numerics,
                                             const PathEnsemble* paths) {
    SweepSetup s = make_setup(problem, problem.full_generator(), problem.terminal_xi, problem.terminal_eta, numerics, paths);
    DiscreteSolution sol = init_solution(s);
    SweepOptions opt;
    opt.mode = numerics.scheme == Scheme::Explicit ? UpdateMode::Explicit : UpdateMode::Implicit;
    backward_sweep(s, sol, opt);
    finalize_solution(sol);
    return sol;
}

}  // namespace absde
