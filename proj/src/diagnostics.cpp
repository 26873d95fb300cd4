#include "absde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absde/errors.hpp"
#include "absde/parallel.hpp"

namespace absde {

namespace {

constexpr const char* kBiasNote =
    "stopping-time supremum approximated by grid times and esssup by the sample max; both bias the estimate downward";

}  // namespace

NormReport z2_norm_estimate(const DiscreteSolution& sol, const BasisSpec& basis, int i_from, int i_to) {
    if (!sol.paths) throw InvalidArgument("solution carries no path ensemble");
    if (i_to < 0) i_to = sol.grid.n_T;
    if (i_from < 0 || i_from > i_to || i_to > sol.grid.n_total) throw InvalidArgument("slice range out of bounds");
    NormReport r;
    r.bias_note = kBiasNote;
    const std::size_t n = sol.n_paths;
    const int d = sol.d;
    const std::size_t nz = static_cast<std::size_t>(sol.m * d);
    const double h = sol.grid.h;
    r.per_slice_z2.assign(static_cast<std::size_t>(i_to - i_from), 0.0);
    std::vector<double> tail(n, 0.0), fitted(n);
    for (int i = i_to - 1; i >= i_from; --i) {
        const double* z = sol.z_row(i);
        for (std::size_t p = 0; p < n; ++p) {
            double s = 0.0;
            for (std::size_t q = 0; q < nz; ++q) s += z[p * nz + q] * z[p * nz + q];
            tail[p] += s * h;
        }
        SliceRegression reg(sol.paths->state_row(i), n, d, basis);
        reg.fit(tail.data(), fitted.data());
        double mx = 0.0;
        for (double v : fitted) mx = std::max(mx, v);
        r.per_slice_z2[static_cast<std::size_t>(i - i_from)] = mx;
        r.z_z2 = std::max(r.z_z2, mx);
    }
    for (int i = i_from; i <= std::min(i_to, sol.grid.n_total); ++i) {
        const double* y = sol.y_row(i);
        for (std::size_t q = 0; q < sol.y_stride(); ++q) r.y_sup = std::max(r.y_sup, std::fabs(y[q]));
    }
    return r;
}

double f0_integral(const Generator& gen, const TimeGrid& grid) {
    const int m = gen.m(), d = gen.d();
    std::vector<double> y(static_cast<std::size_t>(m), 0.0), z(static_cast<std::size_t>(m * d), 0.0), out(m);
    std::vector<double> e(gen.expectation_count() + 1, 0.0);
    Anticipated a;
    a.ydelta = y.data();
    a.y_at_zeta = y.data();
    a.zzeta = z.data();
    double s = 0.0;
    for (int i = 0; i < grid.n_T; ++i) {
        const double t = grid.time(i);
        a.t_delta = a.t_zeta = t;
        for (std::size_t k = 0; k < gen.expectation_count(); ++k) e[k] = gen.expectation_integrand(k, t, a);
        gen.evaluate(t, y.data(), z.data(), e.data(), out.data());
        double nrm = 0.0;
        for (double v : out) nrm += v * v;
        s += grid.h * std::sqrt(nrm);
    }
    return s;
}

Thm34Norms estimate_terminal_norms(const ProblemSpec& problem, const DiscreteSolution& sol, const BasisSpec& basis) {
    Thm34Norms n;
    const int n_T = sol.grid.n_T, n_total = sol.grid.n_total;
    if (auto c = problem.terminal_xi->constant_value()) {
        n.xi_sup = std::fabs(*c);
    } else {
        for (int i = n_T; i <= n_total; ++i) {
            const double* y = sol.y_row(i);
            for (std::size_t q = 0; q < sol.y_stride(); ++q) n.xi_sup = std::max(n.xi_sup, std::fabs(y[q]));
        }
    }
    if (n_total > n_T) {
        if (auto c = problem.terminal_eta->constant_value()) {
            n.eta_z2 = std::fabs(*c) * std::sqrt(static_cast<double>(problem.m * problem.d) * problem.K);
        } else {
            n.eta_z2 = std::sqrt(z2_norm_estimate(sol, basis, n_T, n_total).z_z2);
        }
    }
    n.f0_int = f0_integral(*problem.full_generator(), sol.grid);
    return n;
}

AprioriReport apriori_bound_check(const DiscreteSolution& sol, const std::vector<double>& g_bound, double gamma,
                                  double beta_lin) {
    const int n_T = sol.grid.n_T;
    if (g_bound.size() != 1 && g_bound.size() < static_cast<std::size_t>(n_T))
        throw InvalidArgument("g_bound needs one value per slice or a single value");
    const double h = sol.grid.h, T = sol.grid.T;
    double integral = 0.0;
    for (int i = 0; i < n_T; ++i) {
        const double g = g_bound.size() == 1 ? g_bound[0] : g_bound.at(static_cast<std::size_t>(i));
        integral += std::fabs(g) * std::exp(beta_lin * sol.grid.time(i)) * h;
    }
    const std::size_t n = sol.n_paths;
    const double* xi = sol.y_row(n_T);
    const double scale = gamma * std::exp(beta_lin * T);
    std::vector<double> v(n);
    for (std::size_t p = 0; p < n; ++p) v[p] = std::exp(scale * std::fabs(xi[p * sol.m]) + gamma * integral);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n - 1);
    AprioriReport r;
    r.lhs = std::exp(gamma * std::fabs(sol.Y0_mean));
    r.rhs = mean;
    r.rhs_rel_stderr = std::sqrt(var / static_cast<double>(n)) / mean;
    r.margin = r.rhs - r.lhs;
    r.holds = r.lhs <= r.rhs * (1.0 + 3.0 * r.rhs_rel_stderr);
    return r;
}

MembershipReport ball_membership(const DiscreteSolution& sol, const Thm34Bundle& b, const BasisSpec& basis,
                                 double slack) {
    NormReport nr = z2_norm_estimate(sol, basis, 0, sol.grid.n_total);
    MembershipItem it;
    it.name = "y_sup^2 + z_z2 <= rho2";
    it.value = nr.y_sup * nr.y_sup + nr.z_z2;
    it.bound = static_cast<double>(b.rho2) * (1.0 + slack);
    it.holds = it.value <= it.bound;
    return {it.holds, {it}};
}

MembershipReport ball_membership(const DiscreteSolution& sol, const Thm44Bundle& b, const Thm44Params& p, int i_lo,
                                 const BasisSpec& basis, double slack) {
    NormReport nr = z2_norm_estimate(sol, basis, i_lo, sol.grid.n_T);
    const double om = 1.0 - p.alpha_holder;
    const double log_bound = static_cast<double>(b.log_ball_exp_bound) + std::log1p(slack);
    MembershipReport r;
    MembershipItem e2{"exp(2 gamma / (1 - alpha) ||U||) <= bound (log form)", 2.0 * p.gamma / om * nr.y_sup, log_bound, false};
    e2.holds = e2.value <= e2.bound;
    MembershipItem e3{"exp(3 gamma / (1 - alpha) ||U||) <= bound (log form)", 3.0 * p.gamma / om * nr.y_sup, log_bound, false};
    e3.holds = e3.value <= e3.bound;
    MembershipItem z{"||V||^2 <= A", nr.z_z2, static_cast<double>(b.A) * (1.0 + slack), false};
    z.holds = z.value <= z.bound;
    r.items = {e2, e3, z};
    // membership follows the set's own exponent; the other one is recorded only
    r.member = e2.holds && z.holds;
    return r;
}

ContractionReport contraction_report(const std::vector<double>& diffs) {
    if (diffs.size() < 3) throw InvalidArgument("contraction_report needs at least 3 differences");
    ContractionReport r;
    double log_sum = 0.0;
    int cnt = 0;
    bool zero_hit = false;
    for (std::size_t n = 0; n + 1 < diffs.size(); ++n) {
        if (diffs[n] <= 0.0) break;
        const double q = diffs[n + 1] / diffs[n];
        r.ratios.push_back(q);
        if (q > 0.0) {
            log_sum += std::log(q);
            ++cnt;
        } else {
            zero_hit = true;
        }
    }
    r.geometric = !r.ratios.empty();
    for (std::size_t n = 1; n < r.ratios.size(); ++n)
        if (!(r.ratios[n] < 1.0)) r.geometric = false;
    r.fitted_rate = zero_hit && cnt == 0 ? 0.0 : (cnt ? std::exp(log_sum / cnt) : 0.0);
    return r;
}

BarrierReport barrier_check(const DiscreteSolution& sol, const Thm48Bundle& b, double slack) {
    BarrierReport r;
    for (int i = 0; i <= sol.grid.n_total; ++i) {
        const double* y = sol.y_row(i);
        double mx = 0.0;
        for (std::size_t q = 0; q < sol.y_stride(); ++q) mx = std::max(mx, y[q] * y[q]);
        const double a = static_cast<double>(b.alpha_bound(sol.grid.time(i)));
        const double ratio = mx / a;
        if (ratio > r.worst_ratio) {
            r.worst_ratio = ratio;
            r.worst_slice = i;
        }
        if (mx > a * (1.0 + slack)) r.holds = false;
    }
    return r;
}

}  // namespace absde
