#include "absde/app.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "absde/errors.hpp"
#include "absde/sweep.hpp"

namespace absde {

using nlohmann::json;

namespace {

json num(long double v) {
    const double d = static_cast<double>(v);
    return std::isfinite(d) ? json(d) : json(nullptr);
}

std::string csv_num(double v) {
    if (!std::isfinite(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file '" + path + "'");
    out << text;
}

}  // namespace

json to_json(const Thm34Bundle& b) {
    return {{"M", num(b.M)}, {"beta_small", num(b.beta_small)}, {"rho2", num(b.rho2)}, {"R", num(b.R)},
            {"lhs", num(b.lhs)}, {"admissible", b.admissible}};
}

json to_json(const Thm44Bundle& b) {
    return {{"C_delta", num(b.C_delta)},
            {"log_C_delta", num(b.log_C_delta)},
            {"beta44", num(b.beta44)},
            {"mu1", num(b.mu1)},
            {"mu2", num(b.mu2)},
            {"mu", num(b.mu)},
            {"mu_tilde", num(b.mu_tilde)},
            {"Q", num(b.Q)},
            {"delta_aux", num(b.delta_aux)},
            {"kappa", num(b.kappa)},
            {"eps", num(b.eps)},
            {"Delta", num(b.Delta)},
            {"A", num(b.A)},
            {"identity_residual", num(b.identity_residual)},
            {"branch_horizon", num(b.branch_horizon)},
            {"branch_quadratic", num(b.branch_quadratic)},
            {"log_ball_exp_bound", num(b.log_ball_exp_bound)}};
}

json to_json(const Thm48Bundle& b) {
    json j = {{"C_tilde", b.C_tilde},
              {"lambda_bar", num(b.lambda_bar)},
              {"theta_lambda", num(b.theta_lambda)},
              {"theta_overflow", b.theta_overflow},
              {"alpha_at_T", num(b.alpha_bound(b.T))},
              {"alpha_at_T_plus_K", num(b.alpha_bound(b.T + b.K))}};
    if (!b.theta_note.empty()) j["theta_note"] = b.theta_note;
    return j;
}

json to_json(const Verdict& v) {
    json j = {{"verdict", to_string(v.kind)}, {"reason", v.reason}};
    if (!v.binding.empty()) {
        j["binding"] = v.binding;
        j["value"] = num(v.value);
    }
    return j;
}

json to_json(const ApplicabilityReport& r) {
    json j = {{"small_data_global", to_json(r.small_data_global)},
              {"bounded_local", to_json(r.bounded_local)},
              {"bounded_global", to_json(r.bounded_global)},
              {"unbounded_transform", to_json(r.unbounded_transform)},
              {"thm34", to_json(r.thm34)},
              {"notes", r.notes}};
    j["thm44"] = r.has_thm44 ? to_json(r.thm44) : json(nullptr);
    j["thm48"] = r.has_thm48 ? to_json(r.thm48) : json(nullptr);
    return j;
}

json to_json(const NormReport& r, bool per_slice) {
    json j = {{"y_sup", num(r.y_sup)}, {"z_z2", num(r.z_z2)}, {"bias_note", r.bias_note}};
    if (per_slice) j["per_slice_z2"] = r.per_slice_z2;
    return j;
}

json to_json(const MembershipReport& r) {
    json items = json::array();
    for (const auto& it : r.items)
        items.push_back({{"name", it.name}, {"value", num(it.value)}, {"bound", num(it.bound)}, {"holds", it.holds},
                         {"margin", num(it.bound - it.value)}});
    return {{"member", r.member}, {"items", items}};
}

json to_json(const ContractionReport& r) {
    json ratios = json::array();
    for (double q : r.ratios) ratios.push_back(num(q));
    return {{"ratios", ratios}, {"geometric", r.geometric}, {"fitted_rate", num(r.fitted_rate)}};
}

json to_json(const BarrierReport& r) {
    return {{"holds", r.holds}, {"worst_ratio", num(r.worst_ratio)}, {"worst_slice", r.worst_slice}};
}

json to_json(const GrowthReport& g) {
    json j = {{"z", to_string(g.z_growth)},
              {"y", to_string(g.y_growth)},
              {"anticipated", to_string(g.anticipated_growth)},
              {"bounded", g.bounded},
              {"z_free", g.z_free},
              {"anticipated_z_bounded", g.anticipated_z_bounded},
              {"suggested_strategy", to_string(g.suggested_strategy)}};
    if (g.anticipated_growth == AnticipatedGrowth::Power) j["anticipated_power"] = g.anticipated_power;
    return j;
}

// ---------------------------------------------------------------------------

Thm34Norms terminal_norms(const RunConfig& config) {
    NumericsSpec num = config.numerics;
    num.n_paths = std::min<std::size_t>(num.n_paths, 20000);
    if (num.antithetic && num.n_paths % 2) --num.n_paths;
    const ProblemSpec& p = config.problem;
    SweepSetup s = make_setup(p, p.full_generator(), p.terminal_xi, p.terminal_eta, num, nullptr);
    DiscreteSolution sol = init_solution(s);
    return estimate_terminal_norms(p, sol, num.basis);
}

SolveArtifacts run_solve(const RunConfig& config) {
    SolveArtifacts a;
    const auto t0 = std::chrono::steady_clock::now();
    const Thm34Norms tn = terminal_norms(config);
    a.applicability = applicability_report(config.problem, tn);
    const Strategy st = config.strategy == Strategy::Auto ? choose_strategy(config.problem, a.applicability) : config.strategy;
    const auto t1 = std::chrono::steady_clock::now();
    a.result = solve_with_strategy(st, config.problem, config.numerics, config.outer);
    const double solve_ms = elapsed_ms(t1);
    const DiscreteSolution& sol = a.result.solution;
    a.norms = z2_norm_estimate(sol, config.numerics.basis);

    json& s = a.summary;
    s["strategy"] = to_string(st);
    s["strategy_requested"] = to_string(config.strategy);
    s["Y0_mean"] = num(sol.Y0_mean);
    s["Y0_stderr"] = num(sol.Y0_stderr);
    if (config.closed_form_y0) s["Y0_closed_form"] = *config.closed_form_y0;
    s["outer_iterations"] = a.result.outer_iterations;
    json diffs = json::array();
    for (double d : a.result.outer_diffs) diffs.push_back(num(d));
    s["outer_diffs"] = diffs;
    s["certified"] = a.result.certified;
    s["norms"] = to_json(a.norms, false);
    s["terminal_norms"] = {{"xi_sup", num(tn.xi_sup)}, {"eta_z2", num(tn.eta_z2)}, {"f0_int", num(tn.f0_int)}};
    json verdicts;
    verdicts["small_data_global"] = to_json(a.applicability.small_data_global);
    verdicts["bounded_local"] = to_json(a.applicability.bounded_local);
    verdicts["bounded_global"] = to_json(a.applicability.bounded_global);
    verdicts["unbounded_transform"] = to_json(a.applicability.unbounded_transform);
    s["applicability"] = verdicts;
    s["seed"] = sol.seed;
    s["n_T"] = sol.grid.n_T;
    s["n_paths"] = sol.n_paths;
    s["max_inner_iterations"] = sol.max_inner_iterations;
    s["warnings"] = sol.warnings;
    s["timings"] = {{"solve_ms", solve_ms}, {"total_ms", elapsed_ms(t0)}};

    json& d = a.diagnostics;
    d["norms"] = to_json(a.norms, true);
    const QuadraticDiagnostics& qd = a.result.diagnostics;
    d["ball"] = qd.ball ? to_json(*qd.ball) : json(nullptr);
    d["barrier"] = qd.barrier ? to_json(*qd.barrier) : json(nullptr);
    d["contraction"] = qd.contraction ? to_json(*qd.contraction) : json(nullptr);
    d["thm34"] = qd.thm34 ? to_json(*qd.thm34) : json(nullptr);
    d["thm44"] = qd.thm44 ? to_json(*qd.thm44) : json(nullptr);
    d["thm48"] = qd.thm48 ? to_json(*qd.thm48) : json(nullptr);
    d["window_edges"] = qd.window_edges;
    d["notes"] = qd.notes;
    json rms = json::array();
    for (double r : sol.residual_rms) rms.push_back(num(r));
    d["residual_rms"] = rms;
    d["applicability_notes"] = a.applicability.notes;

    std::ostringstream csv;
    csv << "t,mean_Y,std_Y,mean_abs_Z,z2_tail\r\n";
    const std::size_t n = sol.n_paths;
    for (int i = 0; i <= sol.grid.n_T; ++i) {
        double my = 0.0, mz = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            my += sol.y(i, p);
            mz += std::fabs(sol.z(i, p));
        }
        my /= static_cast<double>(n);
        mz /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t p = 0; p < n; ++p) var += (sol.y(i, p) - my) * (sol.y(i, p) - my);
        var /= static_cast<double>(n > 1 ? n - 1 : 1);
        const double z2 = i < sol.grid.n_T ? a.norms.per_slice_z2[static_cast<std::size_t>(i)] : 0.0;
        csv << csv_num(sol.grid.time(i)) << ',' << csv_num(my) << ',' << csv_num(std::sqrt(var)) << ',' << csv_num(mz)
            << ',' << csv_num(z2) << "\r\n";
    }
    a.slices_csv = csv.str();
    return a;
}

void write_solve_outputs(const RunConfig& config, const SolveArtifacts& a, std::ostream& out) {
    const std::string summary = a.summary.dump(2) + "\n";
    if (config.outputs.summary.empty())
        out << summary;
    else
        write_file(config.outputs.summary, summary);
    if (!config.outputs.slices.empty()) write_file(config.outputs.slices, a.slices_csv);
    if (!config.outputs.diagnostics.empty()) write_file(config.outputs.diagnostics, a.diagnostics.dump(2) + "\n");
}

json run_check(const RunConfig& config) {
    const Thm34Norms tn = terminal_norms(config);
    const ApplicabilityReport rep = applicability_report(config.problem, tn);
    json j = to_json(rep);
    j["terminal_norms"] = {{"xi_sup", num(tn.xi_sup)}, {"eta_z2", num(tn.eta_z2)}, {"f0_int", num(tn.f0_int)}};
    j["growth"] = to_json(config.problem.full_generator()->growth());
    j["L"] = config.problem.L();
    j["suggested_strategy"] = to_string(choose_strategy(config.problem, rep));
    return j;
}

std::string run_convergence(const RunConfig& config, std::size_t jobs) {
    if (!config.study) throw ConfigError("convergence needs a 'study' block");
    const StudySpec& st = *config.study;
    const ProblemSpec& p = config.problem;
    Strategy strategy = config.strategy;
    if (strategy == Strategy::Auto) strategy = choose_strategy(p, applicability_report(p, terminal_norms(config)));

    const int finest = *std::max_element(st.grids.begin(), st.grids.end());
    const std::size_t max_paths = *std::max_element(st.paths.begin(), st.paths.end());
    const TimeGrid fine = build_time_grid(p.T, p.K, finest);
    const PathEnsemble base =
        simulate_brownian(fine, p.d, max_paths, config.numerics.seed, config.numerics.antithetic);
    std::map<int, PathEnsemble> coarse;
    for (int g : st.grids)
        if (!coarse.count(g)) coarse.emplace(g, g == finest ? base : base.coarsen(finest / g));

    struct Cell {
        int n_T;
        std::size_t n_paths;
        double y0 = 0.0, se = 0.0, ms = 0.0;
    };
    std::vector<Cell> cells;
    for (int g : st.grids)
        for (std::size_t n : st.paths) cells.push_back({g, n});

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= cells.size()) return;
            Cell& c = cells[k];
            try {
                const PathEnsemble& full = coarse.at(c.n_T);
                const PathEnsemble sub = c.n_paths == full.n_paths ? full : full.prefix(c.n_paths);
                NumericsSpec num = config.numerics;
                num.n_T = c.n_T;
                const auto t0 = std::chrono::steady_clock::now();
                QuadraticSolveResult r = solve_with_strategy(strategy, p, num, config.outer, &sub);
                c.ms = elapsed_ms(t0);
                c.y0 = r.solution.Y0_mean;
                c.se = r.solution.Y0_stderr;
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t n_jobs = std::max<std::size_t>(1, std::min(jobs, cells.size()));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < n_jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::optional<double> ref = st.reference;
    if (!ref && !st.self_reference) ref = config.closed_form_y0;
    if (!ref) {
        for (const Cell& c : cells)
            if (c.n_T == finest && c.n_paths == max_paths) ref = c.y0;
    }
    std::ostringstream csv;
    csv << "n_T,n_paths,Y0,Y0_stderr,abs_error,runtime_ms\r\n";
    for (const Cell& c : cells)
        csv << c.n_T << ',' << c.n_paths << ',' << csv_num(c.y0) << ',' << csv_num(c.se) << ','
            << csv_num(std::fabs(c.y0 - *ref)) << ',' << csv_num(c.ms) << "\r\n";
    return csv.str();
}

}  // namespace absde
