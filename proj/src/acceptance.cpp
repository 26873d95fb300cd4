#include "absde/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <json.hpp>

#include "absde/config.hpp"
#include "absde/errors.hpp"
#include "absde/transform.hpp"

#ifndef ABSDE_FIXTURES_DIR
#define ABSDE_FIXTURES_DIR "fixtures"
#endif

namespace absde {

using nlohmann::json;

namespace {

// Tolerances, pinned.
constexpr double kRhoIdentityRel = 1e-15;
constexpr double kWindowIdentityRel = 1e-9;
constexpr double kAlphaAbs = 1e-8;
constexpr double kMartingaleZAbs = 0.05;
constexpr double kMartingaleSigmas = 3.0;
constexpr double kClosedFormRel = 0.01;
constexpr double kRefinementFloor = 1e-12;  // errors below this count as equal
constexpr double kBallSlackC6 = 0.1;
constexpr double kBarrierSlack = 0.1;
constexpr double kPhiOracleTol = 1e-12;
constexpr double kPhiQuadTol = 1e-10;
constexpr double kRoundTripAbs = 1e-9;
constexpr double kOdeResidual = 1e-6;
constexpr double kStrategyAgreementRel = 0.02;
// Two independent ensembles per strategy; half size keeps the ten solves inside a minute.
constexpr std::size_t kUniquenessPaths = 50000;
constexpr double kUniquenessSigmas = 6.0;
constexpr double kParserAbs = 1e-12;
constexpr std::size_t kPaths = 100000;

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            if (!ok) detail << "; ";
            ok = false;
            detail << "FAILED " << what;
        }
    }
    void note(const std::string& s) {
        if (ok) {
            if (detail.tellp() > 0) detail << "; ";
            detail << s;
        }
    }
};

std::string g(double v, int prec = 6) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

NumericsSpec numerics(std::uint64_t seed, int n_T = 64, std::size_t n_paths = kPaths) {
    NumericsSpec n;
    n.n_T = n_T;
    n.n_paths = n_paths;
    n.seed = seed;
    n.basis.degree = 3;
    return n;
}

TerminalPtr term(const std::string& src) { return ExprTerminal::from_source(src); }

std::string exact(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------

void constants_exactness(const json& fx, std::uint64_t seed, Check& c) {
    const json& f = fx.at("constants");
    const Thm34Bundle b = thm34_constants(f.at("C"), f.at("L"), f.at("T"), f.at("K"), {});
    const long double M = f.at("M").get<double>(), rho2 = f.at("rho2").get<double>();
    c.expect(b.M == M, "M = " + g(double(b.M), 17) + " vs fixture " + g(double(M), 17));
    c.expect(b.rho2 == rho2, "rho2 = " + g(double(b.rho2), 17) + " vs fixture " + g(double(rho2), 17));
    c.expect(b.rho2 == 1.0L / 32768.0L, "rho2 is not 1/32768 exactly");
    c.expect(std::fabs(double(b.beta_small) - f.at("beta_small").get<double>()) <= 1e-12 * 45.0,
             "beta_small = " + g(double(b.beta_small), 17));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uc(0.05, 10.0), ul(0.5, 5.0), ut(0.05, 5.0), uk(0.0, 3.0);
    long double worst = 0;
    for (int k = 0; k < 100; ++k) {
        const Thm34Bundle r = thm34_constants(uc(rng), ul(rng), ut(rng), uk(rng), {});
        worst = std::max(worst, std::fabs(r.rho2 * 16.0L * r.M - 1.0L));
    }
    c.expect(worst <= kRhoIdentityRel, "rho2*16*M - 1 reaches " + g(double(worst)));
    c.note("M = " + g(double(b.M)) + ", rho2 = " + g(double(b.rho2), 12) + ", worst identity error " + g(double(worst)));
}

void window_constants(const json&, std::uint64_t seed, Check& c) {
    std::mt19937_64 rng(seed + 2);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int found = 0, tried = 0;
    long double worst_res = 0, min_delta = INFINITY;
    while (found < 20 && tried < 5000) {
        ++tried;
        Thm44Params p;
        p.C = 0.1 + 0.9 * U(rng);
        p.gamma = 0.2 + 0.8 * U(rng);
        p.alpha_holder = 0.9 * U(rng);
        p.L = 1.0 + U(rng);
        p.T = 0.1 + 0.9 * U(rng);
        p.K = U(rng);
        const Thm44Norms n{0.2 * U(rng), 0.2 * U(rng)};
        Thm44Bundle b;
        try {
            b = thm44_constants(p, n);
        } catch (const OverflowRegime&) {
            continue;
        } catch (const NoAdmissibleEps&) {
            continue;
        }
        ++found;
        worst_res = std::max(worst_res, b.identity_residual);
        min_delta = std::min(min_delta, b.Delta);
        c.expect(b.Delta >= 0, "Delta < 0 at draw " + std::to_string(tried));
        c.expect(b.delta_aux * b.A < 1, "delta A >= 1 at draw " + std::to_string(tried));
        c.expect(b.A <= 3.0L / (4.0L * b.delta_aux) * (1 + 1e-15L), "A > 3/(4 delta) at draw " + std::to_string(tried));
    }
    c.expect(found == 20, "only " + std::to_string(found) + " admissible parameter sets in " + std::to_string(tried) + " draws");
    c.expect(worst_res <= kWindowIdentityRel, "identity residual " + g(double(worst_res)));
    c.note(std::to_string(found) + " sets from " + std::to_string(tried) + " draws, worst residual " + g(double(worst_res)) +
           ", min Delta " + g(double(min_delta)));
}

void alpha_oracle(const json& fx, std::uint64_t seed, Check& c) {
    const json& f = fx.at("alpha");
    const double ct = f.at("C_tilde"), L = f.at("L"), T = f.at("T"), K = f.at("K");
    const Thm48Bundle b = thm48_alpha(ct, L, T, K);
    c.expect(b.alpha_bound(T + K) == static_cast<long double>(ct), "alpha(T+K) != C_tilde");
    c.expect(std::fabs(double(b.lambda_bar) - f.at("alpha0").get<double>()) <= kAlphaAbs,
             "alpha(0) = " + g(double(b.lambda_bar), 17) + " vs fixture " + g(f.at("alpha0").get<double>(), 17));
    long double worst = 0;
    std::mt19937_64 rng(seed + 3);
    struct P { double ct, L, T, K; };
    for (P p : {P{ct, L, T, K}, P{2.0, 1.5, 0.5, 0.25}}) {
        const Thm48Bundle bb = thm48_alpha(p.ct, p.L, p.T, p.K);
        c.expect(bb.alpha_bound(p.T + p.K) == static_cast<long double>(p.ct), "alpha(T+K) != C_tilde");
        std::uniform_real_distribution<double> ut(0.0, p.T + p.K);
        for (int k = 0; k < 100; ++k) {
            const double t = k == 0 ? 0.0 : ut(rng);
            worst = std::max(worst, std::fabs(bb.alpha_bound(t) - alpha_bound_volterra(p.ct, p.L, p.T, p.K, t)));
        }
    }
    c.expect(worst <= kAlphaAbs, "closed form vs Volterra deviation " + g(double(worst)));
    c.note("alpha(0) = " + g(double(b.lambda_bar), 12) + ", max deviation " + g(double(worst)));
}

void martingale_problem(const json&, std::uint64_t seed, Check& c) {
    ProblemSpec p;
    p.generator = make_builtin_generator("zero");
    p.terminal_xi = term("w");
    p.terminal_eta = term("1");
    const DiscreteSolution s = solve_anticipated_lipschitz(p, numerics(seed));
    double worst = 0;
    for (int i = 0; i < s.grid.n_T; ++i)
        for (std::size_t q = 0; q < s.n_paths; ++q) worst = std::max(worst, std::fabs(s.z(i, q) - 1.0));
    c.expect(std::fabs(s.Y0_mean) <= kMartingaleSigmas * s.Y0_stderr,
             "|Y0| = " + g(s.Y0_mean) + " > 3 stderr = " + g(kMartingaleSigmas * s.Y0_stderr));
    c.expect(worst <= kMartingaleZAbs, "max |Z - 1| = " + g(worst));
    c.note("Y0 = " + g(s.Y0_mean) + " (stderr " + g(s.Y0_stderr) + "), max |Z - 1| = " + g(worst));
}

void anticipated_closed_form(const json& fx, std::uint64_t seed, Check& c) {
    const json& f = fx.at("anticipated");
    const double xi = f.at("xi"), T = f.at("T"), ref = f.at("Y0");
    ProblemSpec p;
    p.T = T;
    p.K = T;
    p.delta_shift = DelaySpec::constant(T);
    p.zeta_shift = DelaySpec::constant(T);
    p.generator = make_builtin_generator("anticipated_mean");
    p.terminal_xi = term(exact(xi));
    p.terminal_eta = term("0");
    c.expect(std::fabs(ref - xi * (1.0 + T)) <= 1e-15, "fixture Y0 disagrees with xi (1 + T)");
    std::vector<double> errs;
    std::string row;
    for (int n : {8, 16, 32, 64}) {
        const DiscreteSolution s = solve_anticipated_lipschitz(p, numerics(seed, n));
        errs.push_back(std::fabs(s.Y0_mean - ref));
        c.expect(errs.back() <= kClosedFormRel * std::fabs(ref), "n_T = " + std::to_string(n) + ": Y0 = " + g(s.Y0_mean, 12));
        row += (row.empty() ? "" : ", ") + std::to_string(n) + ":" + g(errs.back(), 3);
    }
    for (std::size_t k = 1; k < errs.size(); ++k)
        c.expect(errs[k] <= errs[k - 1] + kRefinementFloor, "error increases on refinement: " + row);
    c.note("abs errors by n_T " + row);
}

void small_data_global(const json&, std::uint64_t seed, Check& c) {
    ProblemSpec p;
    p.generator = make_builtin_generator("example_3_3");
    p.constants.C = 1.0;
    p.constants.L = 1.0;
    const Thm34Bundle b0 = thm34_constants(1.0, 1.0, p.T, p.K, {});
    const double rho = std::sqrt(static_cast<double>(b0.rho2));
    p.terminal_xi = term(exact(rho / 2));
    p.terminal_eta = term("0");
    OuterSpec o;
    o.tol = 1e-12;
    const QuadraticSolveResult r = solve_picard_small(p, numerics(seed), o);
    c.expect(r.certified, "small-data condition not certified");
    c.expect(r.diagnostics.contraction.has_value(), "fewer than 3 outer differences");
    if (r.diagnostics.contraction) {
        c.expect(r.diagnostics.contraction->geometric, "outer differences are not geometric");
        c.note("rate " + g(r.diagnostics.contraction->fitted_rate, 3));
    }
    const MembershipReport m = ball_membership(r.solution, *r.diagnostics.thm34, r.solution.numerics.basis, kBallSlackC6);
    c.expect(m.member, "ball membership fails: " + g(m.items[0].value) + " > " + g(m.items[0].bound));
    std::string diffs;
    for (double d : r.outer_diffs) diffs += (diffs.empty() ? "" : " ") + g(d, 3);
    c.note("rho = " + g(rho) + ", " + std::to_string(r.outer_iterations) + " outer iterations, diffs " + diffs +
           ", ||Y||^2 + ||Z||^2 = " + g(m.items[0].value, 3) + " vs " + g(m.items[0].bound, 3));
}

ProblemSpec example_4_7_problem(const std::string& xi) {
    ProblemSpec p;
    p.T = 1.0;
    p.K = 0.5;
    p.delta_shift = DelaySpec::constant(0.5);
    p.zeta_shift = DelaySpec::constant(0.5);
    p.generator = make_builtin_generator("example_4_7");
    p.terminal_xi = term(xi);
    p.terminal_eta = term("0");
    p.constants.C = 2.0;
    return p;
}

void bounded_global_barrier(const json&, std::uint64_t seed, Check& c) {
    const ProblemSpec p = example_4_7_problem("0.5");
    OuterSpec o;
    o.barrier_slack = kBarrierSlack;
    QuadraticSolveResult r;
    try {
        r = solve_global_stitch(p, numerics(seed), o);
    } catch (const BarrierViolation& e) {
        c.expect(false, std::string("barrier violated: ") + e.what());
        return;
    }
    const BarrierReport& br = *r.diagnostics.barrier;
    c.expect(br.holds && br.worst_ratio <= 1.0 + kBarrierSlack, "max |Y|^2 / alpha = " + g(br.worst_ratio));
    const std::size_t windows = r.diagnostics.window_edges.size() - 1;
    const long double th = r.diagnostics.thm48->theta_lambda;
    if (th > 0) c.expect(windows <= std::ceil(double(p.T / th)), "more windows than ceil(T / theta)");
    c.note("Y0 = " + g(r.solution.Y0_mean) + ", " + std::to_string(windows) + " windows, worst |Y|^2/alpha = " +
           g(br.worst_ratio, 4) + " at slice " + std::to_string(br.worst_slice) +
           (th > 0 ? "" : ", theta below one step (one-step windows)"));
}

void transform_correctness(const json& fx, std::uint64_t seed, Check& c) {
    // lambda = 0: bit for bit the Lipschitz solve
    {
        ProblemSpec p;
        p.K = 0.5;
        p.delta_shift = DelaySpec::constant(0.5);
        p.zeta_shift = DelaySpec::constant(0.5);
        p.generator = ExprGenerator::from_source("0.5*sin(y) + E[ydelta]");
        p.terminal_xi = term("sin(w)");
        p.terminal_eta = term("cos(w)");
        p.lambda_term = std::make_shared<ConstantLambda>(0.0);
        const NumericsSpec n = numerics(seed);
        const QuadraticSolveResult a = solve_transform(p, n);
        const DiscreteSolution b = solve_anticipated_lipschitz(p, n);
        const bool same = a.solution.Y.size() == b.Y.size() && a.solution.Z.size() == b.Z.size() &&
                          std::memcmp(a.solution.Y.data(), b.Y.data(), b.Y.size() * sizeof(double)) == 0 &&
                          std::memcmp(a.solution.Z.data(), b.Z.data(), b.Z.size() * sizeof(double)) == 0 &&
                          a.solution.Y0_mean == b.Y0_mean;
        c.expect(same, "lambda = 0 transform differs from the Lipschitz solve");
    }
    // phi(1, 1) for lambda = exp(-y^2) t against an erf-based tanh-sinh oracle
    const json& f = fx.at("phi");
    const double t1 = f.at("t"), y1 = f.at("y");
    auto phi = build_phi_transform(make_builtin_lambda("example_5_5"), kPhiQuadTol);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double sp = std::sqrt(M_PI);
    const double oracle = ts.integrate([&](double s) { return std::exp(t1 * sp * boost::math::erf(s)); }, 0.0, y1, kPhiOracleTol);
    const double val = phi->phi(t1, y1);
    c.expect(std::fabs(val - oracle) <= 10 * kPhiQuadTol, "phi(1,1) = " + g(val, 15) + " vs oracle " + g(oracle, 15));
    c.expect(std::fabs(oracle - f.at("reference").get<double>()) <= 10 * kPhiQuadTol,
             "oracle " + g(oracle, 15) + " vs fixture " + g(f.at("reference").get<double>(), 15));
    // round trip on the exact evaluators
    std::mt19937_64 rng(seed + 8);
    std::uniform_real_distribution<double> ut(0.0, 1.0), uy(-5.0, 5.0);
    double worst_rt = 0;
    for (int k = 0; k < 10000; ++k) {
        const double t = ut(rng), y = uy(rng);
        worst_rt = std::max(worst_rt, std::fabs(phi->phi_inv(t, phi->phi(t, y)) - y));
    }
    c.expect(worst_rt <= kRoundTripAbs, "round trip error " + g(worst_rt));
    // phi_yy - 2 lambda phi_y = 0 with phi_yy by central differences of phi_y
    double worst_ode = 0;
    std::uniform_real_distribution<double> uy3(-3.0, 3.0);
    const double dh = 1e-4;
    for (int k = 0; k < 200; ++k) {
        const double t = ut(rng), y = uy3(rng);
        const double pyy = (phi->phi_y(t, y + dh) - phi->phi_y(t, y - dh)) / (2 * dh);
        worst_ode = std::max(worst_ode, std::fabs(pyy - 2.0 * phi->lambda().value(t, y) * phi->phi_y(t, y)));
    }
    c.expect(worst_ode <= kOdeResidual, "ODE residual " + g(worst_ode));
    c.note("phi(1,1) = " + g(val, 13) + " (oracle diff " + g(std::fabs(val - oracle), 2) + "), round trip " + g(worst_rt, 2) +
           ", ODE residual " + g(worst_ode, 2));
}

ProblemSpec cross_problem() {
    ProblemSpec p;
    p.T = 1.0;
    p.K = 0.5;
    p.delta_shift = DelaySpec::constant(0.5);
    p.zeta_shift = DelaySpec::constant(0.5);
    p.generator = ExprGenerator::from_source("1 + 0.5*abs(sin(y)) + 0.5*E[abs(cos(ydelta))]");
    p.lambda_term = std::make_shared<ConstantLambda>(0.5);
    p.terminal_xi = term("sin(w)");
    p.terminal_eta = term("cos(w)");
    return p;
}

void cross_strategy(const json&, std::uint64_t seed, Check& c) {
    const ProblemSpec p = cross_problem();
    const NumericsSpec n = numerics(seed);
    const PathEnsemble paths = simulate_brownian(build_time_grid(p.T, p.K, n.n_T), 1, n.n_paths, seed, false);
    const QuadraticSolveResult a = solve_global_stitch(p, n, {}, &paths);
    const QuadraticSolveResult b = solve_transform(p, n, {}, &paths);
    const double y1 = a.solution.Y0_mean, y2 = b.solution.Y0_mean;
    const double rel = std::fabs(y1 - y2) / std::max(1.0, std::fabs(y2));
    c.expect(rel <= kStrategyAgreementRel, "relative Y0 gap " + g(rel));
    c.note("global stitch " + g(y1) + ", transform " + g(y2) + ", gap " + g(100 * rel, 3) + "%");
}

void apriori_bound(const json&, std::uint64_t seed, Check& c) {
    ProblemSpec p;
    p.terminal_xi = term("sin(w)");
    p.terminal_eta = term("0");
    p.generator = make_builtin_generator("zero");
    const DiscreteSolution s0 = solve_anticipated_lipschitz(p, numerics(seed));
    const AprioriReport r0 = apriori_bound_check(s0, {0.0}, 2.0, 0.0);
    c.expect(r0.holds && r0.margin > 0, "f = 0: lhs " + g(r0.lhs) + " rhs " + g(r0.rhs));

    // f = 1 + z^2 as 1 + lambda z^2 with lambda = 1: the transform removes the quadratic term
    // exactly, so no pathwise barrier is involved in producing Y
    p.generator = make_builtin_generator("constant", {{"c", 1.0}});
    p.lambda_term = std::make_shared<ConstantLambda>(1.0);
    const QuadraticSolveResult q = solve_transform(p, numerics(seed));
    const AprioriReport r1 = apriori_bound_check(q.solution, {1.0}, 2.0, 0.0);
    c.expect(r1.holds && r1.margin > 0, "f = 1 + z^2: lhs " + g(r1.lhs) + " rhs " + g(r1.rhs));

    DiscreteSolution tampered = q.solution;
    tampered.Y0_mean *= 10.0;
    const AprioriReport r2 = apriori_bound_check(tampered, {1.0}, 2.0, 0.0);
    c.expect(!r2.holds, "inflated Y0 not detected");
    c.note("margins " + g(r0.margin, 4) + " (f = 0), " + g(r1.margin, 4) + " (f = 1 + z^2); tamper lhs " + g(r2.lhs, 3) +
           " > rhs " + g(r2.rhs, 3));
}

void uniqueness(const json&, std::uint64_t seed, Check& c) {
    struct Case {
        Strategy st;
        ProblemSpec p;
        OuterSpec o;
    };
    std::vector<Case> cases;
    {
        ProblemSpec p;
        p.K = 0.5;
        p.delta_shift = DelaySpec::constant(0.5);
        p.zeta_shift = DelaySpec::constant(0.5);
        p.generator = ExprGenerator::from_source("0.5*sin(y) + E[ydelta]");
        p.terminal_xi = term("sin(w)");
        p.terminal_eta = term("cos(w)");
        cases.push_back({Strategy::Lipschitz, p, {}});
    }
    {
        ProblemSpec p;
        p.generator = make_builtin_generator("example_3_3");
        p.constants.L = 1.0;
        p.terminal_xi = term("0.002*sin(w)");
        p.terminal_eta = term("0");
        OuterSpec o;
        o.tol = 1e-10;
        cases.push_back({Strategy::PicardSmall, p, o});
    }
    {
        ProblemSpec p;
        p.K = 0.5;
        p.delta_shift = DelaySpec::constant(0.5);
        p.zeta_shift = DelaySpec::constant(0.5);
        p.generator = make_builtin_generator("example_4_3", {{"alpha", 0.5}});
        p.constants.alpha_holder = 0.5;
        p.terminal_xi = term("0.1*cos(w)");
        p.terminal_eta = term("0");
        OuterSpec o;
        o.t_lo = 0.75;
        cases.push_back({Strategy::LocalContraction, p, o});
    }
    cases.push_back({Strategy::GlobalStitch, example_4_7_problem("0.5*sin(w)"), {}});
    {
        ProblemSpec p;
        p.K = 0.5;
        p.delta_shift = DelaySpec::constant(0.5);
        p.zeta_shift = DelaySpec::constant(0.5);
        p.generator = make_builtin_generator("example_5_5");
        p.lambda_term = make_builtin_lambda("example_5_5");
        p.terminal_xi = term("w");
        p.terminal_eta = term("1");
        cases.push_back({Strategy::Transform, p, {}});
    }
    for (const Case& k : cases) {
        const QuadraticSolveResult a = solve_with_strategy(k.st, k.p, numerics(seed, 64, kUniquenessPaths), k.o);
        const QuadraticSolveResult b = solve_with_strategy(k.st, k.p, numerics(seed + 7919, 64, kUniquenessPaths), k.o);
        const double se = std::hypot(a.solution.Y0_stderr, b.solution.Y0_stderr);
        const double gap = std::fabs(a.solution.Y0_mean - b.solution.Y0_mean);
        c.expect(gap <= kUniquenessSigmas * se, to_string(k.st) + ": gap " + g(gap) + " > 6 se = " + g(kUniquenessSigmas * se));
        c.note(to_string(k.st) + " " + g(a.solution.Y0_mean, 5) + "/" + g(b.solution.Y0_mean, 5) + " (" + g(gap / se, 2) + " se)");
    }
}

void parser(const json& fx, std::uint64_t seed, Check& c) {
    const json& f = fx.at("parser");
    struct Hand {
        std::string key;
        double (*inner)(double, double);
        double (*outer)(double, double, double);
    };
    const Hand hands[] = {
        {"example_3_3", [](double yd, double zz) { return yd * yd + zz * zz; },
         [](double y, double z, double e) { return y * y + z * z + e; }},
        {"example_4_3", [](double yd, double zz) { return std::fabs(yd) + std::pow(std::fabs(zz), 1.5); },
         [](double y, double z, double e) { return 1.0 + std::fabs(y) + z * z + e; }},
    };
    std::mt19937_64 rng(seed + 12);
    std::uniform_real_distribution<double> U(-3.0, 3.0), ut(0.0, 1.0);
    double worst = 0;
    for (const Hand& h : hands) {
        const std::string src = f.at(h.key).get<std::string>();
        GeneratorPtr gen;
        try {
            gen = ExprGenerator::from_source(src);
        } catch (const Error& e) {
            c.expect(false, h.key + " does not parse: " + e.what());
            continue;
        }
        c.expect(gen->expectation_count() == 1, h.key + " should have one E[...] node");
        if (gen->expectation_count() != 1) continue;
        const Ast ast = parse_generator(src);
        const std::string key = expectation_key(expectation_nodes(ast).at(0));
        for (int k = 0; k < 100; ++k) {
            const double t = ut(rng), y = U(rng), z = U(rng), yd = U(rng), zz = U(rng);
            Anticipated a;
            a.t_delta = a.t_zeta = t;
            a.ydelta = &yd;
            a.zzeta = &zz;
            a.y_at_zeta = &yd;
            const double e = gen->expectation_integrand(0, t, a);
            const double e_ref = h.inner(yd, zz);
            const double v = gen->evaluate_scalar(t, y, z, &e_ref);
            const double v_ref = h.outer(y, z, e_ref);
            std::unordered_map<std::string, double> table{{key, e_ref}};
            EvalContext ctx;
            ctx.t = t;
            ctx.y = y;
            ctx.z = z;
            ctx.expectations = &table;
            const double v_tree = eval_generator(ast, ctx);
            worst = std::max({worst, std::fabs(e - e_ref), std::fabs(v - v_ref), std::fabs(v_tree - v_ref)});
        }
    }
    c.expect(worst <= kParserAbs, "closure mismatch " + g(worst));

    // fuzz: any outcome but a typed library error or a clean parse is a failure
    static const char* tokens[] = {"y", "z", "t", "w", "ydelta", "zzeta", "E[", "]", "(", ")", "+", "-", "*", "/",
                                   "^", "abs(", "sin(", "cos(", "exp(", "1", "2.5", "0.5", "1e400", "1e-400", " ",
                                   "E[E[", "^0.5", "^2", ",", ".", "@", "pi", "1.2.3", "((((", "))))", "--", "y y"};
    std::uniform_int_distribution<int> pick(0, static_cast<int>(std::size(tokens)) - 1), len(0, 24), byte(0, 255),
        mode(0, 3);
    int parsed = 0, rejected = 0, foreign = 0;
    for (int k = 0; k < 10000; ++k) {
        std::string s;
        const int n = len(rng);
        if (mode(rng) == 0)
            for (int j = 0; j < n; ++j) s.push_back(static_cast<char>(byte(rng)));
        else
            for (int j = 0; j < n; ++j) s += tokens[pick(rng)];
        try {
            auto gen = ExprGenerator::from_source(s);
            (void)gen->growth();
            std::vector<double> e(gen->expectation_count(), 0.5);
            try {
                (void)gen->evaluate_scalar(0.5, 0.3, -0.2, e.data());
            } catch (const Error&) {
            }
            ++parsed;
        } catch (const Error&) {
            ++rejected;
        } catch (...) {
            ++foreign;
        }
    }
    c.expect(foreign == 0, std::to_string(foreign) + " fuzz inputs raised non-library exceptions");
    c.note("max closure deviation " + g(worst, 2) + "; fuzz: " + std::to_string(parsed) + " parsed, " +
           std::to_string(rejected) + " rejected");
}

struct Entry {
    int id;
    const char* key;
    std::vector<std::string> tags;
    void (*fn)(const json&, std::uint64_t, Check&);
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> e = {
        {1, "constants_exactness", {"constants", "small_data_global"}, constants_exactness},
        {2, "window_constants_consistency", {"constants", "bounded_local"}, window_constants},
        {3, "barrier_closed_form", {"constants", "bounded_global"}, alpha_oracle},
        {4, "martingale_problem", {"solver", "lipschitz"}, martingale_problem},
        {5, "anticipated_closed_form", {"solver", "lipschitz"}, anticipated_closed_form},
        {6, "small_data_global_contraction", {"quadratic", "small_data_global"}, small_data_global},
        {7, "bounded_global_barrier", {"quadratic", "bounded_global"}, bounded_global_barrier},
        {8, "unbounded_transform_correctness", {"transform", "unbounded_transform"}, transform_correctness},
        {9, "cross_strategy_agreement", {"quadratic", "transform", "bounded_global", "unbounded_transform"}, cross_strategy},
        {10, "apriori_bound", {"diagnostics"}, apriori_bound},
        {11, "uniqueness_proxy", {"quadratic", "solver"}, uniqueness},
        {12, "parser", {"parser"}, parser},
    };
    return e;
}

bool selected(const Entry& e, const std::string& filter) {
    if (filter.empty()) return true;
    if (filter == e.key || filter == std::to_string(e.id)) return true;
    for (const auto& t : e.tags)
        if (t == filter) return true;
    char id[8];
    std::snprintf(id, sizeof id, "C%02d", e.id);
    return filter == id;
}

}  // namespace

std::string default_fixtures_dir() { return ABSDE_FIXTURES_DIR; }

std::vector<CriterionResult> acceptance_catalog() {
    std::vector<CriterionResult> out;
    for (const Entry& e : entries()) out.push_back({e.id, e.key, e.tags, false, "", 0.0});
    return out;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            const std::function<void(const CriterionResult&)>& on_result) {
    const std::string dir = opt.fixtures_dir.empty() ? default_fixtures_dir() : opt.fixtures_dir;
    const std::string path = dir + "/acceptance.json";
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open fixtures '" + path + "'");
    json fx;
    try {
        fx = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("fixtures '" + path + "' are not valid JSON: " + e.what());
    }
    const std::uint64_t seed = opt.seed.value_or(20240611);
    std::vector<CriterionResult> out;
    for (const Entry& e : entries()) {
        if (!selected(e, opt.filter)) continue;
        CriterionResult r{e.id, e.key, e.tags, false, "", 0.0};
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            e.fn(fx, seed, c);
        } catch (const std::exception& ex) {
            c.expect(false, std::string("raised: ") + ex.what());
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r.passed = c.ok;
        r.detail = c.detail.str();
        if (on_result) on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_result(const CriterionResult& r) {
    char head[96];
    std::snprintf(head, sizeof head, "%s  C%02d %-31s (%5.1f s)  ", r.passed ? "PASS" : "FAIL", r.id, r.key.c_str(), r.seconds);
    return head + r.detail;
}

}  // namespace absde
