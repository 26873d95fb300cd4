#include "absde/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "absde/errors.hpp"

namespace absde {

std::vector<double> TimeGrid::times() const {
    std::vector<double> t(static_cast<std::size_t>(n_total) + 1);
    for (int i = 0; i <= n_total; ++i) t[i] = time(i);
    return t;
}

TimeGrid build_time_grid(double T, double K, int n_T) {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("T must be positive");
    if (!(K >= 0.0) || !std::isfinite(K)) throw InvalidArgument("K must be nonnegative");
    if (n_T < 1) throw InvalidArgument("n_T must be positive");
    TimeGrid g;
    g.T = T;
    g.K = K;
    g.n_T = n_T;
    g.h = T / n_T;
    double ratio = K / g.h;
    double r = std::round(ratio);
    if (std::fabs(ratio - r) > 1e-9) {
        std::ostringstream os;
        os << "K = " << K << " is not an integer multiple of h = " << g.h;
        throw NonCommensurateHorizon(os.str());
    }
    g.n_total = n_T + static_cast<int>(r);
    return g;
}

double DelaySpec::at(double t, int index) const {
    switch (kind) {
        case DelayKind::Constant: return a;
        case DelayKind::Affine: return a + b * t;
        case DelayKind::Tabulated:
            if (index < 0 || index >= static_cast<int>(values.size()))
                throw InvalidArgument("tabulated delay has no value for grid index " + std::to_string(index));
            return values[static_cast<std::size_t>(index)];
    }
    return 0.0;
}

double DelayMap::max_snap_error() const {
    return snap_errors.empty() ? 0.0 : *std::max_element(snap_errors.begin(), snap_errors.end());
}

DelayMap snap_delay(const TimeGrid& grid, const DelaySpec& spec) {
    if (spec.kind == DelayKind::Tabulated && static_cast<int>(spec.values.size()) != grid.n_T + 1)
        throw InvalidArgument("tabulated delay needs n_T + 1 = " + std::to_string(grid.n_T + 1) + " values");
    DelayMap map;
    map.shift_index.resize(static_cast<std::size_t>(grid.n_T) + 1);
    map.snap_errors.resize(map.shift_index.size());
    const double horizon = grid.T + grid.K;
    const double slack = 0.5 * grid.h + 1e-12 * std::max(1.0, horizon);
    bool warned = false;
    for (int i = 0; i <= grid.n_T; ++i) {
        const double t = grid.time(i);
        const double dlt = spec.at(t, i);
        if (dlt < -1e-14) throw InvalidArgument("delay is negative at t = " + std::to_string(t));
        const double target = t + std::max(0.0, dlt);
        if (target > horizon + slack) {
            std::ostringstream os;
            os << "t + delta(t) = " << target << " exceeds T + K = " << horizon << " at t = " << t;
            throw HorizonViolation(os.str());
        }
        int j = static_cast<int>(std::floor(target / grid.h + 0.5));
        j = std::clamp(j, i, grid.n_total);
        map.shift_index[i] = j;
        map.snap_errors[i] = std::fabs(grid.time(j) - target);
        if (map.snap_errors[i] > 1e-9 * grid.h && !warned) {
            std::ostringstream os;
            os << "delay snapped to grid: t = " << t << " + " << dlt << " -> " << grid.time(j)
               << " (error " << map.snap_errors[i] << ")";
            map.warnings.push_back(os.str());
            warned = true;
        }
    }
    return map;
}

double delay_density_L(const DelaySpec& spec) {
    switch (spec.kind) {
        case DelayKind::Constant: return 1.0;
        case DelayKind::Affine:
            if (spec.b <= -1.0) throw DegenerateDelay("affine delay slope b must exceed -1");
            return 1.0 / (1.0 + spec.b);
        case DelayKind::Tabulated:
            if (!(spec.L > 0.0)) throw InvalidArgument("tabulated delay needs a positive L");
            return spec.L;
    }
    return 1.0;
}

void ProblemSpec::validate() const {
    if (!(T > 0.0)) throw InvalidArgument("T must be positive");
    if (!(K >= 0.0)) throw InvalidArgument("K must be nonnegative");
    if (m < 1 || d < 1) throw InvalidArgument("m and d must be positive");
    if (d > 9) throw InvalidArgument("at most 9 Brownian components are supported");
    if (!generator) throw InvalidArgument("problem has no generator");
    if (!terminal_xi || !terminal_eta) throw InvalidArgument("problem needs terminal_xi and terminal_eta");
    if (generator->m() != m || generator->d() != d) throw InvalidArgument("generator dimensions do not match (m, d)");
    if (terminal_xi->size() != m) throw InvalidArgument("terminal_xi must have m outputs");
    if (terminal_eta->size() != m * d) throw InvalidArgument("terminal_eta must have m*d outputs");
    if (terminal_xi->components_used() > d || terminal_eta->components_used() > d)
        throw InvalidArgument("terminal expression references a Brownian component beyond d");
    if (!(constants.C > 0.0)) throw InvalidArgument("C must be positive");
    if (!(constants.gamma > 0.0)) throw InvalidArgument("gamma must be positive");
    if (!(constants.alpha_holder >= 0.0 && constants.alpha_holder < 1.0))
        throw InvalidArgument("alpha_holder must lie in [0, 1)");
    if (lambda_term && (m != 1 || d != 1)) throw InvalidArgument("the lambda term requires m = d = 1");
    for (const DelaySpec* s : {&delta_shift, &zeta_shift}) {
        if (s->kind == DelayKind::Constant && s->a < 0.0) throw InvalidArgument("constant delay must be nonnegative");
        if (s->kind == DelayKind::Affine) {
            if (s->a < 0.0 || s->a + s->b * T < 0.0) throw InvalidArgument("affine delay must be nonnegative on [0, T]");
            if (s->a > T + K + 1e-12 || s->a + s->b * T + T > T + K + 1e-12)
                throw HorizonViolation("affine delay reaches beyond T + K");
        }
        if (s->kind == DelayKind::Constant && s->a > K + 1e-12) throw HorizonViolation("constant delay exceeds K");
    }
    (void)L();
}

double ProblemSpec::L() const {
    if (constants.L > 0.0) return constants.L;
    return std::max(delay_density_L(delta_shift), delay_density_L(zeta_shift));
}

GeneratorPtr ProblemSpec::full_generator() const {
    if (!has_lambda()) return generator;
    return std::make_shared<LambdaAugmentedGenerator>(generator, lambda_term);
}

}  // namespace absde
