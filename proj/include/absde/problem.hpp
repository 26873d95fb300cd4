#pragma once

#include <memory>
#include <string>
#include <vector>

#include "absde/generator.hpp"

namespace absde {

/// Uniform grid on [0, T + K] with t_{n_T} = T exactly.
struct TimeGrid {
    double T = 1.0;
    double K = 0.0;
    double h = 1.0;
    int n_T = 1;
    int n_total = 1;

    double time(int i) const {
        if (i <= n_T) return T * (static_cast<double>(i) / n_T);
        return T + (i - n_T) * h;
    }
    std::vector<double> times() const;
};

TimeGrid build_time_grid(double T, double K, int n_T);

enum class DelayKind { Constant, Affine, Tabulated };

struct DelaySpec {
    DelayKind kind = DelayKind::Constant;
    double a = 0.0;
    double b = 0.0;
    /// Tabulated: one value per grid index 0..n_T, and the user's density constant.
    std::vector<double> values;
    double L = 1.0;

    static DelaySpec constant(double a) { return {DelayKind::Constant, a, 0.0, {}, 1.0}; }
    static DelaySpec affine(double a, double b) { return {DelayKind::Affine, a, b, {}, 1.0}; }
    static DelaySpec tabulated(std::vector<double> v, double L) { return {DelayKind::Tabulated, 0.0, 0.0, std::move(v), L}; }

    double at(double t, int index) const;
};

struct DelayMap {
    std::vector<int> shift_index;     // i -> j, for i = 0..n_T
    std::vector<double> snap_errors;  // |t_j - (t_i + delta(t_i))|
    std::vector<std::string> warnings;
    double max_snap_error() const;
};

DelayMap snap_delay(const TimeGrid& grid, const DelaySpec& spec);

/// Smallest L with int_t^T h(s + delta(s)) ds <= L int_t^{T+K} h(s) ds.
double delay_density_L(const DelaySpec& spec);

struct StructuralConstants {
    double C = 1.0;
    double gamma = 1.0;
    double alpha_holder = 0.0;
    /// Delay density constant; <= 0 means derive it from the delay specs.
    double L = 0.0;
};

struct ProblemSpec {
    double T = 1.0;
    double K = 0.0;
    int m = 1;
    int d = 1;
    DelaySpec delta_shift;
    DelaySpec zeta_shift;
    GeneratorPtr generator;
    LambdaPtr lambda_term;  // optional lambda(t,y) z^2 term
    TerminalPtr terminal_xi;
    TerminalPtr terminal_eta;
    StructuralConstants constants;

    void validate() const;
    /// Explicit L, or the larger density constant of the two delay specs.
    double L() const;
    /// Generator including the lambda term when present.
    GeneratorPtr full_generator() const;
    bool has_lambda() const { return lambda_term != nullptr && !lambda_term->is_zero(); }
};

}  // namespace absde
