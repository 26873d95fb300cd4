#pragma once

#include <cstddef>
#include <map>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absde/genexpr.hpp"

namespace absde {

/// Anticipated arguments handed to an E[...] integrand: Y at the delta-shifted slice,
/// Z and Y at the zeta-shifted slice, plus the times of those slices.
struct Anticipated {
    double t_delta = 0.0;
    const double* ydelta = nullptr;     // m values
    double t_zeta = 0.0;
    const double* zzeta = nullptr;      // m*d values
    const double* y_at_zeta = nullptr;  // m values
};

struct ExpectationUse {
    bool ydelta = false;
    bool zzeta = false;
    bool y_at_zeta = false;
};

/// Driver f(t, y, z, E_t[g_1(Y_{t+delta}, Z_{t+zeta})], ...). Anticipated values reach the
/// driver only through conditional expectations of the integrands g_k.
class Generator {
public:
    virtual ~Generator() = default;
    virtual int m() const { return 1; }
    virtual int d() const { return 1; }
    virtual std::size_t expectation_count() const = 0;
    virtual ExpectationUse expectation_use(std::size_t k) const = 0;
    virtual double expectation_integrand(std::size_t k, double t, const Anticipated& a) const = 0;
    /// y: m values, z: m*d values (row-major), e: expectation_count() values, out: m values.
    virtual void evaluate(double t, const double* y, const double* z, const double* e, double* out) const = 0;
    virtual GrowthReport growth() const = 0;
    virtual std::string describe() const = 0;

    double evaluate_scalar(double t, double y, double z, const double* e) const {
        double out = 0.0;
        evaluate(t, &y, &z, e, &out);
        return out;
    }
};

using GeneratorPtr = std::shared_ptr<const Generator>;

/// Scalar generator backed by a parsed expression.
class ExprGenerator final : public Generator {
public:
    explicit ExprGenerator(Ast ast);
    static GeneratorPtr from_source(const std::string& src);

    std::size_t expectation_count() const override { return inner_.size(); }
    ExpectationUse expectation_use(std::size_t k) const override { return uses_[k]; }
    double expectation_integrand(std::size_t k, double t, const Anticipated& a) const override;
    void evaluate(double t, const double* y, const double* z, const double* e, double* out) const override;
    GrowthReport growth() const override { return growth_; }
    std::string describe() const override { return to_string(ast_); }

    const Ast& ast() const noexcept { return ast_; }
    /// Canonical keys of the E[...] nodes, in slot order.
    const std::vector<std::string>& expectation_keys() const noexcept { return keys_; }

private:
    Ast ast_;
    CompiledExpr main_;
    std::vector<CompiledExpr> inner_;
    std::vector<ExpectationUse> uses_;
    std::vector<std::string> keys_;
    GrowthReport growth_;
};

/// The multi-dimensional small-data example: f_c = y_c^2 + sum_k z_ck^2 + E[ydelta_c^2 + sum_k zzeta_ck^2].
class QuadraticSmallDataGenerator final : public Generator {
public:
    QuadraticSmallDataGenerator(int m, int d) : m_(m), d_(d) {}
    int m() const override { return m_; }
    int d() const override { return d_; }
    std::size_t expectation_count() const override { return static_cast<std::size_t>(m_); }
    ExpectationUse expectation_use(std::size_t) const override { return {true, true, false}; }
    double expectation_integrand(std::size_t k, double t, const Anticipated& a) const override;
    void evaluate(double t, const double* y, const double* z, const double* e, double* out) const override;
    GrowthReport growth() const override;
    std::string describe() const override;

private:
    int m_, d_;
};

// ---------------------------------------------------------------------------

/// lambda(t, y) of the lambda(t,y) z^2 term.
class LambdaFunction {
public:
    virtual ~LambdaFunction() = default;
    virtual double value(double t, double y) const = 0;
    /// d/dt lambda. Default: central difference.
    virtual double dt(double t, double y) const;
    /// Closed-form int_0^y lambda(t, r) dr and its t-derivative, when known; NaN means integrate numerically.
    virtual double antiderivative(double, double) const { return std::numeric_limits<double>::quiet_NaN(); }
    virtual double antiderivative_dt(double, double) const { return std::numeric_limits<double>::quiet_NaN(); }
    virtual bool is_zero() const { return false; }
    virtual std::string describe() const = 0;
};

using LambdaPtr = std::shared_ptr<const LambdaFunction>;

class ConstantLambda final : public LambdaFunction {
public:
    explicit ConstantLambda(double c) : c_(c) {}
    double value(double, double) const override { return c_; }
    double dt(double, double) const override { return 0.0; }
    double antiderivative(double, double y) const override { return c_ * y; }
    double antiderivative_dt(double, double) const override { return 0.0; }
    bool is_zero() const override { return c_ == 0.0; }
    std::string describe() const override;

private:
    double c_;
};

/// lambda(t, y) = exp(-y^2) * t.
class GaussianRampLambda final : public LambdaFunction {
public:
    double value(double t, double y) const override;
    double dt(double t, double y) const override;
    double antiderivative(double t, double y) const override;
    double antiderivative_dt(double t, double y) const override;
    std::string describe() const override { return "exp(-y^2)*t"; }
};

class ExprLambda final : public LambdaFunction {
public:
    explicit ExprLambda(Ast ast);
    double value(double t, double y) const override;
    bool is_zero() const override { return zero_; }
    std::string describe() const override { return to_string(ast_); }

private:
    Ast ast_;
    CompiledExpr code_;
    bool zero_ = false;
};

/// base(t, y, z, ...) + lambda(t, y) z^2 for scalar problems.
class LambdaAugmentedGenerator final : public Generator {
public:
    LambdaAugmentedGenerator(GeneratorPtr base, LambdaPtr lambda) : base_(std::move(base)), lambda_(std::move(lambda)) {}
    std::size_t expectation_count() const override { return base_->expectation_count(); }
    ExpectationUse expectation_use(std::size_t k) const override { return base_->expectation_use(k); }
    double expectation_integrand(std::size_t k, double t, const Anticipated& a) const override {
        return base_->expectation_integrand(k, t, a);
    }
    void evaluate(double t, const double* y, const double* z, const double* e, double* out) const override;
    GrowthReport growth() const override;
    std::string describe() const override;

private:
    GeneratorPtr base_;
    LambdaPtr lambda_;
};

// ---------------------------------------------------------------------------

/// g(t, W_t) for the terminal block. Produces size() outputs.
class TerminalFunction {
public:
    virtual ~TerminalFunction() = default;
    virtual int size() const = 0;
    virtual void evaluate(double t, const double* w, double* out) const = 0;
    /// Set when every output is the same constant.
    virtual std::optional<double> constant_value() const { return std::nullopt; }
    virtual int components_used() const noexcept { return 1; }
    virtual std::string describe() const = 0;
};

using TerminalPtr = std::shared_ptr<const TerminalFunction>;

class ExprTerminal final : public TerminalFunction {
public:
    /// One expression per output, or a single expression broadcast to `size` outputs.
    ExprTerminal(std::vector<Ast> exprs, int size);
    static TerminalPtr from_source(const std::string& src, int size = 1);

    int size() const override { return size_; }
    void evaluate(double t, const double* w, double* out) const override;
    std::optional<double> constant_value() const override { return constant_; }
    std::string describe() const override;
    /// Number of Brownian components referenced (w1..w9).
    int components_used() const noexcept override { return n_w_; }
    const std::vector<Ast>& expressions() const noexcept { return exprs_; }

private:
    std::vector<Ast> exprs_;
    std::vector<CompiledExpr> code_;
    int size_;
    int n_w_ = 0;
    std::optional<double> constant_;
};

// ---------------------------------------------------------------------------
// Catalog

using Params = std::map<std::string, double>;

/// Known names: zero, constant{c}, anticipated_mean, example_3_3, example_4_3{alpha},
/// example_4_7, example_5_5, quadratic_z.
GeneratorPtr make_builtin_generator(const std::string& name, const Params& params = {}, int m = 1, int d = 1);
std::vector<std::string> builtin_generator_names();

/// Known names: zero, constant{c}, example_5_5.
LambdaPtr make_builtin_lambda(const std::string& name, const Params& params = {});

}  // namespace absde
