#pragma once

#include <memory>
#include <vector>

#include "absde/generator.hpp"

namespace absde {

/// phi(t, y) = int_0^y exp(2 Lambda(t, s)) ds with Lambda(t, s) = int_0^s lambda(t, r) dr.
/// Exact evaluators use adaptive Gauss-Kronrod to quad_tol. tabulate() adds per-time cubic
/// Hermite tables on [-kTableRange, kTableRange] for the solver's hot loops; off-table
/// arguments and untabulated times fall back to the exact evaluators.
class PhiTransform {
public:
    static constexpr double kTableRange = 16.0;
    static constexpr int kNodesPerUnit = 64;

    PhiTransform(LambdaPtr lambda, double quad_tol = 1e-10);

    bool identity() const noexcept { return identity_; }
    double quad_tol() const noexcept { return tol_; }
    const LambdaFunction& lambda() const { return *lambda_; }

    double Lambda(double t, double y) const;
    double phi(double t, double y) const;
    double phi_y(double t, double y) const;
    double phi_t(double t, double y) const;
    double phi_inv(double t, double ybar) const;

    void tabulate(const std::vector<double>& times);
    double phi_fast(double t, double y) const;
    double phi_y_fast(double t, double y) const;
    double phi_t_fast(double t, double y) const;
    double phi_inv_fast(double t, double ybar) const;

private:
    struct Table {
        double t;
        std::vector<double> phi, phi_y, phi_t, lam, phi_ty;
    };
    const Table* find(double t) const;
    double Lambda_t(double t, double y) const;

    LambdaPtr lambda_;
    double tol_;
    bool identity_;
    std::vector<Table> tables_;  // sorted by t
};

std::shared_ptr<PhiTransform> build_phi_transform(LambdaPtr lambda, double quad_tol = 1e-10);

/// phi_y f(t, phi^{-1}(ybar), zbar / phi_y, ...) - phi_t, with anticipated arguments mapped back at their own times.
class TransformedGenerator final : public Generator {
public:
    TransformedGenerator(GeneratorPtr base, std::shared_ptr<const PhiTransform> phi)
        : base_(std::move(base)), phi_(std::move(phi)) {}
    std::size_t expectation_count() const override { return base_->expectation_count(); }
    ExpectationUse expectation_use(std::size_t k) const override;
    double expectation_integrand(std::size_t k, double t, const Anticipated& a) const override;
    void evaluate(double t, const double* y, const double* z, const double* e, double* out) const override;
    GrowthReport growth() const override { return base_->growth(); }
    std::string describe() const override { return "transformed(" + base_->describe() + ")"; }

private:
    GeneratorPtr base_;
    std::shared_ptr<const PhiTransform> phi_;
};

/// xi_bar = phi(t, xi), or eta_bar = phi_y(t, xi) eta when `eta` is given.
class TransformedTerminal final : public TerminalFunction {
public:
    TransformedTerminal(TerminalPtr xi, TerminalPtr eta, std::shared_ptr<const PhiTransform> phi)
        : xi_(std::move(xi)), eta_(std::move(eta)), phi_(std::move(phi)) {}
    int size() const override { return 1; }
    void evaluate(double t, const double* w, double* out) const override;
    int components_used() const noexcept override {
        return std::max(xi_->components_used(), eta_ ? eta_->components_used() : 0);
    }
    std::string describe() const override;

private:
    TerminalPtr xi_, eta_;
    std::shared_ptr<const PhiTransform> phi_;
};

}  // namespace absde
