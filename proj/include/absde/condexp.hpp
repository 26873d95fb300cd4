#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "absde/problem.hpp"

namespace absde {

enum class BasisKind { Polynomial, Binned };

struct BasisSpec {
    BasisKind kind = BasisKind::Polynomial;
    int degree = 3;
    int n_bins = 20;
    double ridge = 1e-12;
    /// Polynomial: standardized states are clamped to [-clip, clip] before evaluation, so the
    /// fit is flat beyond the sample bulk instead of extrapolating. 0 disables.
    double clip = 0.0;
};

/// State -> feature vector. Polynomial: tensor Hermite polynomials He_k of the standardized
/// state with total degree <= degree. Binned: equal-count quantile bins of a scalar state.
class FeatureMap {
public:
    static FeatureMap build(const double* states, std::size_t n, int dim, const BasisSpec& basis);

    int size() const noexcept { return n_features_; }
    int dim() const noexcept { return dim_; }
    const BasisSpec& basis() const noexcept { return basis_; }
    /// Polynomial only: writes size() values.
    void eval(const double* x, double* out) const;
    /// Binned only.
    int bin(double x) const;

    const std::vector<double>& center() const noexcept { return center_; }
    const std::vector<double>& scale() const noexcept { return scale_; }
    const std::vector<double>& edges() const noexcept { return edges_; }
    /// Multi-indices, size() rows of dim() entries.
    const std::vector<int>& exponents() const noexcept { return exponents_; }

private:
    BasisSpec basis_;
    int dim_ = 1;
    int n_features_ = 1;
    std::vector<double> center_, scale_;
    std::vector<int> exponents_;
    std::vector<double> edges_;  // interior edges, n_bins - 1 of them
};

struct FitDiagnostics {
    double residual_rms = 0.0;
    double condition = 1.0;
};

class CondEstimator {
public:
    CondEstimator() = default;
    CondEstimator(FeatureMap features, std::vector<double> coefficients, FitDiagnostics diag)
        : features_(std::move(features)), coef_(std::move(coefficients)), diagnostics_(diag) {}

    double apply(const double* state) const;
    double apply(double x) const { return apply(&x); }

    const FeatureMap& features() const noexcept { return features_; }
    const std::vector<double>& coefficients() const noexcept { return coef_; }
    const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }
    /// Scalar polynomial fits: coefficients of 1, x, x^2, ... in the raw state.
    /// Valid inside the clip range.
    std::vector<double> monomial_coefficients() const;

private:
    FeatureMap features_;
    std::vector<double> coef_;
    FitDiagnostics diagnostics_;
};

/// Least-squares estimate of E[target | state]. States are row-major n x dim.
CondEstimator fit_conditional(const double* states, const double* targets, std::size_t n, int dim, const BasisSpec& basis);
CondEstimator fit_conditional(const std::vector<double>& states, const std::vector<double>& targets, const BasisSpec& basis);
inline double apply_conditional(const CondEstimator& est, const double* state) { return est.apply(state); }
inline double apply_conditional(const CondEstimator& est, double x) { return est.apply(x); }

/// Design on one slice, reused for every target regressed on the same states.
class SliceRegression {
public:
    SliceRegression(const double* states, std::size_t n, int dim, const BasisSpec& basis);

    /// Fits targets; when fitted != nullptr writes the fitted value for every path.
    CondEstimator fit(const double* targets, double* fitted) const;

    std::size_t n() const noexcept { return n_; }
    const FeatureMap& features() const noexcept { return fm_; }
    double condition() const noexcept { return condition_; }
    /// Polynomial: n x size() feature matrix. Binned: per-path bin index.
    const std::vector<double>& design() const noexcept { return x_; }
    const std::vector<int>& bins() const noexcept { return bin_; }

private:
    std::size_t n_;
    FeatureMap fm_;
    std::vector<double> x_;
    std::vector<int> bin_;
    std::vector<std::size_t> bin_count_;
    std::vector<double> chol_;  // lower Cholesky factor of the regularized Gram, size() x size()
    double condition_ = 1.0;
};

/// Joint fit of Y_next on span{phi_j(W_i), phi_j(W_i) dW_k / sqrt(h)}: the first block is
/// E_i[Y_next], the second block divided by sqrt(h) is the martingale integrand Z_k.
struct JointFit {
    CondEstimator mean;
    std::vector<CondEstimator> z;  // one per Brownian component
};

class JointRegression {
public:
    JointRegression(const SliceRegression& base, const double* dW, int d, double h);

    /// mean_fitted: n values (nullable); z_fitted: n x d values (nullable).
    JointFit fit(const double* targets, double* mean_fitted, double* z_fitted) const;
    double condition() const noexcept { return condition_; }

private:
    const SliceRegression& base_;
    const double* dW_;
    int d_;
    double h_;
    int p_ = 0;
    std::vector<double> chol_;             // polynomial: one factor of size p_
    std::vector<std::vector<double>> bin_chol_;  // binned: one (1+d) factor per bin
    double condition_ = 1.0;
};

/// Fresh sub-paths from (t_i, state) to slice `target` (default n_T); averages payoff(W_target).
double nested_mc_oracle(const ProblemSpec& problem, const TimeGrid& grid, int i, const std::vector<double>& state,
                        const std::function<double(const double*)>& payoff, std::size_t n_inner, std::uint64_t seed,
                        int target = -1);

}  // namespace absde
