#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "absde/condexp.hpp"
#include "absde/paths.hpp"
#include "absde/problem.hpp"

namespace absde {

enum class Scheme { Explicit, Implicit };

struct NumericsSpec {
    int n_T = 64;
    std::size_t n_paths = 100000;
    BasisSpec basis;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::Explicit;
    double inner_tol = 1e-10;
    int inner_max_iter = 50;
    bool antithetic = false;
};

struct SliceEstimators {
    std::vector<CondEstimator> y;  // E_i[Y_{i+1}], one per component
    std::vector<CondEstimator> z;  // m*d
    std::vector<CondEstimator> e;  // one per E[...] node
};

/// Y: [slice][path][m], Z: [slice][path][m*d], slices 0..n_total.
struct DiscreteSolution {
    TimeGrid grid;
    int m = 1;
    int d = 1;
    std::size_t n_paths = 0;
    std::vector<double> Y;
    std::vector<double> Z;
    /// h*f actually used on slice i < n_T, [slice][path][m]; flow = Y_{n_T} + sum of drift.
    std::vector<double> drift;
    std::vector<SliceEstimators> estimators;  // n_T entries
    std::vector<double> residual_rms;         // joint fit residual per slice
    double Y0_mean = 0.0;
    double Y0_stderr = 0.0;
    int max_inner_iterations = 0;
    std::vector<std::string> warnings;
    std::uint64_t seed = 0;
    NumericsSpec numerics;
    /// The ensemble the tables live on. Non-owning when the caller supplied the paths.
    std::shared_ptr<const PathEnsemble> paths;

    std::size_t y_stride() const { return n_paths * static_cast<std::size_t>(m); }
    std::size_t z_stride() const { return n_paths * static_cast<std::size_t>(m * d); }
    double* y_row(int i) { return Y.data() + i * y_stride(); }
    const double* y_row(int i) const { return Y.data() + i * y_stride(); }
    double* z_row(int i) { return Z.data() + i * z_stride(); }
    const double* z_row(int i) const { return Z.data() + i * z_stride(); }
    double y(int i, std::size_t p, int c = 0) const { return Y[i * y_stride() + p * m + c]; }
    double z(int i, std::size_t p, int c = 0, int k = 0) const { return Z[i * z_stride() + p * m * d + c * d + k]; }
};

struct MartingaleZ {
    std::vector<double> z;            // n x d
    std::vector<double> mean;         // fitted E_i[Y_next], n values
    std::vector<CondEstimator> est;   // one per Brownian component
};

/// Z_i from the joint regression of Y_next on {phi_j(W_i), phi_j(W_i) dW_k / sqrt(h)}.
MartingaleZ martingale_representation_z(const double* y_next, const double* dW, const double* states, std::size_t n,
                                        int d, const BasisSpec& basis, double h);

/// Single backward sweep with regressed anticipated terms. `paths` may be supplied for
/// common random numbers; otherwise they are simulated from the numerics.
DiscreteSolution solve_anticipated_lipschitz(const ProblemSpec& problem, const NumericsSpec& numerics,
                                             const PathEnsemble* paths = nullptr);

}  // namespace absde
