#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "absde/problem.hpp"

namespace absde {

/// Brownian increments and states, laid out [step][path][component].
struct PathEnsemble {
    double h = 0.0;
    int n_steps = 0;
    int d = 1;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    bool antithetic = false;
    std::vector<double> increments;  // n_steps * n_paths * d
    std::vector<double> states;      // (n_steps + 1) * n_paths * d, W[0] = 0

    double dW(int i, std::size_t p, int k = 0) const { return increments[(i * n_paths + p) * d + k]; }
    double W(int i, std::size_t p, int k = 0) const { return states[(i * n_paths + p) * d + k]; }
    const double* increment_row(int i) const { return increments.data() + static_cast<std::size_t>(i) * n_paths * d; }
    const double* state_row(int i) const { return states.data() + static_cast<std::size_t>(i) * n_paths * d; }

    /// Sums `factor` consecutive increments: the same paths on a grid with step factor*h.
    PathEnsemble coarsen(int factor) const;
    /// The first n paths (an even count when antithetic).
    PathEnsemble prefix(std::size_t n) const;
};

PathEnsemble simulate_brownian(const TimeGrid& grid, int d, std::size_t n_paths, std::uint64_t seed, bool antithetic);

/// Uniform on (0,1) from a counter-based hash of (key, counter).
double counter_uniform(std::uint64_t key, std::uint64_t counter);
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream);

/// Inverse standard normal CDF (double-precision accurate).
double normal_quantile(double u);

/// Little-endian binary dump: magic, seed, d, antithetic, n_paths, n_steps, h, increments.
void save_ensemble(const PathEnsemble& e, const std::string& path);
PathEnsemble load_ensemble(const std::string& path);

}  // namespace absde
