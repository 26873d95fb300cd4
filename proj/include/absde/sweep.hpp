#pragma once

// Backward sweep shared by every strategy. Not part of the stable surface.

#include <memory>

#include "absde/solver.hpp"

namespace absde {

enum class UpdateMode {
    Explicit,           // Y = a + h f(t, a, Z, E)
    Implicit,           // damped fixed point in y
    FrozenDriver,       // Y = a + h f(t, y^n, z^n, E of (y^n, z^n))
    QuadraticImplicit,  // bracketed Newton in y, E from a frozen pair
};

struct SweepSetup {
    const ProblemSpec* problem = nullptr;
    GeneratorPtr gen;
    TerminalPtr xi;
    TerminalPtr eta;
    TimeGrid grid;
    NumericsSpec num;
    DelayMap dmap;
    DelayMap zmap;
    std::shared_ptr<const PathEnsemble> owned;
    const PathEnsemble* paths = nullptr;
    /// Clamp fitted conditional expectations to the range of their targets. Needed when the
    /// solution must stay inside a bounded image (the transform); it costs exactness elsewhere.
    bool clamp_fitted = false;
};

SweepSetup make_setup(const ProblemSpec& problem, GeneratorPtr gen, TerminalPtr xi, TerminalPtr eta,
                      const NumericsSpec& num, const PathEnsemble* paths);

/// Zero tables with the terminal block filled from (xi, eta).
DiscreteSolution init_solution(const SweepSetup& s);

struct SweepOptions {
    UpdateMode mode = UpdateMode::Explicit;
    int i_lo = 0;
    int i_hi = -1;  // -1: n_T
    /// Source of the anticipated arguments; nullptr means the solution being built.
    const DiscreteSolution* frozen = nullptr;
    /// FrozenDriver: previous iterate supplying y and z.
    const DiscreteSolution* driver = nullptr;
};

void backward_sweep(const SweepSetup& s, DiscreteSolution& sol, const SweepOptions& opt);

/// Y0 mean and the plain Monte Carlo standard error of the pathwise flow, taken at slice i0.
void finalize_solution(DiscreteSolution& sol, int i0 = 0);

/// sup |dY| + sqrt(h * sum_i mean_p |dZ_i|^2) over slices [i_lo, i_hi).
double iterate_distance(const DiscreteSolution& a, const DiscreteSolution& b, int i_lo, int i_hi);

}  // namespace absde
