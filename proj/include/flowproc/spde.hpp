#pragma once

#include <vector>

#include "flowproc/field.hpp"
#include "flowproc/model.hpp"
#include "flowproc/noise.hpp"

namespace flowproc {

// One density step, four stages:
//   1. generator: explicit first/zeroth order terms of the adjoint, then
//      backward Euler for the (1/2) a d_xx part via a prefactored tridiagonal
//      solve with mirror boundary rows,
//   2. environment transport in flux form (interface fluxes, zero at the
//      walls) so the grid sum is conserved exactly per increment,
//   3. nonnegativity sweep that shifts deficits to neighbours instead of
//      clipping them away, again exactly conservative,
//   4. branching noise per cell: an exact Feller mass update (Poisson number
//      of families, Gamma masses) below a load threshold, the Gaussian
//      sqrt(u) approximation above it. A zeroed sheet disables this stage,
//      which turns the solver into the deterministic forward equation.
struct SpdeOptions {
    double feller_factor = 12.0;  // exact update when u < factor * dt / dx
    double leak_fraction = 1e-6;  // boundary mass fraction that aborts the run
    int monitor_every = 64;
    std::vector<long> snapshot_steps;  // strictly increasing, 0 = initial field
};

struct SpdeRun {
    DensityField field;
    std::vector<double> mass_trace;  // grid mass after each step, front() = initial
    std::vector<std::vector<double>> snapshots;  // one per requested step
};

SpdeRun run_spde(const DensityField& init, const Coefficients& c, const NoisePath& w,
                 const SheetSource& sheet, int steps, const SpdeOptions& opt = {},
                 bool keep_trace = false);

// deficit-carrying nonnegativity projection; preserves the sum exactly
// whenever it is nonnegative
void sweep_nonneg(std::vector<double>& u);

}  // namespace flowproc
