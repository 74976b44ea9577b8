#pragma once

#include <vector>

#include "flowproc/field.hpp"
#include "flowproc/model.hpp"
#include "flowproc/noise.hpp"

namespace flowproc {

// Backward equation for the conditional Laplace functional: given terminal
// data f >= 0 at time t, march y down to 0 against the same environment path
// the forward process saw, with
//   - the forward generator L = 1/2 a d_xx + b d_x (diffusion backward Euler,
//     drift explicit),
//   - the quadratic absorption -(1/2) y^2,
//   - the transport sigma1 y' against the reversed increments, integrand at
//     the later time level (backward sum convention),
//   - mirror boundary rows, so constants are preserved exactly,
//   - a clip at 0 after each step.
// Then exp(-<mu, y(0)>) estimates E[exp(-<X_t, f>) | W].
struct BackwardOptions {
    int snapshot_stride = 0;  // when > 0, keep y every this many steps
};

struct BackwardSolution {
    Grid1D grid;
    double dt = 0;
    int steps = 0;
    std::vector<double> terminal;
    std::vector<double> y0;
    int snapshot_stride = 0;
    std::vector<std::vector<double>> snapshots;  // at stride, 2*stride, ...

    double y0_at(double x) const;  // linear interpolation between nodes
};

BackwardSolution solve_backward(const Grid1D& g, std::vector<double> terminal,
                                const Coefficients& c, const NoisePath& w, int steps,
                                const BackwardOptions& opt = {});

double conditional_laplace(const BackwardSolution& sol, const AtomicMeasure& mu);

}  // namespace flowproc
