#include "flowproc/loglaplace.hpp"

#include <cmath>

namespace flowproc {

double BackwardSolution::y0_at(double x) const {
    DensityField view;
    view.grid = grid;
    view.values = y0;
    return view.value_at(x);
}

BackwardSolution solve_backward(const Grid1D& g, std::vector<double> terminal,
                                const Coefficients& c, const NoisePath& w, int steps,
                                const BackwardOptions& opt) {
    if (c.dim != 1 || w.dim != 1)
        throw UnsupportedCoefficients("backward solver is one-dimensional");
    if ((int)terminal.size() != g.n) throw InvalidStep("terminal data does not match the grid");
    if (steps < 1) throw InvalidStep("backward solve needs at least one step");
    if ((std::size_t)steps > w.steps)
        throw InsufficientEnvironmentPath("environment path shorter than the backward horizon");
    for (double v : terminal)
        if (!(v >= 0)) throw NegativeTerminalData("terminal data must be nonnegative");

    const double dt = w.dt;
    const BackwardView rev = backward_view(w);
    const ImplicitDiffusion imp(c, g, dt);

    std::vector<double> bcoef(g.n), s1(g.n);
    for (int i = 0; i < g.n; ++i) {
        const double x = g.node_x(i);
        bcoef[i] = c.b1(x);
        s1[i] = c.s1(x);
    }

    BackwardSolution sol;
    sol.grid = g;
    sol.dt = dt;
    sol.steps = steps;
    sol.terminal = terminal;
    sol.snapshot_stride = opt.snapshot_stride;

    std::vector<double> y = std::move(terminal);
    std::vector<double> dyx(g.n);
    const double inv2dx = 1.0 / (2 * g.dx);
    for (int k = 0; k < steps; ++k) {
        const double dw = rev.inc(k);
        // mirror ghosts: the derivative vanishes at the walls
        dyx[0] = 0;
        dyx[g.n - 1] = 0;
        for (int i = 1; i + 1 < g.n; ++i) dyx[i] = (y[i + 1] - y[i - 1]) * inv2dx;
        for (int i = 0; i < g.n; ++i)
            y[i] += dt * (bcoef[i] * dyx[i] - 0.5 * y[i] * y[i]) + s1[i] * dyx[i] * dw;
        imp.solve(y);
        for (double& v : y)
            if (v < 0) v = 0;
        if ((k + 1) % 64 == 0 || k + 1 == steps) {
            for (double v : y)
                if (!std::isfinite(v)) throw NonfiniteValue("backward solution went nonfinite");
        }
        if (opt.snapshot_stride > 0 && (k + 1) % opt.snapshot_stride == 0)
            sol.snapshots.push_back(y);
    }
    sol.y0 = std::move(y);
    return sol;
}

double conditional_laplace(const BackwardSolution& sol, const AtomicMeasure& mu) {
    if (mu.dim != 1) throw UnsupportedCoefficients("conditional functional is one-dimensional");
    double pairing = 0;
    for (const Atom& a : mu.atoms) {
        if (a.pos[0] < sol.grid.x_min || a.pos[0] > sol.grid.x_max)
            throw SupportOutsideGrid("initial atom outside the solution grid");
        pairing += a.mass * sol.y0_at(a.pos[0]);
    }
    return std::exp(-pairing);
}

}  // namespace flowproc
