#pragma once

#include <vector>

#include "flowproc/errors.hpp"
#include "flowproc/model.hpp"

namespace flowproc {

// Cell-centered uniform grid on [x_min, x_max]. Node i sits at the center of
// cell i; densities live on nodes and integrals are sums times dx.
struct Grid1D {
    double x_min = 0;
    double x_max = 0;
    double dx = 0;
    int n = 0;

    double node_x(int i) const { return x_min + (i + 0.5) * dx; }
    // index of the cell containing x, or -1 outside
    int cell_of(double x) const {
        if (x < x_min || x >= x_max) return -1;
        int i = (int)((x - x_min) / dx);
        return i >= n ? n - 1 : i;
    }
};

Grid1D make_grid(double x_min, double x_max, double dx);

struct DensityField {
    Grid1D grid;
    std::vector<double> values;

    double mass() const {
        double s = 0;
        for (double v : values) s += v;
        return s * grid.dx;
    }
    template <class F>
    double integrate(F&& f) const {
        double s = 0;
        for (int i = 0; i < grid.n; ++i) s += values[i] * f(grid.node_x(i));
        return s * grid.dx;
    }
    // linear interpolation between node values, constant beyond edge nodes
    double value_at(double x) const;
};

// Deposit each atom as a narrow Gaussian bump (sd = dx, truncated at 8 dx)
// and renormalize the bump weights on the grid so mass is preserved exactly.
// Atoms closer than 8 dx to the boundary are rejected.
DensityField init_field(const AtomicMeasure& mu, const Grid1D& grid);

// Tridiagonal finite-difference operators, rows (lower, diag, upper) per node.
struct Tridiag {
    int n = 0;
    std::vector<double> lower, diag, upper;  // lower[0] and upper[n-1] unused

    void apply(const std::vector<double>& in, std::vector<double>& out) const;
};

// Forward generator L f = 1/2 a f'' + b f' on the grid, centered differences
// inside and one-sided at the boundary rows.
Tridiag discretize_L(const Coefficients& c, const Grid1D& grid);

// Prefactored backward-Euler solve of (I - dt (1/2) a d_xx) with mirror ghost
// rows; rows are constant over a run, so the Thomas elimination happens once.
struct ImplicitDiffusion {
    std::vector<double> lower, cprime, denom;

    ImplicitDiffusion(const Coefficients& c, const Grid1D& g, double dt);
    void solve(std::vector<double>& x) const;  // in place
};

// Adjoint L* f = 1/2 (a f)'' - (b f)', expanded to
//   1/2 a f'' + (a' - b) f' + (1/2 a'' - b') f.
// Throws GridTooCoarse when dx * max|a'| exceeds the resolution budget: the
// first-derivative stencil must resolve the advection produced by a'.
Tridiag discretize_L_star(const Coefficients& c, const Grid1D& grid, double budget = 0.1);

}  // namespace flowproc
