#include "flowproc/field.hpp"

#include <cmath>

namespace flowproc {

Grid1D make_grid(double x_min, double x_max, double dx) {
    if (!(dx > 0) || !(x_max > x_min)) throw GridTooCoarse("grid requires dx > 0 and x_max > x_min");
    Grid1D g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.dx = dx;
    const double span = (x_max - x_min) / dx;
    g.n = (int)std::lround(span);
    if (g.n < 4 || std::abs(span - g.n) > 1e-9 * (g.n + 1))
        throw GridTooCoarse("grid extent must be an integer multiple of dx (>= 4 cells)");
    return g;
}

double DensityField::value_at(double x) const {
    const Grid1D& g = grid;
    const double u = (x - g.x_min) / g.dx - 0.5;
    if (u <= 0) return values.front();
    if (u >= g.n - 1) return values.back();
    const int i = (int)u;
    const double w = u - i;
    return values[i] * (1 - w) + values[i + 1] * w;
}

DensityField init_field(const AtomicMeasure& mu, const Grid1D& grid) {
    if (mu.dim != 1) throw UnsupportedCoefficients("init_field is one-dimensional");
    DensityField f;
    f.grid = grid;
    f.values.assign(grid.n, 0.0);
    const int halo = 8;
    for (const Atom& a : mu.atoms) {
        const double x = a.pos[0];
        if (x < grid.x_min + halo * grid.dx || x > grid.x_max - halo * grid.dx)
            throw SupportOutsideGrid("atom too close to the grid boundary");
        const int ic = grid.cell_of(x);
        // raw bump weights, then exact renormalization on the grid
        double wsum = 0;
        std::vector<double> w(2 * halo + 1, 0.0);
        for (int k = -halo; k <= halo; ++k) {
            const double d = (grid.node_x(ic + k) - x) / grid.dx;
            w[k + halo] = std::exp(-0.5 * d * d);
            wsum += w[k + halo];
        }
        const double scale = a.mass / (wsum * grid.dx);
        for (int k = -halo; k <= halo; ++k) f.values[ic + k] += scale * w[k + halo];
    }
    return f;
}

ImplicitDiffusion::ImplicitDiffusion(const Coefficients& c, const Grid1D& g, double dt) {
    const int n = g.n;
    std::vector<double> diag(n), upper(n);
    lower.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double r = dt * 0.5 * c.a1(g.node_x(i)) / (g.dx * g.dx);
        diag[i] = 1 + 2 * r;
        if (i == 0) {
            upper[0] = -2 * r;
        } else if (i == n - 1) {
            lower[i] = -2 * r;
        } else {
            lower[i] = -r;
            upper[i] = -r;
        }
    }
    cprime.assign(n, 0.0);
    denom.assign(n, 0.0);
    double d = diag[0];
    denom[0] = 1 / d;
    cprime[0] = upper[0] / d;
    for (int i = 1; i < n; ++i) {
        d = diag[i] - lower[i] * cprime[i - 1];
        denom[i] = 1 / d;
        if (i < n - 1) cprime[i] = upper[i] / d;
    }
}

void ImplicitDiffusion::solve(std::vector<double>& x) const {
    const int n = (int)x.size();
    x[0] *= denom[0];
    for (int i = 1; i < n; ++i) x[i] = (x[i] - lower[i] * x[i - 1]) * denom[i];
    for (int i = n - 2; i >= 0; --i) x[i] -= cprime[i] * x[i + 1];
}

void Tridiag::apply(const std::vector<double>& in, std::vector<double>& out) const {
    out.resize(n);
    for (int i = 0; i < n; ++i) {
        double s = diag[i] * in[i];
        if (i > 0) s += lower[i] * in[i - 1];
        if (i < n - 1) s += upper[i] * in[i + 1];
        out[i] = s;
    }
}

namespace {

// shared assembly: L-form coefficients (half_a, adv, zer) per node
Tridiag assemble(const Grid1D& g, const std::vector<double>& half_a,
                 const std::vector<double>& adv, const std::vector<double>& zer) {
    Tridiag T;
    T.n = g.n;
    T.lower.assign(g.n, 0.0);
    T.diag.assign(g.n, 0.0);
    T.upper.assign(g.n, 0.0);
    const double dx2 = g.dx * g.dx;
    for (int i = 1; i + 1 < g.n; ++i) {
        const double d2 = half_a[i] / dx2;
        const double d1 = adv[i] / (2 * g.dx);
        T.lower[i] = d2 - d1;
        T.diag[i] = -2 * d2 + zer[i];
        T.upper[i] = d2 + d1;
    }
    // boundary rows: second difference reuses the interior stencil shifted
    // nowhere (diffusion dropped to one-sided first derivative only keeps
    // the row tridiagonal); advection one-sided
    {
        const double d1 = adv[0] / g.dx;
        T.diag[0] = -d1 + zer[0] - 2 * half_a[0] / dx2;
        T.upper[0] = d1 + 2 * half_a[0] / dx2;
        const int m = g.n - 1;
        const double e1 = adv[m] / g.dx;
        T.diag[m] = e1 + zer[m] - 2 * half_a[m] / dx2;
        T.lower[m] = -e1 + 2 * half_a[m] / dx2;
    }
    return T;
}

}  // namespace

Tridiag discretize_L(const Coefficients& c, const Grid1D& grid) {
    if (c.dim != 1) throw UnsupportedCoefficients("grid operators are one-dimensional");
    std::vector<double> ha(grid.n), adv(grid.n), zer(grid.n, 0.0);
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.node_x(i);
        ha[i] = 0.5 * c.a1(x);
        adv[i] = c.b1(x);
    }
    return assemble(grid, ha, adv, zer);
}

Tridiag discretize_L_star(const Coefficients& c, const Grid1D& grid, double budget) {
    if (c.dim != 1) throw UnsupportedCoefficients("grid operators are one-dimensional");
    std::vector<double> ha(grid.n), adv(grid.n), zer(grid.n);
    double max_ap = 0;
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.node_x(i);
        const double ap = c.a1_prime(x);
        max_ap = std::max(max_ap, std::abs(ap));
        ha[i] = 0.5 * c.a1(x);
        adv[i] = ap - c.b1(x);
        zer[i] = 0.5 * c.a1_second(x) - c.b1_prime(x);
    }
    if (grid.dx * max_ap > budget)
        throw GridTooCoarse("dx too large for the advection induced by a'");
    return assemble(grid, ha, adv, zer);
}

}  // namespace flowproc
