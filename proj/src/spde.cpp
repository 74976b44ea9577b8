#include "flowproc/spde.hpp"

#include <cmath>

namespace flowproc {

void sweep_nonneg(std::vector<double>& u) {
    double carry = 0;
    for (double& v : u) {
        v += carry;
        carry = 0;
        if (v < 0) {
            carry = v;
            v = 0;
        }
    }
    if (carry < 0) {
        for (auto it = u.rbegin(); it != u.rend() && carry < 0; ++it) {
            *it += carry;
            carry = 0;
            if (*it < 0) {
                carry = *it;
                *it = 0;
            }
        }
    }
}

namespace {

void check_health(const std::vector<double>& u, const Grid1D& g, double leak_fraction) {
    double total = 0, edge = 0;
    for (int i = 0; i < g.n; ++i) {
        if (!std::isfinite(u[i])) throw NonfiniteValue("density field went nonfinite");
        total += u[i];
    }
    for (int i = 0; i < 4 && i < g.n; ++i) edge += u[i] + u[g.n - 1 - i];
    if (total > 0 && edge > leak_fraction * total)
        throw BoundaryLeak("mass reached the grid boundary");
}

}  // namespace

SpdeRun run_spde(const DensityField& init, const Coefficients& c, const NoisePath& w,
                 const SheetSource& sheet, int steps, const SpdeOptions& opt,
                 bool keep_trace) {
    const Grid1D& g = init.grid;
    if (c.dim != 1 || w.dim != 1) throw UnsupportedCoefficients("density solver is one-dimensional");
    if (steps < 0 || (std::size_t)steps > w.steps || (std::size_t)steps > sheet.steps)
        throw InsufficientEnvironmentPath("noise shorter than the requested horizon");
    const double dt = w.dt;
    if (std::abs(sheet.dt - dt) > 1e-15 || std::abs(sheet.dx - g.dx) > 1e-15 ||
        sheet.cells != (std::size_t)g.n)
        throw InvalidStep("sheet source does not match the grid and step");
    double max_a = 0;
    for (int i = 0; i < g.n; ++i) max_a = std::max(max_a, c.a1(g.node_x(i)));
    if (dt > g.dx * g.dx / (2 * max_a) * (1 + 1e-9))
        throw StabilityViolation("dt exceeds dx^2 / (2 max a)");

    // explicit part of the adjoint generator: subtract the second-order
    // stencil (handled implicitly) from the full adjoint rows
    Tridiag expl = discretize_L_star(c, g);
    {
        const double dx2 = g.dx * g.dx;
        for (int i = 0; i < g.n; ++i) {
            const double r = 0.5 * c.a1(g.node_x(i)) / dx2;
            if (i == 0) {
                expl.diag[0] -= -2 * r;
                expl.upper[0] -= 2 * r;
            } else if (i == g.n - 1) {
                expl.diag[i] -= -2 * r;
                expl.lower[i] -= 2 * r;
            } else {
                expl.lower[i] -= r;
                expl.diag[i] -= -2 * r;
                expl.upper[i] -= r;
            }
        }
    }
    const ImplicitDiffusion imp(c, g, dt);

    std::vector<double> s1(g.n);
    for (int i = 0; i < g.n; ++i) s1[i] = c.s1(g.node_x(i));

    for (std::size_t i = 0; i < opt.snapshot_steps.size(); ++i) {
        const long s = opt.snapshot_steps[i];
        if (s < 0 || s > steps) throw OutOfRange("snapshot step outside the run");
        if (i > 0 && s <= opt.snapshot_steps[i - 1])
            throw InvalidStep("snapshot steps must increase");
    }

    SpdeRun run;
    run.field = init;
    std::vector<double>& u = run.field.values;
    if (keep_trace) {
        run.mass_trace.reserve(steps + 1);
        run.mass_trace.push_back(run.field.mass());
    }
    std::size_t next_snap = 0;
    if (next_snap < opt.snapshot_steps.size() && opt.snapshot_steps[next_snap] == 0) {
        run.snapshots.push_back(u);
        ++next_snap;
    }
    std::vector<double> lu(g.n), flux(g.n + 1);
    const double feller_cut = opt.feller_factor * dt / g.dx;

    for (int k = 0; k < steps; ++k) {
        // 1. generator
        expl.apply(u, lu);
        for (int i = 0; i < g.n; ++i) u[i] += dt * lu[i];
        imp.solve(u);

        // 2. environment transport, conservative interface fluxes
        const double dw = w.inc(k);
        flux[0] = 0;
        flux[g.n] = 0;
        for (int i = 1; i < g.n; ++i) flux[i] = 0.5 * (s1[i - 1] * u[i - 1] + s1[i] * u[i]);
        const double scale = dw / g.dx;
        for (int i = 0; i < g.n; ++i) u[i] -= scale * (flux[i + 1] - flux[i]);

        // 3. project back onto nonnegative densities
        sweep_nonneg(u);

        // 4. branching noise
        if (!sheet.zeroed) {
            for (int i = 0; i < g.n; ++i) {
                const double v = u[i];
                if (v <= 0.0) continue;
                if (v < feller_cut) {
                    const double m = v * g.dx;
                    Rng r = sheet.site_rng(stream::feller, (std::size_t)k, (std::size_t)i);
                    const std::uint64_t fam = r.poisson(2 * m / dt);
                    u[i] = fam == 0 ? 0.0 : r.gamma((double)fam, dt / 2) / g.dx;
                } else {
                    const double nv = v + std::sqrt(v) * sheet.sample((std::size_t)k,
                                                                      (std::size_t)i) / g.dx;
                    u[i] = nv < 0 ? 0.0 : nv;
                }
            }
        }

        if (keep_trace) run.mass_trace.push_back(run.field.mass());
        if (next_snap < opt.snapshot_steps.size() && opt.snapshot_steps[next_snap] == k + 1) {
            run.snapshots.push_back(u);
            ++next_snap;
        }
        if ((k + 1) % opt.monitor_every == 0) check_health(u, g, opt.leak_fraction);
    }
    check_health(u, g, opt.leak_fraction);
    return run;
}

}  // namespace flowproc
