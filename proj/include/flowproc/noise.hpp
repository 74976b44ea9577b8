#pragma once

#include <cstdint>
#include <vector>

#include "flowproc/errors.hpp"
#include "flowproc/rng.hpp"

namespace flowproc {

// A realized discretized environment path W. Increments are materialized once
// (stream::environment of the owning seed) so that every consumer of the same
// realization - forward particle systems, the density solver, the backward
// solver - sees identical numbers. Draw k, coordinate c sits at counter
// k*dim + c, so the path is also reproducible piecewise.
struct NoisePath {
    std::uint64_t seed = 0;
    double dt = 0;
    std::size_t steps = 0;
    int dim = 1;
    std::vector<double> increments;  // steps * dim, step-major

    double inc(std::size_t step, int coord = 0) const {
        if (step >= steps) throw OutOfRange("noise path step");
        return increments[step * dim + coord];
    }
    double sum(int coord = 0) const {
        double s = 0;
        for (std::size_t k = 0; k < steps; ++k) s += increments[k * dim + coord];
        return s;
    }
    // W at grid time index k (W(0) = 0), one coordinate
    double value_at(std::size_t k, int coord = 0) const {
        double s = 0;
        for (std::size_t j = 0; j < k; ++j) s += increments[j * dim + coord];
        return s;
    }
};

NoisePath make_noise_path(std::uint64_t seed, double dt, std::size_t steps, int dim = 1);
NoisePath zero_noise_path(double dt, std::size_t steps, int dim = 1);

// Reversed traversal of the same increments. The backward solver pairs
// increment k (covering [k dt, (k+1) dt]) with the integrand at the upper
// time level, which is exactly the backward-sum convention.
struct BackwardView {
    const NoisePath* path;
    double inc(std::size_t k, int coord = 0) const {
        return path->inc(path->steps - 1 - k, coord);
    }
    std::size_t steps() const { return path->steps; }
};

inline BackwardView backward_view(const NoisePath& w) { return BackwardView{&w}; }

// Space-time noise on a (step, cell) lattice. Nothing is materialized: each
// sample is a pure function of (seed, step, cell), Gaussian with variance
// dt*dx, independent across lattice sites, and stable under query order.
struct SheetSource {
    std::uint64_t seed = 0;
    double dt = 0;
    double dx = 0;
    std::size_t steps = 0;
    std::size_t cells = 0;
    bool zeroed = false;
    std::uint64_t key = 0;  // stream::sheet of seed
    double sd = 0;          // sqrt(dt*dx)

    double sample(std::size_t step, std::size_t cell) const {
        if (step >= steps || cell >= cells) throw OutOfRange("sheet sample index");
        if (zeroed) return 0.0;
        const std::uint64_t idx = step * cells + cell;
        return sd * inverse_normal_cdf(u01_from_bits(mix64(key + (idx + 1) * GOLDEN64)));
    }

    // Sub-stream for transitions that need several draws per (step, cell),
    // independent of sample() at the same site.
    Rng site_rng(std::uint64_t salt, std::size_t step, std::size_t cell) const {
        return Rng{mix64(key ^ mix64(salt) ^ mix64(step * cells + cell + 1)), 0};
    }
};

SheetSource make_sheet_source(std::uint64_t seed, double dt, double dx,
                              std::size_t steps, std::size_t cells);
SheetSource zero_sheet_source(double dt, double dx, std::size_t steps, std::size_t cells);

}  // namespace flowproc
