#include "flowproc/noise.hpp"

#include <cmath>

namespace flowproc {

NoisePath make_noise_path(std::uint64_t seed, double dt, std::size_t steps, int dim) {
    if (!(dt > 0.0)) throw InvalidStep("noise path needs dt > 0");
    if (steps < 1) throw InvalidStep("noise path needs steps >= 1");
    if (dim < 1) throw InvalidStep("noise path needs dim >= 1");
    NoisePath w;
    w.seed = seed;
    w.dt = dt;
    w.steps = steps;
    w.dim = dim;
    w.increments.resize(steps * std::size_t(dim));
    Rng r = Rng::keyed(seed, stream::environment);
    const double sd = std::sqrt(dt);
    for (std::size_t i = 0; i < w.increments.size(); ++i) {
        w.increments[i] = sd * inverse_normal_cdf(u01_from_bits(r.at(i)));
    }
    return w;
}

NoisePath zero_noise_path(double dt, std::size_t steps, int dim) {
    if (!(dt > 0.0)) throw InvalidStep("noise path needs dt > 0");
    NoisePath w;
    w.dt = dt;
    w.steps = steps;
    w.dim = dim;
    w.increments.assign(steps * std::size_t(dim), 0.0);
    return w;
}

SheetSource make_sheet_source(std::uint64_t seed, double dt, double dx,
                              std::size_t steps, std::size_t cells) {
    if (!(dt > 0.0) || !(dx > 0.0)) throw InvalidStep("sheet needs dt > 0 and dx > 0");
    SheetSource s;
    s.seed = seed;
    s.dt = dt;
    s.dx = dx;
    s.steps = steps;
    s.cells = cells;
    s.key = stream_key(seed, stream::sheet);
    s.sd = std::sqrt(dt * dx);
    return s;
}

SheetSource zero_sheet_source(double dt, double dx, std::size_t steps, std::size_t cells) {
    SheetSource s = make_sheet_source(0, dt, dx, steps, cells);
    s.zeroed = true;
    return s;
}

}  // namespace flowproc
