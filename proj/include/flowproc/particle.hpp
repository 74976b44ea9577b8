#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "flowproc/model.hpp"
#include "flowproc/noise.hpp"
#include "flowproc/rng.hpp"

namespace flowproc {

// Branching particle system. Every particle carries mass 2h, moves by
// Euler-Maruyama under the shared environment increments plus its own
// private noise, and dies at an Exponential(mean 2h) age; at death a fair
// coin replaces it with 0 or 2 particles at its location. With this scaling
// the total mass is a critical process whose variance grows like t per unit
// initial mass.
struct Particle {
    std::array<double, 3> pos{0, 0, 0};
    double ttl = 0;  // remaining lifetime
    Rng rng;         // private stream, keyed by the particle id
};

struct ParticleSystem {
    std::uint64_t seed = 0;
    int dim = 1;
    double h = 0;
    double time = 0;
    std::uint64_t next_id = 0;
    std::vector<Particle> parts;
    std::size_t max_particles = std::size_t(1) << 22;

    double particle_mass() const { return 2 * h; }
    double total_mass() const { return particle_mass() * (double)parts.size(); }
    AtomicMeasure measure() const;
};

// Poissonized start: N ~ Poisson(mu.total_mass / (2h)) particles, positions
// drawn from mu normalized, each with a fresh lifetime from its own stream.
ParticleSystem init_particles(std::uint64_t seed, const AtomicMeasure& mu, double h, int dim);

// Advance one Euler step of size w.dt using environment increments at
// step_index. Deaths are resolved at the end of the step they fall in.
void step_particles(ParticleSystem& s, const Coefficients& c, const NoisePath& w, int step_index);

struct ParticleRun {
    ParticleSystem final_state;
    std::vector<double> mass_trace;  // total mass after each step, front() = initial
};

// Drive the system from mu to time horizon steps*w.dt. Throws
// InsufficientEnvironmentPath when the path is shorter than `steps`.
ParticleRun run_particles(std::uint64_t seed, const AtomicMeasure& mu, const Coefficients& c,
                          double h, const NoisePath& w, int steps, bool keep_trace = false);

}  // namespace flowproc
