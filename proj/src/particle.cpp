#include "flowproc/particle.hpp"

#include <cmath>

namespace flowproc {

namespace {

double exp_at(const Rng& r, std::uint64_t index, double mean) {
    return -mean * std::log(u01_from_bits(r.at(index)));
}

Particle make_particle(const ParticleSystem& s, const std::array<double, 3>& pos) {
    Particle p;
    p.pos = pos;
    p.rng = Rng::keyed(s.seed, stream::particle | s.next_id);
    p.ttl = exp_at(p.rng, CTR_LIFE, 2 * s.h);
    return p;
}

}  // namespace

AtomicMeasure ParticleSystem::measure() const {
    AtomicMeasure m;
    m.dim = dim;
    m.atoms.reserve(parts.size());
    const double pm = particle_mass();
    for (const Particle& p : parts) m.add(p.pos, pm);
    return m;
}

ParticleSystem init_particles(std::uint64_t seed, const AtomicMeasure& mu, double h, int dim) {
    if (!(h > 0)) throw InvalidStep("particle mass scale h must be positive");
    if (mu.dim != dim) throw UnsupportedCoefficients("measure dimension mismatch");
    if (mu.atoms.empty() || !(mu.total_mass > 0))
        throw UnsupportedCoefficients("initial measure must carry mass");
    ParticleSystem s;
    s.seed = seed;
    s.dim = dim;
    s.h = h;
    Rng r = Rng::keyed(seed, stream::init);
    const std::uint64_t n = r.poisson(mu.total_mass / (2 * h));
    if (n > s.max_particles) throw PopulationExplosion("initial population exceeds the cap");
    s.parts.reserve(n + n / 2);
    for (std::uint64_t i = 0; i < n; ++i) {
        // pick a source atom with probability proportional to its mass
        double u = r.u01() * mu.total_mass;
        std::size_t k = 0;
        while (k + 1 < mu.atoms.size() && u > mu.atoms[k].mass) {
            u -= mu.atoms[k].mass;
            ++k;
        }
        s.parts.push_back(make_particle(s, mu.atoms[k].pos));
        ++s.next_id;
    }
    return s;
}

void step_particles(ParticleSystem& s, const Coefficients& c, const NoisePath& w,
                    int step_index) {
    if (c.dim != s.dim || w.dim != s.dim)
        throw UnsupportedCoefficients("dimension mismatch between system, model and path");
    if ((std::size_t)step_index >= w.steps)
        throw InsufficientEnvironmentPath("environment path too short for this step");
    if (w.dt > s.h / 10 * (1 + 1e-12))
        throw StepTooLarge("dt must not exceed h / 10, deaths are resolved per step");
    const double dt = w.dt;
    const double sq = std::sqrt(dt);
    const double* dw = &w.increments[(std::size_t)step_index * s.dim];
    const int d = s.dim;

    std::size_t alive = 0;
    std::vector<std::array<double, 3>> births;
    for (std::size_t i = 0; i < s.parts.size(); ++i) {
        Particle p = s.parts[i];
        if (c.constant()) {
            double xi[3];
            for (int j = 0; j < d; ++j) xi[j] = p.rng.gauss();
            for (int r = 0; r < d; ++r) {
                double env = 0, priv = 0;
                for (int j = 0; j < d; ++j) {
                    env += c.sigma1_const[r * d + j] * dw[j];
                    priv += c.sigma2_const[r * d + j] * xi[j];
                }
                p.pos[r] += c.b_const[r] * dt + env + priv * sq;
            }
        } else {
            const double x = p.pos[0];
            p.pos[0] += c.b1(x) * dt + c.s1(x) * dw[0] + c.s2(x) * p.rng.gauss() * sq;
        }
        p.ttl -= dt;
        if (p.ttl > 0) {
            s.parts[alive++] = p;
        } else if ((p.rng.at(CTR_COIN) & 1ull) != 0) {
            births.push_back(p.pos);
            births.push_back(p.pos);
        }
    }
    s.parts.resize(alive);
    for (const auto& pos : births) {
        s.parts.push_back(make_particle(s, pos));
        ++s.next_id;
    }
    if (s.parts.size() > s.max_particles)
        throw PopulationExplosion("population exceeds the configured cap");
    s.time += dt;
}

ParticleRun run_particles(std::uint64_t seed, const AtomicMeasure& mu, const Coefficients& c,
                          double h, const NoisePath& w, int steps, bool keep_trace) {
    if (steps < 0 || (std::size_t)steps > w.steps)
        throw InsufficientEnvironmentPath("environment path shorter than the requested horizon");
    ParticleRun run;
    run.final_state = init_particles(seed, mu, h, c.dim);
    if (keep_trace) {
        run.mass_trace.reserve(steps + 1);
        run.mass_trace.push_back(run.final_state.total_mass());
    }
    for (int k = 0; k < steps; ++k) {
        step_particles(run.final_state, c, w, k);
        if (keep_trace) run.mass_trace.push_back(run.final_state.total_mass());
    }
    return run;
}

}  // namespace flowproc
