#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <vector>

#include "flowproc/model.hpp"
#include "flowproc/noise.hpp"
#include "flowproc/rng.hpp"

namespace flowproc {

// ---------------------------------------------------------------------------
// Single-path construction of the measure: one reflected random walk (the
// lifetime of an exploring branch) encodes a whole population. Excursions of
// the lifetime above level t that climb at least h further each contribute
// one atom of mass 2h at level t; the walk runs until the accumulated local
// time at zero spends the initial mass, so E[2h N_t] = mu(R) at every level.
//
// The walk is a Lindley recursion zeta_k = B_k - min B with N(0, ds) steps.
// Three sub-grid effects are restored with Brownian bridge corrections, all
// fed from counter-indexed auxiliary streams so the scan is reproducible and
// identical between the streaming and the materialized drivers:
//   - the budget barrier for B (stops the walk mid-step),
//   - dips of an excursion below its level between grid points (run splits),
//   - excursion maxima crossing level + h between grid points (emission).
// One uniform per run close decides emission for every threshold h at once,
// which makes the emitted count monotone in h by construction.
// ---------------------------------------------------------------------------

struct LifetimeWalk {
    std::uint64_t seed = 0;
    double ds = 0;
    double budget = 0;
    bool hit_budget = false;
    double max_zeta = 0;
    std::vector<double> zeta;  // steps + 1 values, zeta[0] = 0
    std::vector<double> ell0;  // running local time at zero, -2 min B

    std::size_t steps() const { return zeta.empty() ? 0 : zeta.size() - 1; }
};

// Step generator shared by the streaming and materializing drivers. After
// advance(): z0/z1 hold zeta across the step just taken, k counts completed
// steps, ell the local time so far. advance() returns false once the budget
// barrier has stopped the walk (that final step is still valid, with z1 = 0).
struct WalkGen {
    double ds = 0, budget = 0, beta = 0, sqds = 0;
    double b = 0, runmin = 0;
    double z0 = 0, z1 = 0, ell = 0;
    std::size_t k = 0;
    bool stopped = false;
    Rng walk, barrier;

    WalkGen(std::uint64_t seed, double budget_, double ds_);
    bool advance();
};

void generate_lifetime_walk(std::uint64_t seed, double budget, double ds,
                            std::size_t max_steps, LifetimeWalk& out);
LifetimeWalk make_lifetime_walk(std::uint64_t seed, double budget, double ds,
                                std::size_t max_steps);

// environment path length needed to hang spatial motion on this walk
std::size_t required_env_steps(const LifetimeWalk& w, double dr);

// Excursion state machine at one observation level. Both count-only scans
// and the spatial scan drive this same object, so their counts agree exactly.
struct RunScanner {
    double level = 0, ds = 0;
    std::vector<double> hs;
    Rng aux;
    bool capture = false;
    int dim = 1;

    bool in_run = false;
    std::vector<double> qno;  // P(excursion max stayed below level + h so far)
    std::array<double, 3> open_pos{0, 0, 0};
    std::vector<std::size_t> counts;
    std::vector<Atom> atoms;  // emitted atoms for hs[0] when capturing

    RunScanner(std::uint64_t walk_seed, double level_, double ds_, std::vector<double> hs_,
               bool capture_ = false, int dim_ = 1);
    // step k took the lifetime from z0 to z1; pos points at the frozen spine
    // position at this level (may be null when not capturing)
    void feed(std::size_t k, double z0, double z1, const double* pos);
    // horizon truncation: resolve a still-open run at step index end_step
    void finish(std::size_t end_step);

  private:
    void open(const double* pos);
    void close(std::size_t k);
};

// Streaming mass-only scan: counts[i][j] = emitted excursions at levels[i]
// with climb threshold hs[j]. Never materializes the walk.
std::vector<std::vector<std::size_t>> excursions_above(std::uint64_t seed, double budget,
                                                       double ds, std::size_t max_steps,
                                                       const std::vector<double>& levels,
                                                       const std::vector<double>& hs);

// Same scan driven from a materialized walk; bit-identical to the above.
std::vector<std::vector<std::size_t>> scan_walk(const LifetimeWalk& w,
                                                const std::vector<double>& levels,
                                                const std::vector<double>& hs);

struct SnakeParams {
    double h = 0;           // climb threshold, atom mass 2h
    double ds = 0;          // lifetime walk step
    double dr = 0;          // spine level grid, must match the environment dt
    double level = 0;       // observation level, must align with dr
    std::size_t max_steps = 0;
};

struct SnakeRun {
    AtomicMeasure measure;
    std::size_t excursions = 0;
    bool hit_budget = false;
    std::size_t walk_steps = 0;
};

// Spatial scan: walks the spine over the level grid (shared environment
// increment per level, fresh private noise per push) and collects the atoms
// emitted at p.level. Throws InsufficientEnvironmentPath when w is shorter
// than required_env_steps(walk, p.dr).
SnakeRun snake_scan(const LifetimeWalk& walk, const NoisePath& w, const AtomicMeasure& mu,
                    const Coefficients& c, const SnakeParams& p);

// Driver: generates the walk (optionally into a reused scratch buffer) and a
// sufficient environment path from the same seed, then scans.
SnakeRun snake_measure(std::uint64_t seed, const AtomicMeasure& mu, const Coefficients& c,
                       const SnakeParams& p, LifetimeWalk* scratch = nullptr);

// largest pairwise atom distance, 0 for at most one atom
double support_diameter(const AtomicMeasure& m);

}  // namespace flowproc
