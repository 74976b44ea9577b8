#include "flowproc/snake.hpp"

#include <algorithm>
#include <cmath>

namespace flowproc {

namespace {

constexpr double EXP_SKIP = -30.0;  // exp() below this is dead against a 53-bit uniform
constexpr std::uint64_t ENTITY_MASK = (1ull << 56) - 1;

std::uint64_t level_entity(double level) {
    return mix64(std::bit_cast<std::uint64_t>(level)) & ENTITY_MASK;
}

}  // namespace

WalkGen::WalkGen(std::uint64_t seed, double budget_, double ds_) {
    if (!(ds_ > 0)) throw InvalidStep("walk step ds must be positive");
    if (!(budget_ > 0)) throw InvalidStep("walk budget must be positive");
    ds = ds_;
    budget = budget_;
    beta = -0.5 * budget;
    sqds = std::sqrt(ds);
    walk = Rng::keyed(seed, stream::lifetime_walk);
    barrier = Rng::keyed(seed, stream::excursion_aux | level_entity(beta));
}

bool WalkGen::advance() {
    z0 = z1;
    const double b_next = b + walk.gauss() * sqds;
    bool hit = b_next <= beta;
    if (!hit) {
        // sub-grid dip of B below the barrier
        const double e = -2 * (b - beta) * (b_next - beta) / ds;
        if (e > EXP_SKIP && u01_from_bits(barrier.at(2 * k)) < std::exp(e)) hit = true;
    }
    if (hit) {
        // the budget is spent mid-step; the walk ends exactly at lifetime zero
        runmin = beta;
        ell = budget;
        b = beta;
        z1 = 0.0;
        stopped = true;
        ++k;
        return false;
    }
    b = b_next;
    if (b < runmin) runmin = b;
    z1 = b - runmin;
    ell = -2 * runmin;
    ++k;
    return true;
}

void generate_lifetime_walk(std::uint64_t seed, double budget, double ds,
                            std::size_t max_steps, LifetimeWalk& out) {
    WalkGen g(seed, budget, ds);
    out.seed = seed;
    out.ds = ds;
    out.budget = budget;
    out.hit_budget = false;
    out.max_zeta = 0;
    out.zeta.clear();
    out.ell0.clear();
    out.zeta.reserve(max_steps + 1);
    out.ell0.reserve(max_steps + 1);
    out.zeta.push_back(0.0);
    out.ell0.push_back(0.0);
    while (g.k < max_steps) {
        const bool more = g.advance();
        out.zeta.push_back(g.z1);
        out.ell0.push_back(g.ell);
        if (g.z1 > out.max_zeta) out.max_zeta = g.z1;
        if (!more) {
            out.hit_budget = true;
            break;
        }
    }
}

LifetimeWalk make_lifetime_walk(std::uint64_t seed, double budget, double ds,
                                std::size_t max_steps) {
    LifetimeWalk w;
    generate_lifetime_walk(seed, budget, ds, max_steps, w);
    return w;
}

std::size_t required_env_steps(const LifetimeWalk& w, double dr) {
    if (!(dr > 0)) throw InvalidStep("spine grid dr must be positive");
    return (std::size_t)std::floor(w.max_zeta / dr + 1e-12);
}

RunScanner::RunScanner(std::uint64_t walk_seed, double level_, double ds_,
                       std::vector<double> hs_, bool capture_, int dim_)
    : level(level_), ds(ds_), hs(std::move(hs_)), capture(capture_), dim(dim_) {
    if (level < 0) throw OutOfRange("observation level must be nonnegative");
    if (hs.empty()) throw InvalidStep("at least one climb threshold required");
    for (double h : hs)
        if (!(h > 0)) throw InvalidStep("climb thresholds must be positive");
    aux = Rng::keyed(walk_seed, stream::excursion_aux | level_entity(level));
    qno.assign(hs.size(), 1.0);
    counts.assign(hs.size(), 0);
}

void RunScanner::open(const double* pos) {
    in_run = true;
    std::fill(qno.begin(), qno.end(), 1.0);
    if (capture && pos != nullptr)
        for (int c = 0; c < dim; ++c) open_pos[c] = pos[c];
}

void RunScanner::close(std::size_t k) {
    const double u = u01_from_bits(aux.at(2 * k + 1));
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const bool emit = qno[i] == 0.0 || u > qno[i];
        if (!emit) continue;
        ++counts[i];
        if (i == 0 && capture) atoms.push_back(Atom{open_pos, 2 * hs[0]});
    }
}

void RunScanner::feed(std::size_t k, double z0, double z1, const double* pos) {
    if (!in_run) {
        if (z1 <= level) return;
        open(pos);
    }
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if (qno[i] == 0.0) continue;
        const double c = level + hs[i];
        if (z0 >= c || z1 >= c) {
            qno[i] = 0.0;
        } else {
            const double e = -2 * (c - z0) * (c - z1) / ds;
            if (e > EXP_SKIP) qno[i] *= 1.0 - std::exp(e);
        }
    }
    if (z1 <= level) {
        close(k);
        in_run = false;
        return;
    }
    if (z0 > level) {
        // sub-grid dip below the level splits the run in two
        const double e = -2 * (z0 - level) * (z1 - level) / ds;
        if (e > EXP_SKIP && u01_from_bits(aux.at(2 * k)) < std::exp(e)) {
            close(k);
            std::fill(qno.begin(), qno.end(), 1.0);  // reopen at the same spot
        }
    }
}

void RunScanner::finish(std::size_t end_step) {
    if (!in_run) return;
    close(end_step);
    in_run = false;
}

std::vector<std::vector<std::size_t>> excursions_above(std::uint64_t seed, double budget,
                                                       double ds, std::size_t max_steps,
                                                       const std::vector<double>& levels,
                                                       const std::vector<double>& hs) {
    WalkGen g(seed, budget, ds);
    std::vector<RunScanner> scanners;
    scanners.reserve(levels.size());
    for (double t : levels) scanners.emplace_back(seed, t, ds, hs);
    while (g.k < max_steps) {
        const bool more = g.advance();
        for (RunScanner& sc : scanners) sc.feed(g.k - 1, g.z0, g.z1, nullptr);
        if (!more) break;
    }
    std::vector<std::vector<std::size_t>> out;
    out.reserve(scanners.size());
    for (RunScanner& sc : scanners) {
        sc.finish(g.k);
        out.push_back(sc.counts);
    }
    return out;
}

std::vector<std::vector<std::size_t>> scan_walk(const LifetimeWalk& w,
                                                const std::vector<double>& levels,
                                                const std::vector<double>& hs) {
    std::vector<std::vector<std::size_t>> out;
    out.reserve(levels.size());
    for (double t : levels) {
        RunScanner sc(w.seed, t, w.ds, hs);
        for (std::size_t k = 0; k + 1 < w.zeta.size(); ++k)
            sc.feed(k, w.zeta[k], w.zeta[k + 1], nullptr);
        sc.finish(w.steps());
        out.push_back(sc.counts);
    }
    return out;
}

SnakeRun snake_scan(const LifetimeWalk& walk, const NoisePath& w, const AtomicMeasure& mu,
                    const Coefficients& c, const SnakeParams& p) {
    const int d = c.dim;
    if (mu.dim != d || w.dim != d)
        throw UnsupportedCoefficients("dimension mismatch between measure, model and path");
    if (mu.atoms.empty() || !(mu.total_mass > 0))
        throw UnsupportedCoefficients("initial measure must carry mass");
    if (std::abs(walk.budget - mu.total_mass) > 1e-9 * mu.total_mass)
        throw InvalidStep("walk budget must equal the initial total mass");
    if (!(p.dr > 0) || std::abs(w.dt - p.dr) > 1e-12)
        throw InvalidStep("environment path dt must equal the spine grid dr");
    const long j_t = std::lround(p.level / p.dr);
    if (j_t < 0 || std::abs(j_t * p.dr - p.level) > 1e-9 * std::max(1.0, p.level))
        throw InvalidStep("observation level must sit on the spine grid");
    const std::size_t need = required_env_steps(walk, p.dr);
    if (w.steps < need)
        throw InsufficientEnvironmentPath("environment path shorter than the spine needs");

    // atom boundaries in local time: root of an excursion = atom owning the
    // local-time coordinate where it starts
    std::vector<double> cum(mu.atoms.size());
    double acc = 0;
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        acc += mu.atoms[i].mass;
        cum[i] = acc;
    }
    std::size_t root_idx = 0;

    std::vector<std::array<double, 3>> spine(need + 1);
    spine[0] = mu.atoms[0].pos;
    int top = 0;
    std::uint64_t push_count = 0;
    const Rng branch = Rng::keyed(walk.seed, stream::branch);
    const double sqdr = std::sqrt(p.dr);

    RunScanner sc(walk.seed, p.level, walk.ds, {p.h}, true, d);

    for (std::size_t k = 0; k + 1 < walk.zeta.size(); ++k) {
        const double z0 = walk.zeta[k], z1 = walk.zeta[k + 1];
        if (z1 == 0.0) {
            // at a zero of the lifetime the local time moves; resync the root
            while (root_idx + 1 < cum.size() && walk.ell0[k + 1] >= cum[root_idx])
                ++root_idx;
            spine[0] = mu.atoms[root_idx].pos;
        }
        const int target = (int)std::floor(z1 / p.dr + 1e-12);
        while (top > target) --top;
        while (top < target) {
            const std::array<double, 3>& at = spine[top];
            std::array<double, 3> nxt{0, 0, 0};
            double xi[3];
            for (int r = 0; r < d; ++r)
                xi[r] = branch.gauss_at(push_count * (std::uint64_t)d + (std::uint64_t)r);
            if (c.constant()) {
                for (int r = 0; r < d; ++r) {
                    double env = 0, priv = 0;
                    for (int j = 0; j < d; ++j) {
                        env += c.sigma1_const[r * d + j] * w.inc(top, j);
                        priv += c.sigma2_const[r * d + j] * xi[j];
                    }
                    nxt[r] = at[r] + c.b_const[r] * p.dr + env + priv * sqdr;
                }
            } else {
                const double x = at[0];
                nxt[0] = x + c.b1(x) * p.dr + c.s1(x) * w.inc(top, 0) + c.s2(x) * xi[0] * sqdr;
            }
            ++push_count;
            ++top;
            spine[top] = nxt;
        }
        sc.feed(k, z0, z1, top >= j_t ? spine[j_t].data() : nullptr);
    }
    sc.finish(walk.steps());

    SnakeRun run;
    run.measure.dim = d;
    for (const Atom& a : sc.atoms) run.measure.add(a.pos, a.mass);
    run.excursions = sc.counts[0];
    run.hit_budget = walk.hit_budget;
    run.walk_steps = walk.steps();
    return run;
}

SnakeRun snake_measure(std::uint64_t seed, const AtomicMeasure& mu, const Coefficients& c,
                       const SnakeParams& p, LifetimeWalk* scratch) {
    LifetimeWalk local;
    LifetimeWalk& walk = scratch ? *scratch : local;
    generate_lifetime_walk(seed, mu.total_mass, p.ds, p.max_steps, walk);
    const NoisePath w = make_noise_path(seed, p.dr, std::max<std::size_t>(
                                             required_env_steps(walk, p.dr), 1), c.dim);
    return snake_scan(walk, w, mu, c, p);
}

double support_diameter(const AtomicMeasure& m) {
    double best = 0;
    for (std::size_t i = 0; i < m.atoms.size(); ++i)
        for (std::size_t j = i + 1; j < m.atoms.size(); ++j) {
            double d2 = 0;
            for (int k = 0; k < m.dim; ++k) {
                const double d = m.atoms[i].pos[(std::size_t)k] - m.atoms[j].pos[(std::size_t)k];
                d2 += d * d;
            }
            best = std::max(best, d2);
        }
    return std::sqrt(best);
}

}  // namespace flowproc
