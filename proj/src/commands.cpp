#include "flowproc/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "flowproc/analysis.hpp"
#include "flowproc/dual.hpp"
#include "flowproc/field.hpp"
#include "flowproc/loglaplace.hpp"
#include "flowproc/parallel.hpp"
#include "flowproc/particle.hpp"
#include "flowproc/report.hpp"
#include "flowproc/rng.hpp"
#include "flowproc/snake.hpp"
#include "flowproc/spde.hpp"

namespace flowproc {

namespace {

using nlohmann::json;

double need(const std::optional<double>& v, const char* key) {
    if (!v) throw ConfigError(std::string("numerics.") + key + " is required for this command");
    return *v;
}

// number of steps covering t_final exactly
long steps_from(double t_final, double dt) {
    if (!(dt > 0)) throw ConfigError("numerics.dt must be positive");
    if (!(t_final > 0)) throw ConfigError("numerics.t_final must be positive");
    const long steps = std::llround(t_final / dt);
    if (steps < 1 || std::abs((double)steps * dt - t_final) > 1e-9 * std::max(1.0, t_final))
        throw ConfigError("numerics.t_final must be a whole number of dt steps");
    return steps;
}

void ensure_dir(const std::string& dir) {
    if (dir.empty()) throw ConfigError("output.dir must not be empty");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir);
}

// summary fragment for a replicate column; single replicates get the bare mean
json stat_json(const std::vector<double>& v) {
    if (v.size() < 2) return {{"mean", v.empty() ? 0.0 : v[0]}, {"n", (long)v.size()}};
    const McSummary s = mc_summary(v);
    return {{"mean", s.mean},   {"variance", s.variance}, {"std_error", s.std_error},
            {"lo99", s.lo},     {"hi99", s.hi},           {"n", s.n}};
}

const AtomicMeasure& need_initial(const ExperimentConfig& cfg) {
    if (cfg.initial.atoms.empty())
        throw ConfigError("initial: at least one atom is required for this command");
    return cfg.initial;
}

// ---------------------------------------------------------------- particles

void cmd_particles(const ExperimentConfig& cfg, json& summary) {
    const Coefficients& c = cfg.model;
    const AtomicMeasure& mu = need_initial(cfg);
    const double dt = need(cfg.numerics.dt, "dt");
    const double h = need(cfg.numerics.h, "h");
    const double t = need(cfg.numerics.t_final, "t_final");
    const long steps = steps_from(t, dt);
    const long reps = cfg.mc.replicates;
    const bool want_fn = cfg.functional.has_value();

    std::vector<double> mass(reps), fval(want_fn ? reps : 0);
    parallel_for(reps, [&](long r) {
        const std::uint64_t sr = replicate_seed(cfg.mc.seed, (std::uint64_t)r);
        const NoisePath w = make_noise_path(sr, dt, (std::size_t)steps, c.dim);
        ParticleSystem sys = init_particles(sr, mu, h, c.dim);
        if (cfg.numerics.population_cap)
            sys.max_particles = (std::size_t)std::max<long>(*cfg.numerics.population_cap, 1);
        for (long k = 0; k < steps; ++k) step_particles(sys, c, w, (int)k);
        mass[r] = sys.total_mass();
        if (want_fn) {
            double s = 0;
            for (const Particle& p : sys.parts) s += cfg.functional->eval(p.pos[0]);
            fval[r] = s * sys.particle_mass();
        }
    });

    Table tab;
    tab.header = {"replicate", "t", "total_mass"};
    if (want_fn) tab.header.push_back("functional");
    for (long r = 0; r < reps; ++r) {
        std::vector<double> row{(double)r, t, mass[r]};
        if (want_fn) row.push_back(fval[r]);
        tab.rows.push_back(std::move(row));
    }
    ensure_dir(cfg.output.dir);
    write_csv(cfg.output.dir + "/particles.csv", tab);
    summary["total_mass"] = stat_json(mass);
    if (want_fn) summary["functional"] = stat_json(fval);
}

// -------------------------------------------------------------------- snake

void cmd_snake(const ExperimentConfig& cfg, json& summary) {
    const Coefficients& c = cfg.model;
    const AtomicMeasure& mu = need_initial(cfg);
    const double ds = need(cfg.numerics.ds, "ds");
    const double h = need(cfg.numerics.h, "h");
    const double dr = need(cfg.numerics.dr, "dr");
    const double horizon = need(cfg.numerics.horizon, "horizon");
    if (!(ds > 0) || !(horizon > 0)) throw ConfigError("numerics.ds and horizon must be positive");
    const std::size_t max_steps = (std::size_t)std::llround(std::ceil(horizon / ds));
    std::vector<double> levels = cfg.numerics.levels;
    if (levels.empty()) levels = {0.0};
    for (double lv : levels) {
        if (lv < 0) throw ConfigError("numerics.levels must be nonnegative");
        const double k = lv / dr;
        if (std::abs(k - std::llround(k)) > 1e-9)
            throw ConfigError("numerics.levels must sit on the dr grid");
    }
    const long reps = cfg.mc.replicates;
    const long nl = (long)levels.size();

    struct Slot {
        double excursions = 0, mass = 0, diameter = 0;
        std::vector<Atom> atoms;
    };
    std::vector<Slot> slots(reps * nl);
    std::vector<double> hit(reps);
    parallel_for(reps, [&](long r) {
        const std::uint64_t sr = replicate_seed(cfg.mc.seed, (std::uint64_t)r);
        LifetimeWalk walk;
        generate_lifetime_walk(sr, mu.total_mass, ds, max_steps, walk);
        const std::size_t env = std::max<std::size_t>(required_env_steps(walk, dr), 1);
        const NoisePath w = make_noise_path(sr, dr, env, c.dim);
        hit[r] = walk.hit_budget ? 1.0 : 0.0;
        for (long li = 0; li < nl; ++li) {
            const SnakeParams p{h, ds, dr, levels[li], max_steps};
            SnakeRun run = snake_scan(walk, w, mu, c, p);
            Slot& s = slots[r * nl + li];
            s.excursions = (double)run.excursions;
            s.mass = run.measure.total_mass;
            s.diameter = support_diameter(run.measure);
            if (cfg.output.atoms) s.atoms = std::move(run.measure.atoms);
        }
    });

    Table tab;
    tab.header = {"replicate", "level", "excursions", "mass", "diameter"};
    Table atoms;
    atoms.header = {"replicate", "level", "x", "y", "z", "mass"};
    for (long r = 0; r < reps; ++r)
        for (long li = 0; li < nl; ++li) {
            const Slot& s = slots[r * nl + li];
            tab.rows.push_back({(double)r, levels[li], s.excursions, s.mass, s.diameter});
            for (const Atom& a : s.atoms)
                atoms.rows.push_back({(double)r, levels[li], a.pos[0], a.pos[1], a.pos[2], a.mass});
        }
    ensure_dir(cfg.output.dir);
    write_csv(cfg.output.dir + "/snake.csv", tab);
    if (cfg.output.atoms) write_csv(cfg.output.dir + "/atoms.csv", atoms);

    json per_level = json::array();
    for (long li = 0; li < nl; ++li) {
        std::vector<double> m(reps), ex(reps);
        for (long r = 0; r < reps; ++r) {
            m[r] = slots[r * nl + li].mass;
            ex[r] = slots[r * nl + li].excursions;
        }
        per_level.push_back(
            {{"level", levels[li]}, {"mass", stat_json(m)}, {"excursions", stat_json(ex)}});
    }
    summary["levels"] = per_level;
    summary["hit_budget_fraction"] = stat_json(hit)["mean"];
}

// --------------------------------------------------------------------- spde

void cmd_spde(const ExperimentConfig& cfg, json& summary) {
    const Coefficients& c = cfg.model;
    const AtomicMeasure& mu = need_initial(cfg);
    const double dx = need(cfg.numerics.dx, "dx");
    const double dt = need(cfg.numerics.dt, "dt");
    const double t = need(cfg.numerics.t_final, "t_final");
    const Grid1D g = make_grid(need(cfg.numerics.x_min, "x_min"),
                               need(cfg.numerics.x_max, "x_max"), dx);
    const DensityField u0 = init_field(mu, g);
    const long steps = steps_from(t, dt);
    const long reps = cfg.mc.replicates;

    SpdeOptions opt;
    for (double ts : cfg.numerics.snapshot_times) {
        const long k = std::llround(ts / dt);
        if (std::abs((double)k * dt - ts) > 1e-9 * std::max(1.0, std::abs(ts)) || k < 0 ||
            k > steps)
            throw ConfigError("numerics.snapshot_times must be dt multiples inside [0, t_final]");
        opt.snapshot_steps.push_back(k);
    }
    std::sort(opt.snapshot_steps.begin(), opt.snapshot_steps.end());
    opt.snapshot_steps.erase(
        std::unique(opt.snapshot_steps.begin(), opt.snapshot_steps.end()),
        opt.snapshot_steps.end());

    std::vector<double> final_mass(reps);
    std::vector<std::vector<double>> first_snaps;
    std::vector<std::vector<double>> traces(cfg.output.series ? reps : 0);
    parallel_for(reps, [&](long r) {
        const std::uint64_t sr = replicate_seed(cfg.mc.seed, (std::uint64_t)r);
        const NoisePath w = make_noise_path(sr, dt, (std::size_t)steps, 1);
        const SheetSource sheet =
            make_sheet_source(sr, dt, dx, (std::size_t)steps, (std::size_t)g.n);
        SpdeRun run = run_spde(u0, c, w, sheet, (int)steps, opt, cfg.output.series);
        final_mass[r] = run.field.mass();
        if (r == 0) first_snaps = std::move(run.snapshots);
        if (cfg.output.series) traces[r] = std::move(run.mass_trace);
    });

    Table masses;
    masses.header = {"replicate", "t", "mass"};
    for (long r = 0; r < reps; ++r) masses.rows.push_back({(double)r, t, final_mass[r]});

    // field dump for the first replicate, one block per requested time
    Table snaps;
    snaps.header = {"t", "x", "value"};
    for (std::size_t si = 0; si < first_snaps.size(); ++si) {
        const double ts = (double)opt.snapshot_steps[si] * dt;
        for (int i = 0; i < g.n; ++i)
            snaps.rows.push_back({ts, g.node_x(i), first_snaps[si][i]});
    }

    ensure_dir(cfg.output.dir);
    write_csv(cfg.output.dir + "/masses.csv", masses);
    if (!opt.snapshot_steps.empty()) write_csv(cfg.output.dir + "/snapshots.csv", snaps);
    if (cfg.output.series) {
        Table series;
        series.header = {"replicate", "step", "t", "mass"};
        for (long r = 0; r < reps; ++r)
            for (std::size_t k = 0; k < traces[r].size(); ++k)
                series.rows.push_back({(double)r, (double)k, (double)k * dt, traces[r][k]});
        write_csv(cfg.output.dir + "/series.csv", series);
    }
    summary["final_mass"] = stat_json(final_mass);
    summary["initial_mass"] = u0.mass();
}

// --------------------------------------------------------------- loglaplace

void cmd_loglaplace(const ExperimentConfig& cfg, json& summary) {
    const Coefficients& c = cfg.model;
    const AtomicMeasure& mu = need_initial(cfg);
    const double dx = need(cfg.numerics.dx, "dx");
    const double dt = need(cfg.numerics.dt, "dt");
    const double t = need(cfg.numerics.t_final, "t_final");
    const Grid1D g = make_grid(need(cfg.numerics.x_min, "x_min"),
                               need(cfg.numerics.x_max, "x_max"), dx);
    const long steps = steps_from(t, dt);
    const long reps = cfg.mc.replicates;

    std::vector<double> terminal(g.n);
    for (int i = 0; i < g.n; ++i) terminal[i] = cfg.terminal.eval(g.node_x(i));

    std::vector<double> lap(reps);
    std::vector<double> y0_first;
    parallel_for(reps, [&](long r) {
        const std::uint64_t sr = replicate_seed(cfg.mc.seed, (std::uint64_t)r);
        const NoisePath w = make_noise_path(sr, dt, (std::size_t)steps, 1);
        const BackwardSolution sol = solve_backward(g, terminal, c, w, (int)steps);
        lap[r] = conditional_laplace(sol, mu);
        if (r == 0) y0_first = sol.y0;
    });

    Table tab;
    tab.header = {"replicate", "laplace"};
    for (long r = 0; r < reps; ++r) tab.rows.push_back({(double)r, lap[r]});
    Table y0;
    y0.header = {"x", "y0"};
    for (int i = 0; i < g.n; ++i) y0.rows.push_back({g.node_x(i), y0_first[i]});

    ensure_dir(cfg.output.dir);
    write_csv(cfg.output.dir + "/laplace.csv", tab);
    write_csv(cfg.output.dir + "/y0.csv", y0);
    summary["laplace"] = stat_json(lap);
}

// ------------------------------------------------------------------ duality

void cmd_duality(const ExperimentConfig& cfg, json& summary) {
    const Coefficients& c = cfg.model;
    const AtomicMeasure& mu = need_initial(cfg);
    const DualitySpec& d = cfg.duality;
    if (d.arity < 1 || d.arity > 4) throw ConfigError("duality.arity must be 1..4");
    if (d.t < 0) throw ConfigError("duality.t must be nonnegative");
    const Grid1D g = make_grid(d.grid.x_min, d.grid.x_max, d.grid.dx);
    const long reps = cfg.mc.replicates;

    std::vector<double> axis(g.n);
    for (int i = 0; i < g.n; ++i) axis[i] = d.f.eval(g.node_x(i));
    const std::vector<std::vector<double>> fns((std::size_t)d.arity, axis);

    const DualEstimate est = dual_moment(cfg.mc.seed, mu, c, g, fns, d.t, reps);

    const DataFnSpec spec_f = d.f;
    const std::function<double(double)> f = [spec_f](double x) { return spec_f.eval(x); };
    double exact_one = std::numeric_limits<double>::quiet_NaN();
    double exact_two = exact_one;
    if (d.arity == 1) {
        exact_one = exact_first_moment(mu, c, f, d.t);
        exact_two = exact_one;
    } else if (d.arity == 2) {
        const SecondMoments m = exact_second_moments(mu, c, f, f, d.t);
        exact_one = m.variance_rate_one;
        exact_two = m.variance_rate_two;
    }

    Table tab;
    tab.header = {"arity", "t", "replicates", "estimate", "std_error", "exact_rate_one",
                  "exact_rate_two"};
    tab.rows.push_back({(double)d.arity, d.t, (double)est.replicates, est.mean, est.std_error,
                        exact_one, exact_two});
    ensure_dir(cfg.output.dir);
    write_csv(cfg.output.dir + "/duality.csv", tab);
    summary["estimate"] = est.mean;
    summary["std_error"] = est.std_error;
    summary["exact_rate_one"] = exact_one;
    summary["exact_rate_two"] = exact_two;
}

// --------------------------------------------------------------- verify-all

struct Check {
    std::string name;
    double value = 0, target = 0, lo = 0, hi = 0;
    bool passed = false;
};

Check make_check(std::string name, double value, double target, double half_width) {
    Check c;
    c.name = std::move(name);
    c.value = value;
    c.target = target;
    c.lo = target - half_width;
    c.hi = target + half_width;
    c.passed = std::isfinite(value) && value >= c.lo && value <= c.hi;
    return c;
}

std::string cmd_verify(const ExperimentConfig& cfg, json& summary) {
    const std::uint64_t seed = cfg.mc.seed;
    const double tau = cfg.mc.tolerance_sigma;
    if (!(tau > 0)) throw ConfigError("mc.tolerance_sigma must be positive");
    const long reps = std::max<long>(cfg.mc.replicates, 8);
    auto sub = [seed](std::uint64_t i) { return replicate_seed(seed, 9000 + i); };
    std::vector<Check> checks;

    const Coefficients cs = make_constant_coefficients(1, {0.0}, {1.0}, {1.0}, 0.25, 10.0);
    const AtomicMeasure delta0 = AtomicMeasure::dirac(0.0, 1.0);

    {  // environment increments carry variance dt per component
        const std::size_t n = 20000;
        const double dt = 0.01;
        const NoisePath w = make_noise_path(sub(0), dt, n, 1);
        double m2 = 0;
        for (std::size_t k = 0; k < n; ++k) m2 += w.increments[k] * w.increments[k];
        m2 /= (double)n;
        checks.push_back(
            make_check("noise_increment_variance", m2, dt, tau * dt * std::sqrt(2.0 / n)));
    }
    {  // branching sheet cells carry variance dt * dx
        const double dt = 0.02, dx = 0.1;
        const std::size_t steps = 500, cells = 200;
        const SheetSource sheet = make_sheet_source(sub(1), dt, dx, steps, cells);
        double m2 = 0;
        for (std::size_t k = 0; k < steps; ++k)
            for (std::size_t i = 0; i < cells; ++i) {
                const double v = sheet.sample(k, i);
                m2 += v * v;
            }
        const double n = (double)(steps * cells);
        m2 /= n;
        checks.push_back(make_check("sheet_cell_variance", m2, dt * dx,
                                    tau * dt * dx * std::sqrt(2.0 / n)));
    }
    {  // identical seeds reproduce bitwise across drivers
        const NoisePath w = make_noise_path(sub(2), 0.005, 100, 1);
        const ParticleRun a = run_particles(sub(2), delta0, cs, 0.05, w, 100);
        const ParticleRun b = run_particles(sub(2), delta0, cs, 0.05, w, 100);
        bool same = a.final_state.total_mass() == b.final_state.total_mass() &&
                    a.final_state.parts.size() == b.final_state.parts.size();
        for (std::size_t i = 0; same && i < a.final_state.parts.size(); ++i)
            same = a.final_state.parts[i].pos == b.final_state.parts[i].pos;
        const NoisePath w2 = make_noise_path(sub(2), 0.005, 100, 1);
        same = same && w.increments == w2.increments;
        checks.push_back(make_check("determinism_rerun", same ? 1.0 : 0.0, 1.0, 0.0));
    }
    {  // streaming and materialized lifetime scans agree exactly
        const std::vector<double> lv{0.0, 0.1}, hs{0.05};
        const auto streamed = excursions_above(sub(3), 1.0, 1e-3, 20000, lv, hs);
        const LifetimeWalk walk = make_lifetime_walk(sub(3), 1.0, 1e-3, 20000);
        const auto scanned = scan_walk(walk, lv, hs);
        checks.push_back(
            make_check("snake_scan_consistency", streamed == scanned ? 1.0 : 0.0, 1.0, 0.0));
    }
    std::vector<double> pmass(reps);
    {  // critical branching keeps the mean mass at the initial mass
        const double h = 0.02, dt = 2e-3, t = 0.5;
        const long steps = std::llround(t / dt);
        parallel_for(reps, [&](long r) {
            const std::uint64_t sr = replicate_seed(sub(4), (std::uint64_t)r);
            const NoisePath w = make_noise_path(sr, dt, (std::size_t)steps, 1);
            pmass[r] = run_particles(sr, delta0, cs, h, w, (int)steps).final_state.total_mass();
        });
        const McSummary s = mc_summary(pmass);
        checks.push_back(make_check("particle_mean_mass", s.mean, 1.0, tau * s.std_error));
        // Poissonized start adds 2h to the t variance slope
        const double vt = 0.5 + 2 * h;
        checks.push_back(make_check("particle_mass_variance", s.variance, vt, 0.1 * tau * vt));
    }
    {  // lifetime excursion counts price the initial mass at level zero
        const double h = 0.05, ds = 5e-4;
        const std::size_t max_steps = 400000;  // walk horizon 200, small truncation bias
        const long rs = std::min<long>(reps, 200);
        std::vector<double> smass(rs);
        parallel_for(rs, [&](long r) {
            const std::uint64_t sr = replicate_seed(sub(5), (std::uint64_t)r);
            const auto counts = excursions_above(sr, 1.0, ds, max_steps, {0.0}, {h});
            smass[r] = 2 * h * (double)counts[0][0];
        });
        const McSummary s = mc_summary(smass);
        checks.push_back(
            make_check("snake_mass_level_zero", s.mean, 1.0, tau * s.std_error + 0.02));
    }
    {  // frozen-environment Laplace solution against the exact quadratic decay
        const Coefficients cq = make_constant_coefficients(1, {0.0}, {0.0}, {1.0}, 0.25, 10.0);
        const Grid1D g = make_grid(-2.0, 2.0, 0.05);
        const NoisePath w = zero_noise_path(1e-3, 1000);
        const BackwardSolution sol = solve_backward(g, std::vector<double>(g.n, 1.0), cq, w, 1000);
        const double target = std::exp(-2.0 / 3.0);
        checks.push_back(make_check("riccati_backward", conditional_laplace(sol, delta0), target,
                                    0.02 * (tau / 3.0) * target));
    }
    {  // merge chain with constant data reduces to the pure pair weight
        const Grid1D g = make_grid(-8.0, 8.0, 0.25);
        const std::vector<std::vector<double>> fns(2, std::vector<double>(g.n, 1.0));
        const DualEstimate est =
            dual_moment(sub(6), delta0, cs, g, fns, 1.0, std::max<long>(800, reps));
        checks.push_back(make_check("dual_constant_mass", est.mean, 2.0, tau * est.std_error));
    }
    {  // density solver keeps the mean mass critical under both noises
        const Coefficients cd = make_constant_coefficients(1, {0.0}, {0.6}, {0.8}, 0.25, 10.0);
        const Grid1D g = make_grid(-3.0, 3.0, 0.05);
        const DensityField u0 = init_field(delta0, g);
        const double dt = 1e-3, t = 0.3;
        const long steps = std::llround(t / dt);
        const long rs = std::min<long>(reps, 120);
        std::vector<double> fmass(rs);
        parallel_for(rs, [&](long r) {
            const std::uint64_t sr = replicate_seed(sub(7), (std::uint64_t)r);
            const NoisePath w = make_noise_path(sr, dt, (std::size_t)steps, 1);
            const SheetSource sheet = make_sheet_source(sr, dt, 0.05, (std::size_t)steps,
                                                        (std::size_t)g.n);
            fmass[r] = run_spde(u0, cd, w, sheet, (int)steps).field.mass();
        });
        const McSummary s = mc_summary(fmass);
        checks.push_back(make_check("spde_mean_mass", s.mean, 1.0, tau * s.std_error));
    }

    std::string body = "name,value,target,lo,hi,passed\n";
    json jchecks = json::array();
    long failed = 0;
    for (const Check& c : checks) {
        body += c.name + "," + format_full(c.value) + "," + format_full(c.target) + "," +
                format_full(c.lo) + "," + format_full(c.hi) + "," + (c.passed ? "1" : "0") + "\n";
        jchecks.push_back({{"name", c.name},
                           {"value", c.value},
                           {"target", c.target},
                           {"lo", c.lo},
                           {"hi", c.hi},
                           {"passed", c.passed}});
        if (!c.passed) ++failed;
    }
    ensure_dir(cfg.output.dir);
    write_text_atomic(cfg.output.dir + "/checks.csv", body);
    summary["checks"] = jchecks;
    summary["all_passed"] = failed == 0;
    if (failed == 0) return {};
    return std::to_string(failed) + " of " + std::to_string(checks.size()) +
           " verification checks failed";
}

}  // namespace

void run_experiment(const std::string& command, const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.mc.replicates < 1) throw ConfigError("mc.replicates must be positive");

    json summary;
    summary["schema_version"] = 1;
    summary["command"] = command;
    summary["seed"] = cfg.mc.seed;
    summary["replicate_seed_rule"] = "mix64(seed xor mix64(replicate_stream | index))";
    summary["config"] = json::parse(resolved_config_json(cfg));

    std::string failure;
    if (command == "particles")
        cmd_particles(cfg, summary);
    else if (command == "snake")
        cmd_snake(cfg, summary);
    else if (command == "spde")
        cmd_spde(cfg, summary);
    else if (command == "loglaplace")
        cmd_loglaplace(cfg, summary);
    else if (command == "duality")
        cmd_duality(cfg, summary);
    else if (command == "verify-all")
        failure = cmd_verify(cfg, summary);
    else
        throw ConfigError("unknown command " + command);

    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - t0;
    summary["wall_seconds"] = wall.count();
    write_text_atomic(cfg.output.dir + "/summary.json", summary.dump(2) + "\n");
    if (!failure.empty()) throw CheckFailure(failure);
}

}  // namespace flowproc
