#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowproc/snake.hpp"

using namespace flowproc;

TEST_CASE("lifetime walk construction") {
    CHECK_THROWS_AS(WalkGen(1, 1.0, -0.1), InvalidStep);
    CHECK_THROWS_AS(WalkGen(1, 0.0, 1e-3), InvalidStep);

    const LifetimeWalk w = make_lifetime_walk(11, 0.5, 1e-3, 1 << 20);
    REQUIRE(w.steps() > 10);
    CHECK(w.zeta[0] == 0.0);
    CHECK(w.ell0[0] == 0.0);
    double mz = 0;
    for (std::size_t k = 0; k < w.zeta.size(); ++k) {
        CHECK(w.zeta[k] >= 0.0);
        if (k) CHECK(w.ell0[k] >= w.ell0[k - 1]);
        mz = std::max(mz, w.zeta[k]);
    }
    CHECK(w.max_zeta == doctest::Approx(mz));
    REQUIRE(w.hit_budget);
    CHECK(w.ell0.back() == doctest::Approx(0.5));
    CHECK(w.zeta.back() == 0.0);

    // scratch reuse produces the identical walk
    LifetimeWalk scratch;
    generate_lifetime_walk(99, 1.0, 2e-3, 4096, scratch);
    const std::vector<double> first = scratch.zeta;
    generate_lifetime_walk(11, 0.5, 1e-3, 1 << 20, scratch);
    CHECK(scratch.zeta == w.zeta);
    CHECK(scratch.ell0 == w.ell0);
    generate_lifetime_walk(99, 1.0, 2e-3, 4096, scratch);
    CHECK(scratch.zeta == first);
}

TEST_CASE("budget hitting probability matches the reflection law") {
    // P(budget spent within walk time H) = 2 Phi(-budget / (2 sqrt(H)))
    const double ds = 4e-3, budget = 1.0;
    const int steps = 250, R = 5000;
    int hits = 0;
    LifetimeWalk w;
    for (int r = 0; r < R; ++r) {
        generate_lifetime_walk(replicate_seed(31, r), budget, ds, steps, w);
        hits += w.hit_budget ? 1 : 0;
    }
    const double p = (double)hits / R;
    const double exact = 2 * normal_cdf(-0.5);  // 0.6171
    CHECK(std::abs(p - exact) < 0.021);
}

TEST_CASE("streaming scan equals materialized scan") {
    const std::vector<double> levels{0.0, 0.2};
    const std::vector<double> hs{0.05, 0.1};
    for (int s = 0; s < 20; ++s) {
        const std::uint64_t seed = 1000 + 37 * (std::uint64_t)s;
        const auto a = excursions_above(seed, 1.0, 1e-3, 5000, levels, hs);
        const LifetimeWalk w = make_lifetime_walk(seed, 1.0, 1e-3, 5000);
        const auto b = scan_walk(w, levels, hs);
        CHECK(a == b);
    }
}

TEST_CASE("mean emitted mass is the budget at every level, monotone in h") {
    const double ds = 5e-4, budget = 1.0;
    const std::size_t max_steps = 800000;  // walk horizon 400
    const std::vector<double> levels{0.0, 0.3};
    const std::vector<double> hs{0.1, 0.2};
    const int R = 500;
    double s00 = 0, s01 = 0, s10 = 0, s11 = 0;
    for (int r = 0; r < R; ++r) {
        const auto c = excursions_above(replicate_seed(4242, r), budget, ds, max_steps,
                                        levels, hs);
        // single uniform per run close: the looser threshold can never win
        CHECK(c[0][0] >= c[0][1]);
        CHECK(c[1][0] >= c[1][1]);
        s00 += 2 * hs[0] * (double)c[0][0];
        s01 += 2 * hs[1] * (double)c[0][1];
        s10 += 2 * hs[0] * (double)c[1][0];
        s11 += 2 * hs[1] * (double)c[1][1];
    }
    CHECK(std::abs(s00 / R - 1.0) < 0.07);
    CHECK(std::abs(s01 / R - 1.0) < 0.10);
    CHECK(std::abs(s10 / R - 1.0) < 0.16);
    CHECK(std::abs(s11 / R - 1.0) < 0.17);
}

TEST_CASE("scanner argument guards") {
    CHECK_THROWS_AS(RunScanner(1, -0.1, 1e-3, {0.05}), OutOfRange);
    CHECK_THROWS_AS(RunScanner(1, 0.0, 1e-3, {}), InvalidStep);
    CHECK_THROWS_AS(RunScanner(1, 0.0, 1e-3, {0.05, -0.1}), InvalidStep);
}

TEST_CASE("spatial atoms ride the shared environment from their root atom") {
    const Coefficients c =
        make_constant_coefficients(1, {0.0}, {1.0}, {0.01}, 4e-5, 10.0);
    AtomicMeasure mu;
    mu.add1(-1.0, 0.6);
    mu.add1(1.0, 0.4);
    SnakeParams p;
    p.h = 0.05;
    p.ds = 1e-4;
    p.dr = 0.1 / 16;
    p.level = 0.1;
    p.max_steps = 200000;

    const std::uint64_t seed = 5150;
    const LifetimeWalk walk = make_lifetime_walk(seed, mu.total_mass, p.ds, p.max_steps);
    const std::size_t need = std::max<std::size_t>(required_env_steps(walk, p.dr), 16);
    const NoisePath w = make_noise_path(seed, p.dr, need);
    const SnakeRun run = snake_scan(walk, w, mu, c, p);

    REQUIRE(run.excursions > 2);
    CHECK(run.measure.atoms.size() == run.excursions);
    CHECK(run.measure.total_mass == doctest::Approx(0.1 * (double)run.excursions));
    const double shared = w.value_at(16);  // environment displacement up to the level
    int near_left = 0, near_right = 0;
    for (const Atom& a : run.measure.atoms) {
        const double dl = std::abs(a.pos[0] - (-1.0 + shared));
        const double dr_ = std::abs(a.pos[0] - (1.0 + shared));
        CHECK(std::min(dl, dr_) < 0.02);
        (dl < dr_ ? near_left : near_right) += 1;
    }
    CHECK(near_left + near_right == (int)run.measure.atoms.size());

    // the driver reproduces the same run from the seed alone
    const SnakeRun again = snake_measure(seed, mu, c, p);
    REQUIRE(again.measure.atoms.size() == run.measure.atoms.size());
    for (std::size_t i = 0; i < run.measure.atoms.size(); ++i)
        CHECK(again.measure.atoms[i].pos[0] == run.measure.atoms[i].pos[0]);
}

TEST_CASE("level zero atoms sit exactly on the root atoms") {
    const Coefficients c = make_constant_coefficients(1, {0.1}, {0.9}, {1.0}, 0.25, 10.0);
    AtomicMeasure mu;
    mu.add1(-1.0, 0.6);
    mu.add1(1.0, 0.4);
    SnakeParams p;
    p.h = 0.05;
    p.ds = 1e-4;
    p.dr = 1.0 / 64;
    p.level = 0.0;
    p.max_steps = 200000;
    const SnakeRun run = snake_measure(77, mu, c, p);
    REQUIRE(run.measure.atoms.size() > 4);
    int left = 0, right = 0;
    for (const Atom& a : run.measure.atoms) {
        const bool l = a.pos[0] == -1.0, r = a.pos[0] == 1.0;
        CHECK((l || r));
        left += l;
        right += r;
    }
    CHECK(left > 0);
    CHECK(right > 0);
}

TEST_CASE("spatial scan guards") {
    const Coefficients c = make_constant_coefficients(1, {0.0}, {1.0}, {1.0}, 0.25, 10.0);
    const AtomicMeasure mu = AtomicMeasure::dirac(0.0, 1.0);
    SnakeParams p;
    p.h = 0.05;
    p.ds = 1e-3;
    p.dr = 0.05;
    p.level = 0.1;
    p.max_steps = 50000;
    const LifetimeWalk walk = make_lifetime_walk(13, 1.0, p.ds, p.max_steps);
    REQUIRE(required_env_steps(walk, p.dr) > 2);

    const NoisePath short_w = make_noise_path(13, p.dr, 1);
    CHECK_THROWS_AS(snake_scan(walk, short_w, mu, c, p), InsufficientEnvironmentPath);

    const NoisePath w = make_noise_path(13, p.dr, required_env_steps(walk, p.dr));
    SnakeParams bad = p;
    bad.level = 0.07;  // not a multiple of dr
    CHECK_THROWS_AS(snake_scan(walk, w, mu, c, bad), InvalidStep);

    SnakeParams wrong_dr = p;
    wrong_dr.dr = 0.04;
    CHECK_THROWS_AS(snake_scan(walk, w, mu, c, wrong_dr), InvalidStep);

    AtomicMeasure mu2 = AtomicMeasure::dirac(0.0, 2.0);
    CHECK_THROWS_AS(snake_scan(walk, w, mu2, c, p), InvalidStep);

    AtomicMeasure mu_d2;
    mu_d2.dim = 2;
    mu_d2.add({0, 0, 0}, 1.0);
    CHECK_THROWS_AS(snake_scan(walk, w, mu_d2, c, p), UnsupportedCoefficients);
}

TEST_CASE("support diameter") {
    AtomicMeasure empty;
    CHECK(support_diameter(empty) == 0.0);
    CHECK(support_diameter(AtomicMeasure::dirac(4.2, 1.0)) == 0.0);
    AtomicMeasure line;
    line.add1(0.0, 1.0);
    line.add1(3.0, 0.5);
    line.add1(1.0, 0.25);
    CHECK(support_diameter(line) == doctest::Approx(3.0));
    AtomicMeasure plane;
    plane.dim = 2;
    plane.add({0, 0, 0}, 1.0);
    plane.add({3, 4, 0}, 1.0);
    CHECK(support_diameter(plane) == doctest::Approx(5.0));
}
