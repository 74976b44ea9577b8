#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowproc/field.hpp"
#include "flowproc/model.hpp"

using namespace flowproc;

namespace {

Coefficients std_coeffs(double b = 0.0, double s1 = 1.0, double s2 = 1.0) {
    return make_constant_coefficients(1, {b}, {s1}, {s2}, 0.25 * s2 * s2, 10.0);
}

Coefficients wavy_coeffs() {
    return make_parametric_coefficients({0.1, 0.05, 1.3}, {0.8, 0.1, 0.7}, {1.0, 0.1, 0.9},
                                        0.4, 2.0);
}

template <class F>
double trapz(F&& f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < n; ++i) s += f(lo + i * h);
    return s * h;
}

}  // namespace

TEST_CASE("coefficient validation") {
    CHECK_NOTHROW(std_coeffs());
    CHECK_NOTHROW(wavy_coeffs());
    // sigma2 too small for the requested floor
    CHECK_THROWS_AS(make_constant_coefficients(1, {0}, {1}, {0.1}, 0.25, 10.0),
                    EllipticityViolation);
    // drift exceeds K
    CHECK_THROWS_AS(make_constant_coefficients(1, {100}, {1}, {1}, 0.25, 10.0), BoundViolation);
    // parametric second difference quotient amp*freq^2 = 0.05*36 = 1.8 > K = 1
    CHECK_THROWS_AS(make_parametric_coefficients({0, 0.05, 6.0}, {0, 0, 0}, {1, 0, 0}, 0.4, 1.0),
                    BoundViolation);
    // sigma2 dips to 0.5 somewhere, 0.25 < 2*delta = 0.8
    CHECK_THROWS_AS(make_parametric_coefficients({0, 0, 0}, {1, 0, 0}, {1.0, 0.5, 0.9}, 0.4, 3.0),
                    EllipticityViolation);
    CHECK_THROWS_AS(make_constant_coefficients(4, {0, 0, 0, 0}, {}, {}, 0.25, 1.0),
                    UnsupportedCoefficients);

    const Coefficients w = wavy_coeffs();
    CHECK(w.a1(0.3) == doctest::Approx(w.s1(0.3) * w.s1(0.3) + w.s2(0.3) * w.s2(0.3)));
    // a' and a'' against central differences of a
    const double h = 1e-5, x = 0.7;
    CHECK(w.a1_prime(x) == doctest::Approx((w.a1(x + h) - w.a1(x - h)) / (2 * h)).epsilon(1e-5));
    CHECK(w.a1_second(x) ==
          doctest::Approx((w.a1(x + h) - 2 * w.a1(x) + w.a1(x - h)) / (h * h)).epsilon(1e-4));
}

TEST_CASE("gaussian kernel") {
    CHECK_THROWS_AS(gaussian_kernel(0.0, 1.0), NonpositiveTime);
    CHECK(gaussian_kernel(1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2 * M_PI)));
    CHECK(gaussian_kernel(0.5, 0.3) == gaussian_kernel(0.5, -0.3));
    const double m = trapz([](double x) { return gaussian_kernel(0.7, x); }, -12, 12, 4000);
    CHECK(m == doctest::Approx(1.0).epsilon(1e-8));
    const double xy[2] = {0.4, -0.2};
    CHECK(gaussian_kernel(0.9, xy, 2) ==
          doctest::Approx(gaussian_kernel(0.9, 0.4) * gaussian_kernel(0.9, -0.2)));
}

TEST_CASE("one-particle transition density") {
    const Coefficients c = std_coeffs(0.3, 0.6, 0.8);
    const double a = 0.36 + 0.64;
    // closed form: N(x + b t, a t)
    const double t = 0.7, x = -0.2, y = 0.5;
    const double z = y - x - 0.3 * t;
    CHECK(transition_p0(c, t, x, y) ==
          doctest::Approx(std::exp(-z * z / (2 * a * t)) / std::sqrt(2 * M_PI * a * t)));
    CHECK_THROWS_AS(transition_p0(c, -1.0, x, y), NonpositiveTime);

    // Chapman-Kolmogorov across an intermediate trapezoid integral
    const double lhs = trapz(
        [&](double u) { return transition_p0(c, 0.3, x, u) * transition_p0(c, 0.4, u, y); },
        -14, 14, 8000);
    CHECK(lhs == doctest::Approx(transition_p0(c, 0.7, x, y)).epsilon(1e-7));

    // 2-d diagonal case factorizes
    const Coefficients c2 = make_constant_coefficients(
        2, {0.1, -0.2}, {0.5, 0, 0, 0.5}, {1, 0, 0, 1}, 0.25, 10.0);
    const double from[2] = {0, 0.3}, to[2] = {0.4, -0.1};
    const Coefficients m0 = std_coeffs(0.1, 0.5, 1.0);
    const Coefficients m1 = std_coeffs(-0.2, 0.5, 1.0);
    CHECK(transition_p0(c2, 0.6, from, to) ==
          doctest::Approx(transition_p0(m0, 0.6, 0.0, 0.4) * transition_p0(m1, 0.6, 0.3, -0.1)));
}

TEST_CASE("two-particle joint transition density") {
    const Coefficients c = std_coeffs(0.2, 0.7, 0.9);
    // exchanging both particles in source and target leaves q0 unchanged
    CHECK(pair_transition_q0(c, 0.5, 0.1, -0.4, 0.6, 0.2) ==
          doctest::Approx(pair_transition_q0(c, 0.5, -0.4, 0.1, 0.2, 0.6)));
    // integrating out the second particle recovers p0 for the first
    const double marg = trapz(
        [&](double y2) { return pair_transition_q0(c, 0.5, 0.1, -0.4, 0.6, y2); }, -14, 14, 8000);
    CHECK(marg == doctest::Approx(transition_p0(c, 0.5, 0.1, 0.6)).epsilon(1e-7));
    // with sigma1 = 0 the pair decouples into a product
    const Coefficients ind = std_coeffs(0.2, 0.0, 0.9);
    CHECK(pair_transition_q0(ind, 0.5, 0.1, -0.4, 0.6, 0.2) ==
          doctest::Approx(transition_p0(ind, 0.5, 0.1, 0.6) * transition_p0(ind, 0.5, -0.4, 0.2)));
    // shared environment pushes the pair together: q0 at equal targets beats
    // the independent product when sigma1 > 0
    CHECK(pair_transition_q0(c, 0.5, 0.0, 0.0, 0.3, 0.3) >
          transition_p0(c, 0.5, 0.0, 0.3) * transition_p0(c, 0.5, 0.0, 0.3));
}

TEST_CASE("atomic measures") {
    AtomicMeasure mu = AtomicMeasure::dirac(0.5, 2.0);
    mu.add1(-1.0, 0.25);
    mu.add1(3.0, 0.75);
    CHECK(mu.total_mass == doctest::Approx(3.0));
    CHECK(mu.recompute_mass() == doctest::Approx(mu.total_mass));
    CHECK(mu.integrate1([](double) { return 1.0; }) == doctest::Approx(3.0));
    CHECK(mu.integrate1([](double x) { return x; }) ==
          doctest::Approx(2.0 * 0.5 - 0.25 + 3 * 0.75));
    CHECK(mu.tempered_mass(1.0) < mu.total_mass);
    CHECK(mu.tempered_mass(0.0) == doctest::Approx(mu.total_mass));
}

TEST_CASE("grid basics") {
    const Grid1D g = make_grid(-2.0, 2.0, 0.25);
    CHECK(g.n == 16);
    CHECK(g.node_x(0) == doctest::Approx(-1.875));
    CHECK(g.node_x(15) == doctest::Approx(1.875));
    CHECK(g.cell_of(-1.99) == 0);
    CHECK(g.cell_of(0.0) == 8);
    CHECK(g.cell_of(2.1) == -1);
    CHECK(g.cell_of(-2.1) == -1);
    CHECK_THROWS_AS(make_grid(0, 1, -0.1), GridTooCoarse);
    CHECK_THROWS_AS(make_grid(0, 1, 0.3), GridTooCoarse);
}

TEST_CASE("field initialization from atoms") {
    const Grid1D g = make_grid(-4, 4, 0.02);
    AtomicMeasure mu;
    mu.add1(0.013, 1.5);
    mu.add1(-1.2, 0.5);
    const DensityField f = init_field(mu, g);
    CHECK(f.mass() == doctest::Approx(2.0).epsilon(1e-12));
    for (double v : f.values) CHECK(v >= 0.0);
    // center of mass matches the atoms
    const double com = f.integrate([](double x) { return x; }) / f.mass();
    CHECK(com == doctest::Approx((1.5 * 0.013 - 0.5 * 1.2) / 2.0).epsilon(1e-6));
    AtomicMeasure edge;
    edge.add1(3.95, 1.0);
    CHECK_THROWS_AS(init_field(edge, g), SupportOutsideGrid);

    // interpolation agrees with node values and clamps beyond the edges
    CHECK(f.value_at(g.node_x(100)) == doctest::Approx(f.values[100]));
    CHECK(f.value_at(-10) == doctest::Approx(f.values.front()));
    CHECK(f.value_at(10) == doctest::Approx(f.values.back()));
}

TEST_CASE("grid operators") {
    const Grid1D g = make_grid(-6, 6, 0.01);
    const Coefficients c = std_coeffs(0.3, 1.0, 1.0);  // a = 2
    const Tridiag L = discretize_L(c, g);
    std::vector<double> sq(g.n), lin(g.n), one(g.n, 1.0), out;
    for (int i = 0; i < g.n; ++i) {
        sq[i] = g.node_x(i) * g.node_x(i);
        lin[i] = g.node_x(i);
    }
    L.apply(sq, out);
    const int mid = g.n / 2;
    CHECK(out[mid] == doctest::Approx(2.0 + 2 * 0.3 * g.node_x(mid)).epsilon(1e-9));
    L.apply(lin, out);
    CHECK(out[mid] == doctest::Approx(0.3).epsilon(1e-9));
    L.apply(one, out);
    CHECK(out[mid] == doctest::Approx(0.0));

    // constant coefficients: L* is L with the drift sign flipped
    const Tridiag Ls = discretize_L_star(c, g);
    Ls.apply(lin, out);
    CHECK(out[mid] == doctest::Approx(-0.3).epsilon(1e-9));
    Ls.apply(one, out);
    CHECK(out[mid] == doctest::Approx(0.0));
}

TEST_CASE("adjoint identity on smooth bumps") {
    const Grid1D g = make_grid(-6, 6, 0.01);
    const Coefficients c = wavy_coeffs();
    const Tridiag L = discretize_L(c, g);
    const Tridiag Ls = discretize_L_star(c, g);
    std::vector<double> f(g.n), h(g.n), Lf, Lsh;
    for (int i = 0; i < g.n; ++i) {
        const double x = g.node_x(i);
        f[i] = std::exp(-(x - 1) * (x - 1) / 0.5);
        h[i] = std::exp(-(x + 1) * (x + 1) / 0.5);
    }
    L.apply(f, Lf);
    Ls.apply(h, Lsh);
    double A = 0, B = 0;
    for (int i = 0; i < g.n; ++i) {
        A += Lf[i] * h[i];
        B += f[i] * Lsh[i];
    }
    A *= g.dx;
    B *= g.dx;
    // defect measured at 3.5e-6 relative for this setup, O(dx^2)
    CHECK(std::abs(A - B) <= 1e-4 * std::max(std::abs(A), std::abs(B)));
}

TEST_CASE("resolution budget for adjoint advection") {
    // a' has amplitude ~ 2*1*0.5*8 = 8; dx = 0.05 gives dx*max|a'| ~ 0.4 > 0.1
    const Coefficients c =
        make_parametric_coefficients({0, 0, 0}, {1.0, 0.5, 8.0}, {1.5, 0, 0}, 0.4, 40.0);
    const Grid1D coarse = make_grid(-6, 6, 0.05);
    CHECK_THROWS_AS(discretize_L_star(c, coarse), GridTooCoarse);
    const Grid1D fine = make_grid(-6, 6, 0.01);
    CHECK_NOTHROW(discretize_L_star(c, fine));
    // the forward operator needs no a' and takes the coarse grid
    CHECK_NOTHROW(discretize_L(c, coarse));
}
