#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "flowproc/errors.hpp"

namespace flowproc {

enum class CoeffKind { constant, parametric_smooth };

// One scalar coefficient component: value(x) = offset + amp * sin(freq * x).
// amp = 0 is the constant case. The family is smooth and bounded with
// closed-form derivatives, which is what the validation and the adjoint
// operator need; nothing here differentiates symbolically.
struct ScalarFn {
    double offset = 0;
    double amp = 0;
    double freq = 0;
    double operator()(double x) const { return amp == 0 ? offset : offset + amp * std::sin(freq * x); }
    double d1(double x) const { return amp == 0 ? 0.0 : amp * freq * std::cos(freq * x); }
    double d2(double x) const { return amp == 0 ? 0.0 : -amp * freq * freq * std::sin(freq * x); }
    bool is_constant() const { return amp == 0; }
};

// Model functions b, sigma1, sigma2 with the validated bounds. Immutable
// after construction; safe for unrestricted concurrent reads.
struct Coefficients {
    int dim = 1;
    CoeffKind kind = CoeffKind::constant;

    // constant case (any dim): flat row-major matrices
    std::vector<double> b_const;       // dim
    std::vector<double> sigma1_const;  // dim*dim
    std::vector<double> sigma2_const;  // dim*dim

    // parametric case (dim 1 only)
    ScalarFn b_fn, sigma1_fn, sigma2_fn;

    double delta = 0;   // ellipticity floor: min eig of sigma2^T sigma2 >= 2*delta
    double K = 0;       // bound on the functions and their sampled quotients
    double lambda = 1;  // tempered-measure weight

    bool constant() const { return kind == CoeffKind::constant; }

    // scalar evaluators, dim 1
    double b1(double x) const { return constant() ? b_const[0] : b_fn(x); }
    double s1(double x) const { return constant() ? sigma1_const[0] : sigma1_fn(x); }
    double s2(double x) const { return constant() ? sigma2_const[0] : sigma2_fn(x); }
    double a1(double x) const {
        const double u = s1(x), v = s2(x);
        return u * u + v * v;
    }
    double a1_prime(double x) const {
        if (constant()) return 0.0;
        return 2 * sigma1_fn(x) * sigma1_fn.d1(x) + 2 * sigma2_fn(x) * sigma2_fn.d1(x);
    }
    double a1_second(double x) const {
        if (constant()) return 0.0;
        auto term = [&](const ScalarFn& f) {
            const double d = f.d1(x);
            return 2 * (d * d + f(x) * f.d2(x));
        };
        return term(sigma1_fn) + term(sigma2_fn);
    }
    double b1_prime(double x) const { return constant() ? 0.0 : b_fn.d1(x); }

    // dense views (constant case)
    Eigen::VectorXd b_vec() const;
    Eigen::MatrixXd sigma1_mat() const;
    Eigen::MatrixXd sigma2_mat() const;
    Eigen::MatrixXd a_matrix() const;  // sigma1 sigma1^T + sigma2 sigma2^T
    Eigen::MatrixXd s1s1t() const;
};

// Validated constructors. Both run the probe-grid checks: ellipticity of
// sigma2^T sigma2 against 2*delta, norm bounds |b|,|sigma|<=K, and sampled
// first/second difference quotients <=K. Probe grid: x in [-12,12] with
// spacing 0.05 (dim 1); constant matrices are probed once.
Coefficients make_constant_coefficients(int dim, std::vector<double> b,
                                        std::vector<double> sigma1, std::vector<double> sigma2,
                                        double delta, double K, double lambda = 1.0);
Coefficients make_parametric_coefficients(ScalarFn b, ScalarFn sigma1, ScalarFn sigma2,
                                          double delta, double K, double lambda = 1.0);

// standard heat kernel, the density of N(0, t I) at x
double gaussian_kernel(double t, const double* x, int dim);
inline double gaussian_kernel(double t, double x) { return gaussian_kernel(t, &x, 1); }

// one-particle transition density (constant coefficients): N(x + b t, a t)
double transition_p0(const Coefficients& c, double t, const double* x, const double* y);
inline double transition_p0(const Coefficients& c, double t, double x, double y) {
    return transition_p0(c, t, &x, &y);
}

// two-particle joint transition density for a pair sharing the environment:
// jointly Gaussian, covariance blocks [[a t, s1 s1^T t], [s1 s1^T t, a t]]
double pair_transition_q0(const Coefficients& c, double t, const double* from, const double* to);
inline double pair_transition_q0(const Coefficients& c, double t, double x1, double x2,
                                 double y1, double y2) {
    const double from[2] = {x1, x2};
    const double to[2] = {y1, y2};
    return pair_transition_q0(c, t, from, to);
}

// ---------------------------------------------------------------------------

struct Atom {
    std::array<double, 3> pos{0, 0, 0};
    double mass = 0;
};

// Finite weighted point measure; the state of the particle and snake
// simulators. total_mass is kept as a running sum.
struct AtomicMeasure {
    int dim = 1;
    std::vector<Atom> atoms;
    double total_mass = 0;

    static AtomicMeasure dirac(double x, double mass, int dim = 1) {
        AtomicMeasure m;
        m.dim = dim;
        m.add({x, 0, 0}, mass);
        return m;
    }

    void add(const std::array<double, 3>& p, double mass) {
        atoms.push_back(Atom{p, mass});
        total_mass += mass;
    }
    void add1(double x, double mass) { add({x, 0, 0}, mass); }

    template <class F>
    double integrate(F&& f) const {
        double s = 0;
        for (const Atom& a : atoms) s += a.mass * f(a.pos.data());
        return s;
    }
    template <class F>
    double integrate1(F&& f) const {
        double s = 0;
        for (const Atom& a : atoms) s += a.mass * f(a.pos[0]);
        return s;
    }

    double recompute_mass() const {
        double s = 0;
        for (const Atom& a : atoms) s += a.mass;
        return s;
    }

    // sum of mass * exp(-lambda |x|); finite for every finite atom list, kept
    // as an ingestion guard for large measures
    double tempered_mass(double lambda) const {
        double s = 0;
        for (const Atom& a : atoms) {
            double n2 = 0;
            for (int c = 0; c < dim; ++c) n2 += a.pos[c] * a.pos[c];
            s += a.mass * std::exp(-lambda * std::sqrt(n2));
        }
        return s;
    }
};

}  // namespace flowproc
