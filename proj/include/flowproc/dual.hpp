#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "flowproc/errors.hpp"
#include "flowproc/field.hpp"
#include "flowproc/model.hpp"
#include "flowproc/rng.hpp"

namespace flowproc {

// Moment machinery for the measure-valued process.
//
// The n-th moment of the process pairs with a function of n spatial
// variables.  That function evolves backward through two operations:
//
//   flow    each variable diffuses with the private noise amplitude,
//           and all variables shift together with the common one, so a
//           single interval needs one 1-d convolution per axis plus one
//           convolution along the main diagonal (the drift rides along
//           in the diagonal kernel).
//   merge   a pair of variables collapses onto the diagonal, dropping
//           the arity by one.  Merges arrive at rate n(n-1)/2 and the
//           estimate carries the weight exp((1/2) int n(n-1) ds).
//
// With unit branching variance the merge rate equals the weight rate,
// so for constant data the estimator reduces to the weight alone.
// Kernels are renormalized to sum to one and the tensor is extended by
// its edge values, which keeps constant data constant.
//
// Only constant one-dimensional coefficients are supported here; the
// flow step relies on the motion semigroup being an explicit Gaussian.

struct DualTensor {
    Grid1D grid;
    int arity = 0;
    std::vector<double> values;  // flat, last axis fastest

    long stride(int axis) const;
    double value_at(const double* xs) const;  // multilinear, edge clamped
};

// arity = axis_fns.size(), entry k sampled on the grid nodes
DualTensor tensor_from(const Grid1D& g, const std::vector<std::vector<double>>& axis_fns);

void heat_flow(DualTensor& f, const Coefficients& c, double delta);
DualTensor coalesce(const DualTensor& f, int i, int j);

// sum over ordered atom tuples of (product of masses) * interpolated value
double tensor_readout(const DualTensor& f, const AtomicMeasure& mu);

struct DualEstimate {
    double mean = 0;
    double std_error = 0;
    long replicates = 0;
};

DualEstimate dual_moment(std::uint64_t seed, const AtomicMeasure& mu, const Coefficients& c,
                         const Grid1D& grid, const std::vector<std::vector<double>>& axis_fns,
                         double t, long replicates);

// quadrature helpers

struct GaussHermite {
    std::vector<double> node;
    std::vector<double> weight;  // sums to one; E h(Z) ~ sum w_i h(node_i)
};
GaussHermite gauss_hermite(int n);

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol);

// closed-form moments for constant 1-d coefficients

double exact_first_moment(const AtomicMeasure& mu, const Coefficients& c,
                          const std::function<double(double)>& f, double t);

// first term pairs the initial atoms through the correlated two-particle
// kernel; the second integrates the branching contribution, scaled by
// variance_rate (the process built here has variance_rate = 1)
double exact_second_moment(const AtomicMeasure& mu, const Coefficients& c,
                           const std::function<double(double)>& f,
                           const std::function<double(double)>& g, double t,
                           double variance_rate = 1.0);

// both readings of the branch term, labeled; rate one matches the mass
// variance of every simulator in this toolkit, rate two is the doubled
// variant kept for comparison
struct SecondMoments {
    double variance_rate_one = 0;
    double variance_rate_two = 0;
};
SecondMoments exact_second_moments(const AtomicMeasure& mu, const Coefficients& c,
                                   const std::function<double(double)>& f,
                                   const std::function<double(double)>& g, double t);

}  // namespace flowproc
