#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "flowproc/errors.hpp"

namespace flowproc {

// Regularity and occupancy diagnostics for sampled fields and atom clouds.

struct HolderEstimate {
    double exponent = 0;  // slope / 2, clipped to [0, 1]
    double slope = 0;     // raw log-log slope of the structure function
    double slope_se = 0;  // least squares standard error of the slope
    std::vector<double> structure;  // pooled second moments, one per lag
    long fields = 0;
};

// Pooled second moment structure function over equally sampled fields,
// fitted by least squares on the log-log points.  Demands enough fields
// to average (100), at least four lags, lags no shorter than four cells
// and spanning at least a decade; anything less gives estimates too
// noisy to act on.
HolderEstimate estimate_holder(const std::vector<std::vector<double>>& fields, double dx,
                               const std::vector<long>& lags);

// Random trigonometric series on [0, 1) with amplitude j^-(hurst + 1/2)
// at integer frequency j.  Sampled on n points, truncated at j_max.
// The oscillators advance by rotation, no trig calls in the inner loop.
std::vector<double> synthetic_holder_field(double hurst, int n, int j_max,
                                           std::uint64_t seed);

struct BoxCount {
    long occupied = 0;
    double volume = 0;  // occupied * eps^dim
};

BoxCount box_occupancy(const std::vector<std::array<double, 3>>& points, int dim,
                       double eps);

struct McSummary {
    double mean = 0;
    double variance = 0;  // unbiased, n - 1 denominator
    double std_error = 0;
    double lo = 0;  // 99% normal interval
    double hi = 0;
    long n = 0;
};

McSummary mc_summary(const std::vector<double>& values);

}  // namespace flowproc
