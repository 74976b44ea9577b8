#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace flowproc {

// ---------------------------------------------------------------------------
// Counter-based random numbers.
//
// Every draw is a pure function of (key, counter): out = mix64(key + (ctr+1)*C).
// A consumer owns a key derived from (seed, stream id) and walks its own
// counter, so streams for different entities never interact: adding particles,
// grid cells, or snake branches cannot perturb the shared environment path or
// any other stream. Stream id layout used across the toolkit:
//
//   (kind << 56) | entity      with the kind constants in flowproc::stream.
//
// Per-entity counter spaces are documented at the call sites; the two
// reserved counters below keep one-shot draws (a branching coin, an initial
// lifetime) out of the per-step range.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t GOLDEN64 = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer (Stafford mix 13)
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace stream {
inline constexpr std::uint64_t environment   = 0x01ull << 56;  // shared W path
inline constexpr std::uint64_t sheet         = 0x02ull << 56;  // space-time noise
inline constexpr std::uint64_t init          = 0x03ull << 56;  // initial population
inline constexpr std::uint64_t particle      = 0x04ull << 56;  // | particle id
inline constexpr std::uint64_t lifetime_walk = 0x05ull << 56;  // snake zeta walk
inline constexpr std::uint64_t excursion_aux = 0x06ull << 56;  // bridge bernoullis
inline constexpr std::uint64_t branch        = 0x07ull << 56;  // snake spine pushes
inline constexpr std::uint64_t dual          = 0x08ull << 56;  // death chain jumps
inline constexpr std::uint64_t feller        = 0x09ull << 56;  // exact branching cells
inline constexpr std::uint64_t replicate     = 0x0Aull << 56;  // | replicate index
}  // namespace stream

// reserved counters inside a per-entity stream
inline constexpr std::uint64_t CTR_COIN = 1ull << 62;
inline constexpr std::uint64_t CTR_LIFE = (1ull << 62) + 1;

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream_id) {
    return mix64(seed ^ mix64(stream_id));
}

// Seed for replicate r of an experiment: documented derivation recorded in
// every report so runs can be reproduced piecewise.
inline std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t r) {
    return mix64(seed ^ mix64(stream::replicate | r));
}

inline double inverse_normal_cdf(double p);

inline double u01_from_bits(std::uint64_t x) {
    // uniform on (0,1), strictly: never returns 0 or 1
    return (static_cast<double>(x >> 11) + 0.5) * 0x1p-53;
}

struct Rng {
    std::uint64_t key = 0;
    std::uint64_t ctr = 0;

    static Rng keyed(std::uint64_t seed, std::uint64_t stream_id) {
        return Rng{stream_key(seed, stream_id), 0};
    }

    std::uint64_t next_u64() { return mix64(key + (++ctr) * GOLDEN64); }

    // random access without advancing; for strictly counter-indexed sources
    std::uint64_t at(std::uint64_t index) const { return mix64(key + (index + 1) * GOLDEN64); }

    double u01() { return u01_from_bits(next_u64()); }
    double gauss() { return inverse_normal_cdf(u01()); }
    double gauss_at(std::uint64_t index) const { return inverse_normal_cdf(u01_from_bits(at(index))); }
    double exponential(double mean) { return -mean * std::log(u01()); }

    // Exact Poisson sampling. Knuth's product method, applied in chunks of
    // rate <= 25 so exp() stays in range; the chunk sum is again Poisson.
    std::uint64_t poisson(double mean) {
        std::uint64_t n = 0;
        while (mean > 0) {
            const double chunk = mean > 25.0 ? 25.0 : mean;
            mean -= chunk;
            const double limit = std::exp(-chunk);
            double prod = u01();
            while (prod > limit) {
                ++n;
                prod *= u01();
            }
        }
        return n;
    }

    // Marsaglia-Tsang squeeze for shape >= 1; the standard power boost below 1.
    double gamma(double shape, double scale) {
        if (shape <= 0.0) return 0.0;
        double boost = 1.0;
        if (shape < 1.0) {
            boost = std::pow(u01(), 1.0 / shape);
            shape += 1.0;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = gauss();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = u01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return boost * d * v * scale;
        }
    }
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Wichura's PPND16 rational approximation to the standard normal quantile,
// absolute error below 1e-15 over (0,1). Feeding it 53-bit uniforms gives
// Gaussians that are exact to double precision for every practical purpose,
// with the counter-access pattern the noise module needs.
inline double inverse_normal_cdf(double p) {
    static constexpr double a[8] = {
        3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
        1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
        3.3430575583588128105e4,  2.5090809287301226727e3};
    static constexpr double b[8] = {
        1.0,                      4.2313330701600911252e1, 6.8718700749205790830e2,
        5.3941960214247511077e3,  2.1213794301586595867e4, 3.9307895800092710610e4,
        2.8729085735721942674e4,  5.2264952788528545610e3};
    static constexpr double c[8] = {
        1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
        3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
        2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr double dd[8] = {
        1.0,                      2.05319162663775882187e0, 1.67638483018380384940e0,
        6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
        5.47593808499534494600e-4, 1.05075007164441684324e-9};
    static constexpr double e[8] = {
        6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
        2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
        2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double f[8] = {
        1.0,                      5.99832206555887937690e-1, 1.36929880922735805310e-1,
        1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
        1.42151175831644588870e-7, 2.04426310338993978564e-15};

    auto ratpoly = [](const double* num, const double* den, double r) {
        double u = num[7], v = den[7];
        for (int i = 6; i >= 0; --i) {
            u = u * r + num[i];
            v = v * r + den[i];
        }
        return u / v;
    };

    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * ratpoly(a, b, r);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    if (r <= 0.0) return q < 0.0 ? -std::numeric_limits<double>::infinity()
                                 : std::numeric_limits<double>::infinity();
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        val = ratpoly(c, dd, r - 1.6);
    } else {
        val = ratpoly(e, f, r - 5.0);
    }
    return q < 0.0 ? -val : val;
}

}  // namespace flowproc
