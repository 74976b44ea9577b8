#include "flowproc/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "flowproc/rng.hpp"

namespace flowproc {

HolderEstimate estimate_holder(const std::vector<std::vector<double>>& fields, double dx,
                               const std::vector<long>& lags) {
    if (dx <= 0) throw InvalidStep("cell width must be positive");
    if (fields.size() < 100) throw InsufficientData("need at least 100 fields");
    if (lags.size() < 4) throw InsufficientData("need at least four lags");
    const std::size_t n = fields.front().size();
    for (const auto& f : fields)
        if (f.size() != n) throw InvalidStep("fields differ in length");
    const long shortest = *std::min_element(lags.begin(), lags.end());
    const long longest = *std::max_element(lags.begin(), lags.end());
    if (shortest < 4) throw InsufficientData("shortest lag under four cells");
    if (longest < 10 * shortest) throw InsufficientData("lags span less than a decade");
    if ((std::size_t)longest >= n) throw OutOfRange("lag exceeds the field");

    HolderEstimate out;
    out.fields = (long)fields.size();
    out.structure.reserve(lags.size());
    for (long ell : lags) {
        double acc = 0;
        long cnt = 0;
        for (const auto& f : fields) {
            for (std::size_t i = 0; i + (std::size_t)ell < n; ++i) {
                const double d = f[i + (std::size_t)ell] - f[i];
                acc += d * d;
            }
            cnt += (long)n - ell;
        }
        out.structure.push_back(acc / (double)cnt);
    }

    const int k = (int)lags.size();
    std::vector<double> xs(k), ys(k);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < k; ++i) {
        if (!(out.structure[i] > 0)) throw InsufficientData("structure function vanishes");
        xs[i] = std::log((double)lags[i] * dx);
        ys[i] = std::log(out.structure[i]);
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    out.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    const double xbar = sx / k, ybar = sy / k;
    double ssr = 0, ssx = 0;
    for (int i = 0; i < k; ++i) {
        const double resid = ys[i] - ybar - out.slope * (xs[i] - xbar);
        ssr += resid * resid;
        ssx += (xs[i] - xbar) * (xs[i] - xbar);
    }
    out.slope_se = std::sqrt(ssr / (k - 2) / ssx);
    out.exponent = std::clamp(out.slope / 2, 0.0, 1.0);
    return out;
}

std::vector<double> synthetic_holder_field(double hurst, int n, int j_max,
                                           std::uint64_t seed) {
    if (!(hurst > 0 && hurst < 1)) throw OutOfRange("exponent must sit in (0, 1)");
    if (n < 16) throw InvalidStep("need at least 16 samples");
    if (j_max < 1) throw InvalidStep("need at least one frequency");
    std::vector<double> x((std::size_t)n, 0.0);
    Rng r = Rng::keyed(seed, stream::init);
    for (int j = 1; j <= j_max; ++j) {
        const double amp = std::pow((double)j, -(hurst + 0.5));
        const double a = amp * r.gauss();
        const double b = amp * r.gauss();
        const double theta = 2 * M_PI * j / n;
        const double ct = std::cos(theta), st = std::sin(theta);
        double c = 1, s = 0;
        for (int i = 0; i < n; ++i) {
            x[(std::size_t)i] += a * c + b * s;
            const double cn = c * ct - s * st;
            s = s * ct + c * st;
            c = cn;
        }
    }
    return x;
}

BoxCount box_occupancy(const std::vector<std::array<double, 3>>& points, int dim,
                       double eps) {
    if (dim < 1 || dim > 3) throw OutOfRange("dimension must be 1..3");
    if (!(eps > 0)) throw InvalidStep("box size must be positive");
    std::vector<std::array<long, 3>> cells;
    cells.reserve(points.size());
    for (const auto& p : points) {
        std::array<long, 3> c = {0, 0, 0};
        for (int d = 0; d < dim; ++d) c[(std::size_t)d] = (long)std::floor(p[(std::size_t)d] / eps);
        cells.push_back(c);
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    BoxCount out;
    out.occupied = (long)cells.size();
    out.volume = (double)out.occupied * std::pow(eps, dim);
    return out;
}

McSummary mc_summary(const std::vector<double>& values) {
    if (values.size() < 2) throw InsufficientData("need at least two samples");
    McSummary out;
    out.n = (long)values.size();
    double mean = 0;
    for (double v : values) mean += v;
    mean /= (double)out.n;
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out.mean = mean;
    out.variance = ss / (double)(out.n - 1);
    out.std_error = std::sqrt(out.variance / (double)out.n);
    const double z = 2.5758293035489004;  // two sided 99%
    out.lo = mean - z * out.std_error;
    out.hi = mean + z * out.std_error;
    return out;
}

}  // namespace flowproc
