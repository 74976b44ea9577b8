#include "flowproc/dual.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "flowproc/parallel.hpp"

namespace flowproc {

namespace {

constexpr int MAX_ARITY = 4;
constexpr std::size_t MAX_CELLS = std::size_t{1} << 26;

struct Taps {
    int j_lo = 0;
    std::vector<double> w;  // empty means identity
};

// symmetric kernel with standard deviation sd on a lattice of pitch dx;
// below one cell a three tap stencil matches the variance exactly
Taps gauss_taps(double sd, double dx) {
    Taps t;
    if (sd <= 0) return t;
    if (sd < dx) {
        const double q = sd * sd / (2 * dx * dx);
        t.j_lo = -1;
        t.w = {q, 1 - 2 * q, q};
        return t;
    }
    const int reach = (int)std::ceil(6 * sd / dx);
    t.j_lo = -reach;
    t.w.resize(2 * reach + 1);
    double total = 0;
    for (int j = -reach; j <= reach; ++j) {
        const double u = j * dx / sd;
        const double v = std::exp(-0.5 * u * u);
        t.w[j + reach] = v;
        total += v;
    }
    for (double& v : t.w) v /= total;
    return t;
}

Taps shift_taps(double mean, double dx) {
    Taps t;
    if (mean == 0) return t;
    const double u = mean / dx;
    const int j0 = (int)std::floor(u);
    const double frac = u - j0;
    t.j_lo = j0;
    t.w = {1 - frac, frac};
    return t;
}

int clamp_cell(int i, int m) { return i < 0 ? 0 : (i >= m ? m - 1 : i); }

void axis_conv(DualTensor& f, int axis, const Taps& taps, std::vector<double>& scratch) {
    if (taps.w.empty()) return;
    const int m = f.grid.n;
    const long stride = f.stride(axis);
    const long total = (long)f.values.size();
    scratch.resize(f.values.size());
    for (long flat = 0; flat < total; ++flat) {
        const int ik = (int)((flat / stride) % m);
        double acc = 0;
        for (std::size_t jj = 0; jj < taps.w.size(); ++jj) {
            const int src = clamp_cell(ik + taps.j_lo + (int)jj, m);
            acc += taps.w[jj] * f.values[flat + (long)(src - ik) * stride];
        }
        scratch[flat] = acc;
    }
    f.values.swap(scratch);
}

void diag_conv(DualTensor& f, const Taps& taps, std::vector<double>& scratch) {
    if (taps.w.empty()) return;
    const int m = f.grid.n;
    const int n = f.arity;
    const long total = (long)f.values.size();
    long strides[MAX_ARITY];
    int idx[MAX_ARITY];
    for (int a = 0; a < n; ++a) strides[a] = f.stride(a);
    scratch.resize(f.values.size());
    for (long flat = 0; flat < total; ++flat) {
        for (int a = 0; a < n; ++a) idx[a] = (int)((flat / strides[a]) % m);
        double acc = 0;
        for (std::size_t jj = 0; jj < taps.w.size(); ++jj) {
            const int off = taps.j_lo + (int)jj;
            long src = 0;
            for (int a = 0; a < n; ++a) src += (long)clamp_cell(idx[a] + off, m) * strides[a];
            acc += taps.w[jj] * f.values[src];
        }
        scratch[flat] = acc;
    }
    f.values.swap(scratch);
}

void require_simple(const Coefficients& c) {
    if (c.dim != 1 || c.kind != CoeffKind::constant)
        throw UnsupportedCoefficients("moment machinery needs constant 1-d coefficients");
}

double measure_pairing(const AtomicMeasure& mu, const std::function<double(double)>& f) {
    double s = 0;
    for (const Atom& a : mu.atoms) s += a.mass * f(a.pos[0]);
    return s;
}

double simpson_rec(const std::function<double(double)>& f, double a, double m, double b,
                   double fa, double fm, double fb, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6 * (fm + 4 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15;
    return simpson_rec(f, a, lm, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_rec(f, m, rm, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace

long DualTensor::stride(int axis) const {
    long s = 1;
    for (int a = arity - 1; a > axis; --a) s *= grid.n;
    return s;
}

double DualTensor::value_at(const double* xs) const {
    const int m = grid.n;
    int base[MAX_ARITY];
    double frac[MAX_ARITY];
    for (int a = 0; a < arity; ++a) {
        const double u = (xs[a] - grid.x_min) / grid.dx - 0.5;
        int i0 = (int)std::floor(u);
        if (i0 < 0) i0 = 0;
        if (i0 > m - 2) i0 = m - 2;
        double fr = u - i0;
        if (fr < 0) fr = 0;
        if (fr > 1) fr = 1;
        base[a] = i0;
        frac[a] = fr;
    }
    double acc = 0;
    for (int corner = 0; corner < (1 << arity); ++corner) {
        double w = 1;
        long flat = 0;
        for (int a = 0; a < arity; ++a) {
            const int bit = (corner >> a) & 1;
            w *= bit ? frac[a] : 1 - frac[a];
            flat += (long)(base[a] + bit) * stride(a);
        }
        acc += w * values[flat];
    }
    return acc;
}

DualTensor tensor_from(const Grid1D& g, const std::vector<std::vector<double>>& axis_fns) {
    const int n = (int)axis_fns.size();
    if (n == 0) throw InvalidStep("need at least one axis function");
    if (n > MAX_ARITY) throw ArityTooLarge("tensor arity capped at 4");
    std::size_t cells = 1;
    for (int a = 0; a < n; ++a) {
        if ((int)axis_fns[a].size() != g.n)
            throw InvalidStep("axis function not sampled on the grid");
        cells *= (std::size_t)g.n;
        if (cells > MAX_CELLS) throw OutOfRange("tensor too large");
    }
    DualTensor f;
    f.grid = g;
    f.arity = n;
    f.values.resize(cells);
    int idx[MAX_ARITY] = {0, 0, 0, 0};
    for (std::size_t flat = 0; flat < cells; ++flat) {
        double v = 1;
        for (int a = 0; a < n; ++a) v *= axis_fns[a][idx[a]];
        f.values[flat] = v;
        for (int a = n - 1; a >= 0; --a) {
            if (++idx[a] < g.n) break;
            idx[a] = 0;
        }
    }
    return f;
}

void heat_flow(DualTensor& f, const Coefficients& c, double delta) {
    require_simple(c);
    if (delta < 0) throw InvalidStep("negative flow time");
    if (delta == 0) return;
    const double rt = std::sqrt(delta);
    std::vector<double> scratch;
    const Taps axis = gauss_taps(c.s2(0) * rt, f.grid.dx);
    for (int a = 0; a < f.arity; ++a) axis_conv(f, a, axis, scratch);
    diag_conv(f, gauss_taps(c.s1(0) * rt, f.grid.dx), scratch);
    diag_conv(f, shift_taps(c.b1(0) * delta, f.grid.dx), scratch);
}

DualTensor coalesce(const DualTensor& f, int i, int j) {
    if (f.arity < 2) throw InvalidStep("nothing to merge");
    if (i < 0 || j <= i || j >= f.arity) throw OutOfRange("bad merge pair");
    DualTensor g;
    g.grid = f.grid;
    g.arity = f.arity - 1;
    g.values.resize(f.values.size() / (std::size_t)f.grid.n);
    const int m = f.grid.n;
    int idx[MAX_ARITY] = {0, 0, 0, 0};
    for (std::size_t flat = 0; flat < g.values.size(); ++flat) {
        long src = 0;
        for (int a = 0; a < f.arity; ++a) {
            const int ya = a < j ? idx[a] : (a == j ? idx[i] : idx[a - 1]);
            src += (long)ya * f.stride(a);
        }
        g.values[flat] = f.values[src];
        for (int a = g.arity - 1; a >= 0; --a) {
            if (++idx[a] < m) break;
            idx[a] = 0;
        }
    }
    return g;
}

double tensor_readout(const DualTensor& f, const AtomicMeasure& mu) {
    if (mu.dim != 1) throw UnsupportedCoefficients("readout is 1-d");
    if (mu.atoms.empty()) return 0;
    const int n = f.arity;
    const std::size_t na = mu.atoms.size();
    std::size_t tup[MAX_ARITY] = {0, 0, 0, 0};
    double xs[MAX_ARITY];
    double total = 0;
    for (;;) {
        double w = 1;
        for (int a = 0; a < n; ++a) {
            w *= mu.atoms[tup[a]].mass;
            xs[a] = mu.atoms[tup[a]].pos[0];
        }
        total += w * f.value_at(xs);
        int a = n - 1;
        for (; a >= 0; --a) {
            if (++tup[a] < na) break;
            tup[a] = 0;
        }
        if (a < 0) break;
    }
    return total;
}

DualEstimate dual_moment(std::uint64_t seed, const AtomicMeasure& mu, const Coefficients& c,
                         const Grid1D& grid, const std::vector<std::vector<double>>& axis_fns,
                         double t, long replicates) {
    require_simple(c);
    if (mu.dim != 1) throw UnsupportedCoefficients("measure must be 1-d");
    if (t < 0) throw NonpositiveTime("negative horizon");
    if (replicates < 1) throw InvalidStep("need at least one replicate");
    const DualTensor base = tensor_from(grid, axis_fns);

    std::vector<double> est((std::size_t)replicates);
    parallel_for(replicates, [&](long r) {
        DualTensor f = base;
        Rng chain = Rng::keyed(replicate_seed(seed, (std::uint64_t)r), stream::dual);
        int n = f.arity;
        double s = 0, acc = 0;
        while (n > 1) {
            const double rate = 0.5 * n * (n - 1);
            const double tau = chain.exponential(1.0 / rate);
            if (s + tau >= t) {
                heat_flow(f, c, t - s);
                acc += n * (n - 1) * (t - s);
                s = t;
                break;
            }
            heat_flow(f, c, tau);
            acc += n * (n - 1) * tau;
            s += tau;
            const long npairs = n * (n - 1) / 2;
            long pick = (long)(chain.u01() * (double)npairs);
            if (pick >= npairs) pick = npairs - 1;
            int pi = 0, pj = 1;
            for (int i = 0, k = 0; i < n - 1 && k <= pick; ++i)
                for (int j = i + 1; j < n; ++j, ++k)
                    if (k == pick) {
                        pi = i;
                        pj = j;
                    }
            f = coalesce(f, pi, pj);
            --n;
        }
        if (s < t) heat_flow(f, c, t - s);
        est[(std::size_t)r] = std::exp(0.5 * acc) * tensor_readout(f, mu);
    });

    DualEstimate out;
    out.replicates = replicates;
    double mean = 0;
    for (double v : est) mean += v;
    mean /= (double)replicates;
    double ss = 0;
    for (double v : est) ss += (v - mean) * (v - mean);
    out.mean = mean;
    out.std_error = replicates > 1 ? std::sqrt(ss / ((double)replicates * (replicates - 1))) : 0;
    return out;
}

GaussHermite gauss_hermite(int n) {
    if (n < 1) throw InvalidStep("need at least one node");
    GaussHermite gh;
    if (n == 1) {
        gh.node = {0};
        gh.weight = {1};
        return gh;
    }
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt((double)k);
        jac(k, k - 1) = b;
        jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
    gh.node.resize(n);
    gh.weight.resize(n);
    for (int k = 0; k < n; ++k) {
        gh.node[k] = eig.eigenvalues()(k);
        const double v = eig.eigenvectors()(0, k);
        gh.weight[k] = v * v;
    }
    return gh;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
    if (!(b > a)) return 0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, 48);
}

double exact_first_moment(const AtomicMeasure& mu, const Coefficients& c,
                          const std::function<double(double)>& f, double t) {
    require_simple(c);
    if (mu.dim != 1) throw UnsupportedCoefficients("measure must be 1-d");
    if (t < 0) throw NonpositiveTime("negative horizon");
    if (t == 0) return measure_pairing(mu, f);
    const double drift = c.b1(0) * t;
    const double sd = std::sqrt(c.a1(0) * t);
    const double norm = 1.0 / (sd * std::sqrt(2 * M_PI));
    double total = 0;
    for (const Atom& at : mu.atoms) {
        const double mean = at.pos[0] + drift;
        auto integrand = [&](double y) {
            const double u = (y - mean) / sd;
            return norm * std::exp(-0.5 * u * u) * f(y);
        };
        total += at.mass * adaptive_simpson(integrand, mean - 10 * sd, mean + 10 * sd, 1e-12);
    }
    return total;
}

namespace {

struct MomentTerms {
    double pair = 0;    // initial atoms through the correlated pair kernel
    double branch = 0;  // integrated branching contribution, unit rate
};

MomentTerms second_moment_terms(const AtomicMeasure& mu, const Coefficients& c,
                                const std::function<double(double)>& f,
                                const std::function<double(double)>& g, double t) {
    require_simple(c);
    if (mu.dim != 1) throw UnsupportedCoefficients("measure must be 1-d");
    if (t < 0) throw NonpositiveTime("negative horizon");
    if (t == 0) return {measure_pairing(mu, f) * measure_pairing(mu, g), 0.0};

    const double b = c.b1(0);
    const double a = c.a1(0);
    const double r01 = c.s1(0) * c.s1(0);  // shared part of the pair covariance
    const GaussHermite gh = gauss_hermite(24);
    const int nq = (int)gh.node.size();

    // correlated pair from starts (x1, x2) run for time u, paired with f and g
    auto pair_expect = [&](double x1, double x2, double u) {
        if (u < 1e-14) return f(x1) * g(x2);
        const double l11 = std::sqrt(a * u);
        const double l21 = r01 * u / l11;
        const double arg = a * u - l21 * l21;
        const double l22 = arg > 0 ? std::sqrt(arg) : 0;
        const double m1 = x1 + b * u, m2 = x2 + b * u;
        double acc = 0;
        for (int i = 0; i < nq; ++i) {
            const double y1 = m1 + l11 * gh.node[i];
            double inner = 0;
            for (int j = 0; j < nq; ++j)
                inner += gh.weight[j] * g(m2 + l21 * gh.node[i] + l22 * gh.node[j]);
            acc += gh.weight[i] * f(y1) * inner;
        }
        return acc;
    };

    double term1 = 0;
    for (const Atom& p : mu.atoms)
        for (const Atom& q : mu.atoms)
            term1 += p.mass * q.mass * pair_expect(p.pos[0], q.pos[0], t);

    // branch at time s, both offspring lines share the environment afterwards
    auto branch_integrand = [&](double s) {
        const double u = t - s;
        double acc = 0;
        for (const Atom& p : mu.atoms) {
            double ez = 0;
            if (s < 1e-14) {
                ez = pair_expect(p.pos[0], p.pos[0], u);
            } else {
                const double sd = std::sqrt(a * s);
                const double mz = p.pos[0] + b * s;
                for (int i = 0; i < nq; ++i) {
                    const double z = mz + sd * gh.node[i];
                    ez += gh.weight[i] * pair_expect(z, z, u);
                }
            }
            acc += p.mass * ez;
        }
        return acc;
    };

    const int panels = 64;
    const double hstep = t / panels;
    double term2 = branch_integrand(0) + branch_integrand(t);
    for (int k = 1; k < panels; ++k)
        term2 += branch_integrand(k * hstep) * (k % 2 ? 4.0 : 2.0);
    term2 *= hstep / 3;

    return {term1, term2};
}

}  // namespace

double exact_second_moment(const AtomicMeasure& mu, const Coefficients& c,
                           const std::function<double(double)>& f,
                           const std::function<double(double)>& g, double t,
                           double variance_rate) {
    const MomentTerms terms = second_moment_terms(mu, c, f, g, t);
    return terms.pair + variance_rate * terms.branch;
}

SecondMoments exact_second_moments(const AtomicMeasure& mu, const Coefficients& c,
                                   const std::function<double(double)>& f,
                                   const std::function<double(double)>& g, double t) {
    const MomentTerms terms = second_moment_terms(mu, c, f, g, t);
    return {terms.pair + terms.branch, terms.pair + 2 * terms.branch};
}

}  // namespace flowproc
