#include "flowproc/model.hpp"

#include <cmath>

namespace flowproc {

namespace {

constexpr double PROBE_LO = -12.0;
constexpr double PROBE_HI = 12.0;
constexpr double PROBE_DX = 0.05;

void check_ellipticity_matrix(const Eigen::MatrixXd& sigma2, double delta) {
    const Eigen::MatrixXd g = sigma2.transpose() * sigma2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.eigenvalues().minCoeff() < 2 * delta - 1e-12)
        throw EllipticityViolation("sigma2^T sigma2 eigenvalue below 2*delta");
}

void check_bound(double v, double K, const char* what) {
    if (!(std::abs(v) <= K))
        throw BoundViolation(std::string(what) + " exceeds bound K");
}

void validate_parametric(const Coefficients& c) {
    // sampled bound and difference-quotient checks on the probe grid
    auto probe_fn = [&](const ScalarFn& f, const char* name) {
        double prev = f(PROBE_LO), prev_d = 0;
        bool have_prev_d = false;
        for (double x = PROBE_LO; x <= PROBE_HI + 1e-9; x += PROBE_DX) {
            const double v = f(x);
            check_bound(v, c.K, name);
            if (x > PROBE_LO) {
                const double d = (v - prev) / PROBE_DX;
                check_bound(d, c.K, name);
                if (have_prev_d) check_bound((d - prev_d) / PROBE_DX, c.K, name);
                prev_d = d;
                have_prev_d = true;
            }
            prev = v;
        }
    };
    probe_fn(c.b_fn, "b");
    probe_fn(c.sigma1_fn, "sigma1");
    probe_fn(c.sigma2_fn, "sigma2");
    for (double x = PROBE_LO; x <= PROBE_HI + 1e-9; x += PROBE_DX) {
        const double s = c.sigma2_fn(x);
        if (s * s < 2 * c.delta - 1e-12)
            throw EllipticityViolation("sigma2^2 below 2*delta on probe grid");
    }
}

}  // namespace

Eigen::VectorXd Coefficients::b_vec() const {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = b_const[i];
    return v;
}

Eigen::MatrixXd Coefficients::sigma1_mat() const {
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = sigma1_const[i * dim + j];
    return m;
}

Eigen::MatrixXd Coefficients::sigma2_mat() const {
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = sigma2_const[i * dim + j];
    return m;
}

Eigen::MatrixXd Coefficients::a_matrix() const {
    const Eigen::MatrixXd s1 = sigma1_mat(), s2 = sigma2_mat();
    return s1 * s1.transpose() + s2 * s2.transpose();
}

Eigen::MatrixXd Coefficients::s1s1t() const {
    const Eigen::MatrixXd s1 = sigma1_mat();
    return s1 * s1.transpose();
}

Coefficients make_constant_coefficients(int dim, std::vector<double> b,
                                        std::vector<double> sigma1, std::vector<double> sigma2,
                                        double delta, double K, double lambda) {
    if (dim < 1 || dim > 3) throw UnsupportedCoefficients("dim must be 1, 2 or 3");
    if ((int)b.size() != dim || (int)sigma1.size() != dim * dim || (int)sigma2.size() != dim * dim)
        throw UnsupportedCoefficients("coefficient array sizes do not match dim");
    if (delta <= 0) throw EllipticityViolation("delta must be positive");
    if (K <= 0) throw BoundViolation("K must be positive");
    Coefficients c;
    c.dim = dim;
    c.kind = CoeffKind::constant;
    c.b_const = std::move(b);
    c.sigma1_const = std::move(sigma1);
    c.sigma2_const = std::move(sigma2);
    c.delta = delta;
    c.K = K;
    c.lambda = lambda;
    check_ellipticity_matrix(c.sigma2_mat(), delta);
    for (double v : c.b_const) check_bound(v, K, "b");
    for (double v : c.sigma1_const) check_bound(v, K, "sigma1");
    for (double v : c.sigma2_const) check_bound(v, K, "sigma2");
    return c;
}

Coefficients make_parametric_coefficients(ScalarFn b, ScalarFn sigma1, ScalarFn sigma2,
                                          double delta, double K, double lambda) {
    if (delta <= 0) throw EllipticityViolation("delta must be positive");
    if (K <= 0) throw BoundViolation("K must be positive");
    Coefficients c;
    c.dim = 1;
    c.kind = CoeffKind::parametric_smooth;
    c.b_fn = b;
    c.sigma1_fn = sigma1;
    c.sigma2_fn = sigma2;
    c.delta = delta;
    c.K = K;
    c.lambda = lambda;
    validate_parametric(c);
    return c;
}

double gaussian_kernel(double t, const double* x, int dim) {
    if (!(t > 0)) throw NonpositiveTime("gaussian_kernel requires t > 0");
    double q = 0;
    for (int i = 0; i < dim; ++i) q += x[i] * x[i];
    const double norm = std::pow(2 * M_PI * t, -0.5 * dim);
    return norm * std::exp(-q / (2 * t));
}

double transition_p0(const Coefficients& c, double t, const double* x, const double* y) {
    if (!(t > 0)) throw NonpositiveTime("transition_p0 requires t > 0");
    if (!c.constant()) throw UnsupportedCoefficients("transition_p0 needs constant coefficients");
    const int d = c.dim;
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z(i) = y[i] - x[i] - c.b_const[i] * t;
    const Eigen::MatrixXd cov = c.a_matrix() * t;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw EllipticityViolation("transition covariance not positive definite");
    const Eigen::VectorXd w = llt.solve(z);
    double logdet = 0;
    for (int i = 0; i < d; ++i) logdet += std::log(llt.matrixL()(i, i));
    return std::exp(-0.5 * z.dot(w) - logdet - 0.5 * d * std::log(2 * M_PI));
}

double pair_transition_q0(const Coefficients& c, double t, const double* from, const double* to) {
    if (!(t > 0)) throw NonpositiveTime("pair_transition_q0 requires t > 0");
    if (!c.constant()) throw UnsupportedCoefficients("pair_transition_q0 needs constant coefficients");
    const int d = c.dim;
    const Eigen::MatrixXd a = c.a_matrix(), r = c.s1s1t();
    Eigen::MatrixXd cov(2 * d, 2 * d);
    cov.topLeftCorner(d, d) = a * t;
    cov.bottomRightCorner(d, d) = a * t;
    cov.topRightCorner(d, d) = r * t;
    cov.bottomLeftCorner(d, d) = r * t;
    Eigen::VectorXd z(2 * d);
    for (int i = 0; i < d; ++i) {
        z(i) = to[i] - from[i] - c.b_const[i] * t;
        z(d + i) = to[d + i] - from[d + i] - c.b_const[i] * t;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw EllipticityViolation("pair covariance not positive definite");
    const Eigen::VectorXd w = llt.solve(z);
    double logdet = 0;
    for (int i = 0; i < 2 * d; ++i) logdet += std::log(llt.matrixL()(i, i));
    return std::exp(-0.5 * z.dot(w) - logdet - d * std::log(2 * M_PI));
}

}  // namespace flowproc
