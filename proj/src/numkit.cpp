#include "numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace cellwise {

bool is_finite(const Matrix& m) { return m.allFinite(); }

SymMatrix::SymMatrix(Matrix m) {
    if (m.rows() != m.cols()) fail(ErrorKind::Input, "symmetric matrix must be square");
    if (m.rows() == 0) fail(ErrorKind::Input, "symmetric matrix must have positive dimension");
    if (!m.allFinite()) fail(ErrorKind::Input, "symmetric matrix has non-finite entries");
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * scale) {
        std::ostringstream os;
        os << "matrix is not symmetric (max |a_jh - a_hj| = " << asym << ")";
        fail(ErrorKind::Input, os.str());
    }
    m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Index d) { return SymMatrix(Matrix::Identity(d, d)); }

SymMatrix SymMatrix::diagonal(const Vector& diag) { return SymMatrix(Matrix(diag.asDiagonal())); }

SymMatrix SymMatrix::sub(const std::vector<Index>& idx) const {
    const auto k = static_cast<Index>(idx.size());
    Matrix out(k, k);
    for (Index a = 0; a < k; ++a)
        for (Index b = 0; b < k; ++b) out(a, b) = m_(idx[a], idx[b]);
    return SymMatrix(std::move(out));
}

EigenDecomposition sym_eigen(const SymMatrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix());
    if (solver.info() != Eigen::Success) fail(ErrorKind::Convergence, "symmetric eigensolver failed");
    const Index d = s.dim();
    // Eigen returns ascending order; a stable descending sort keeps equal
    // eigenvalues in a reproducible order.
    std::vector<Index> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    const Vector& ev = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ev(a) > ev(b); });

    EigenDecomposition out{Vector(d), Matrix(d, d)};
    for (Index k = 0; k < d; ++k) {
        out.values(k) = ev(order[k]);
        Vector v = solver.eigenvectors().col(order[k]);
        for (Index i = 0; i < d; ++i) {
            if (std::abs(v(i)) > 1e-12) {
                if (v(i) < 0) v = -v;
                break;
            }
        }
        out.vectors.col(k) = v;
    }
    return out;
}

double pd_floor(double largest_eigenvalue) { return 1e-12 * largest_eigenvalue; }

SymMatrix pd_inverse_sqrt(const SymMatrix& s) {
    const auto eig = sym_eigen(s);
    const double largest = eig.values(0);
    const double smallest = eig.values(eig.values.size() - 1);
    if (largest <= 0.0 || smallest <= pd_floor(largest)) {
        std::ostringstream os;
        os << "matrix is not positive definite (smallest eigenvalue " << smallest << ", largest " << largest << ")";
        fail(ErrorKind::Singular, os.str());
    }
    const Vector inv_sqrt = eig.values.array().rsqrt();
    return SymMatrix(eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose());
}

namespace {

Matrix clip_eigenvalues(const Matrix& m, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    Vector vals = solver.eigenvalues().cwiseMax(floor);
    Matrix out = solver.eigenvectors() * vals.asDiagonal() * solver.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

bool has_unit_diagonal(const Matrix& m) { return (m.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-8; }

}  // namespace

SymMatrix nearest_psd(const SymMatrix& s, bool unit_diagonal) {
    const Matrix& a = s.matrix();
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (min_eig >= 0.0 && (!unit_diagonal || has_unit_diagonal(a))) return s;

    if (!unit_diagonal) return SymMatrix(clip_eigenvalues(a, 0.0));

    Matrix y = a;
    Matrix correction = Matrix::Zero(a.rows(), a.cols());
    Matrix x;
    double change = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < kMaxPsdIter; ++iter) {
        const Matrix r = y - correction;
        x = clip_eigenvalues(r, 0.0);
        correction = x - r;
        Matrix y_next = x;
        y_next.diagonal().setOnes();
        change = (y_next - y).norm();
        y = std::move(y_next);
        if (change < kPsdTol) break;
    }
    if (change >= kPsdTol) {
        std::ostringstream os;
        os << "nearest PSD projection did not converge in " << kMaxPsdIter << " iterations (last change " << change
           << ")";
        fail(ErrorKind::Convergence, os.str());
    }
    // x is PSD with diagonal within ~tol of one; a diagonal congruence restores
    // the unit diagonal without leaving the PSD cone.
    x = clip_eigenvalues(x, 0.0);
    const Vector inv_sd = x.diagonal().array().max(std::numeric_limits<double>::min()).rsqrt();
    Matrix out = inv_sd.asDiagonal() * x * inv_sd.asDiagonal();
    out.diagonal().setOnes();
    return SymMatrix(std::move(out));
}

// Series and continued fraction evaluations of the incomplete gamma function.
double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) fail(ErrorKind::Input, "incomplete gamma requires a > 0");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double log_prefix = a * std::log(x) - x - std::lgamma(a);
    constexpr double eps = 1e-17;
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < 10000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < std::abs(sum) * eps) break;
        }
        return std::min(1.0, sum * std::exp(log_prefix));
    }
    // Modified Lentz for the upper tail Q(a, x).
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

double chi2_cdf(int df, double x) {
    if (df <= 0) fail(ErrorKind::Input, "chi-squared degrees of freedom must be positive");
    return regularized_gamma_p(0.5 * df, 0.5 * x);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::Input, "normal quantile requires 0 < p < 1");
    // Acklam's rational approximation.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double low = 0.02425;
    if (p < low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double chi2_quantile(int df, double p) {
    if (df <= 0) fail(ErrorKind::Input, "chi-squared degrees of freedom must be positive");
    if (!(p > 0.0 && p < 1.0)) {
        std::ostringstream os;
        os << "chi-squared quantile requires 0 < p < 1, got " << p;
        fail(ErrorKind::Input, os.str());
    }
    const double k = df;
    const double a = 0.5 * k;

    // Wilson-Hilferty start.
    const double z = normal_quantile(p);
    const double t = 2.0 / (9.0 * k);
    double q = k * std::pow(std::max(1.0 - t + z * std::sqrt(t), 1e-3), 3);

    // Bracket [lo, hi] with cdf(lo) < p <= cdf(hi).
    double lo = 0.0;
    double hi = std::max(2.0 * q, k + 10.0);
    while (chi2_cdf(df, hi) < p) hi *= 2.0;
    if (!(q > lo && q < hi)) q = 0.5 * (lo + hi);

    const double log_norm = a * std::log(2.0) + std::lgamma(a);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = chi2_cdf(df, q) - p;
        if (f == 0.0) return q;
        if (f < 0.0)
            lo = q;
        else
            hi = q;
        const double density = std::exp((a - 1.0) * std::log(q) - 0.5 * q - log_norm);
        double next = q - f / density;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        if (std::abs(next - q) <= 1e-15 * std::max(1.0, q)) return next;
        q = next;
        if (hi - lo <= 1e-15 * std::max(1.0, q)) return q;
    }
    return q;
}

double mahalanobis2(const Vector& z, const Vector& mu, const SymMatrix& inv_root) {
    if (z.size() != mu.size() || z.size() != inv_root.dim()) {
        std::ostringstream os;
        os << "dimension mismatch in Mahalanobis distance (z: " << z.size() << ", mu: " << mu.size()
           << ", matrix: " << inv_root.dim() << ")";
        fail(ErrorKind::Input, os.str());
    }
    return (inv_root.matrix() * (z - mu)).squaredNorm();
}

}  // namespace cellwise
