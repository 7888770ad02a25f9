#pragma once

// Dense linear algebra and special functions shared by the rest of the library.

#include <Eigen/Dense>

#include "error.hpp"

namespace cellwise {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Symmetric matrix with finite entries. Symmetry is enforced on construction:
/// inputs that are symmetric up to roundoff are averaged with their transpose,
/// anything further off is rejected.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix m);

    static SymMatrix identity(Index d);
    static SymMatrix diagonal(const Vector& diag);

    Index dim() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    double operator()(Index i, Index j) const { return m_(i, j); }

    /// Principal submatrix on the given (sorted or unsorted) index list.
    SymMatrix sub(const std::vector<Index>& idx) const;

private:
    Matrix m_;
};

struct EigenDecomposition {
    Vector values;   // nonincreasing
    Matrix vectors;  // orthonormal columns, first nonzero component of each positive
};

EigenDecomposition sym_eigen(const SymMatrix& s);

/// Relative positive-definiteness threshold used throughout: 1e-12 times the
/// largest eigenvalue.
double pd_floor(double largest_eigenvalue);

/// Unique symmetric positive definite R with R*S*R = I.
SymMatrix pd_inverse_sqrt(const SymMatrix& s);

/// Nearest positive semidefinite matrix in Frobenius norm. With unit_diagonal
/// this is the nearest correlation matrix (alternating projections with
/// Dykstra's correction).
SymMatrix nearest_psd(const SymMatrix& s, bool unit_diagonal);

inline constexpr int kMaxPsdIter = 200;
inline constexpr double kPsdTol = 1e-9;

/// Regularized lower incomplete gamma function P(a, x).
double regularized_gamma_p(double a, double x);

double chi2_cdf(int df, double x);
double chi2_quantile(int df, double p);

/// Standard normal quantile (rational approximation, ~1e-9 relative accuracy).
double normal_quantile(double p);

/// Squared Mahalanobis distance ||inv_root * (z - mu)||^2.
double mahalanobis2(const Vector& z, const Vector& mu, const SymMatrix& inv_root);

bool is_finite(const Matrix& m);

}  // namespace cellwise
