#pragma once

#include "numkit.hpp"

namespace cellwise {

/// Thin QR factorization X_A = Q R grown one column at a time.
///
/// Each append orthogonalizes the new column against the current basis with
/// two passes of classical Gram-Schmidt, which keeps Q orthonormal to working
/// precision for the well-conditioned square designs used here.
class IncrementalQr {
public:
    IncrementalQr(Index rows, Index capacity);

    /// Appends a column. Throws a singularity error if it lies (numerically)
    /// in the span of the columns already present.
    void append(const Vector& column);

    Index size() const { return k_; }
    Index rows() const { return q_.rows(); }

    auto q() const { return q_.leftCols(k_); }
    auto r() const { return r_.topLeftCorner(k_, k_); }

    /// Solves R x = b for the leading size() rows.
    Vector solve_r(const Vector& b) const;
    /// Solves R' x = b for the leading size() rows.
    Vector solve_rt(const Vector& b) const;

private:
    Matrix q_;
    Matrix r_;
    Index k_ = 0;
};

}  // namespace cellwise
