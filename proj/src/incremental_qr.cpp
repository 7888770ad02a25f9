#include "incremental_qr.hpp"

#include <sstream>

namespace cellwise {

IncrementalQr::IncrementalQr(Index rows, Index capacity)
    : q_(Matrix::Zero(rows, capacity)), r_(Matrix::Zero(capacity, capacity)) {}

void IncrementalQr::append(const Vector& column) {
    if (column.size() != q_.rows()) fail(ErrorKind::Input, "QR append: column length mismatch");
    if (k_ == r_.cols()) fail(ErrorKind::Input, "QR append: capacity exhausted");
    const double norm0 = column.norm();
    Vector v = column;
    Vector coef = Vector::Zero(k_);
    for (int pass = 0; pass < 2; ++pass) {
        if (k_ == 0) break;
        const Vector h = q_.leftCols(k_).transpose() * v;
        v.noalias() -= q_.leftCols(k_) * h;
        coef += h;
    }
    const double rkk = v.norm();
    if (!(rkk > 1e-12 * norm0) || norm0 == 0.0) {
        std::ostringstream os;
        os << "singular active-set cross-product: column " << k_ << " is linearly dependent (residual norm " << rkk
           << ")";
        fail(ErrorKind::Singular, os.str());
    }
    r_.col(k_).head(k_) = coef;
    r_(k_, k_) = rkk;
    q_.col(k_) = v / rkk;
    ++k_;
}

Vector IncrementalQr::solve_r(const Vector& b) const {
    return r().triangularView<Eigen::Upper>().solve(b.head(k_));
}

Vector IncrementalQr::solve_rt(const Vector& b) const {
    return r().transpose().triangularView<Eigen::Lower>().solve(b.head(k_));
}

}  // namespace cellwise
