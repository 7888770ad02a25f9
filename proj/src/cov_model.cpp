#include "cov_model.hpp"

#include <sstream>

namespace cellwise {

CovModel CovModel::make(Vector mu, SymMatrix sigma) {
    if (mu.size() != sigma.dim()) {
        std::ostringstream os;
        os << "model dimension mismatch: mu has " << mu.size() << " entries, sigma is " << sigma.dim() << "x"
           << sigma.dim();
        fail(ErrorKind::Input, os.str());
    }
    if (!mu.allFinite()) fail(ErrorKind::Input, "model location has non-finite entries");
    CovModel m;
    m.inv_root = pd_inverse_sqrt(sigma);
    m.sd = sigma.matrix().diagonal().cwiseSqrt();
    const Vector inv_sd = m.sd.cwiseInverse();
    m.corr_inv_root = pd_inverse_sqrt(SymMatrix(inv_sd.asDiagonal() * sigma.matrix() * inv_sd.asDiagonal()));
    m.mu = std::move(mu);
    m.sigma = std::move(sigma);
    return m;
}

}  // namespace cellwise
