#pragma once

#include "numkit.hpp"

namespace cellwise {

/// Reference distribution for cell detection: location, covariance and the
/// cached inverse roots used by the LAR trace.
struct CovModel {
    Vector mu;
    SymMatrix sigma;
    SymMatrix inv_root;       // Sigma^{-1/2}
    Vector sd;                // sqrt(diag(Sigma))
    SymMatrix corr_inv_root;  // inverse root of the correlation matrix of Sigma

    /// Validates dimensions and positive definiteness, then caches the roots.
    static CovModel make(Vector mu, SymMatrix sigma);

    Index dim() const { return mu.size(); }
};

}  // namespace cellwise
