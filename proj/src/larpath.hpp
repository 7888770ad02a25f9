#pragma once

// Weighted least angle regression trace over the cells of one row.
//
// The regression has response Y = Sigma^{-1/2}(z - mu) and design
// X = Sigma^{-1/2} W^{-1}, where W holds Huber weights of the cells. The
// coefficient of cell j in the original units is delta_j = beta_j / w_j, and
// the full least squares fit delta = z - mu drives the squared Mahalanobis
// distance of the row to zero.

#include <vector>

#include "numkit.hpp"

namespace cellwise::larpath {

inline constexpr double kHuberCutoff = 1.5;

/// w_j = min(1, 1.5 / O_j) with O_j = |z_j - mu_j| / sqrt(var_j). Missing
/// (NaN) cells get weight one.
Vector huber_weights(const Vector& z, const Vector& mu, const Vector& variances);

struct DesignPair {
    Vector response;  // Sigma^{-1/2}(z - mu)
    Matrix design;    // Sigma^{-1/2} W^{-1}
    Vector weights;   // w_j in (0, 1]
};

DesignPair build_design(const Vector& z, const Vector& mu, const SymMatrix& inv_root, const Vector& weights);

struct LarStep {
    double rss = 0.0;
    double delta = 0.0;  // rss of the previous step minus rss of this one
    Vector theta;        // OLS fit of the active cells, in path order, original units
};

struct LarPath {
    std::vector<Index> order;    // cell entry order; forced cells first
    std::vector<LarStep> steps;  // steps[k] describes the first k cells of order
    Index forced_count = 0;

    Index dim() const { return static_cast<Index>(order.size()); }
};

/// Runs LAR without intercept or normalization. Forced cells are treated as
/// unpenalized: they occupy the first positions (ranked among themselves by
/// initial gradient magnitude) and the remaining cells follow the equiangular
/// path of the regression with the forced columns partialled out.
LarPath lar_trace(const DesignPair& pair, const std::vector<Index>& forced);

}  // namespace cellwise::larpath
