#include "larpath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "incremental_qr.hpp"

namespace cellwise::larpath {

Vector huber_weights(const Vector& z, const Vector& mu, const Vector& variances) {
    if (z.size() != mu.size() || z.size() != variances.size())
        fail(ErrorKind::Input, "huber_weights: dimension mismatch");
    Vector w(z.size());
    for (Index j = 0; j < z.size(); ++j) {
        if (!(variances(j) > 0.0)) {
            std::ostringstream os;
            os << "huber_weights: variance of cell " << j << " is not positive (" << variances(j) << ")";
            fail(ErrorKind::Input, os.str());
        }
        if (std::isnan(z(j))) {
            w(j) = 1.0;
            continue;
        }
        const double outlyingness = std::abs(z(j) - mu(j)) / std::sqrt(variances(j));
        w(j) = outlyingness > kHuberCutoff ? kHuberCutoff / outlyingness : 1.0;
    }
    return w;
}

DesignPair build_design(const Vector& z, const Vector& mu, const SymMatrix& inv_root, const Vector& weights) {
    const Index d = z.size();
    if (mu.size() != d || inv_root.dim() != d || weights.size() != d)
        fail(ErrorKind::Input, "build_design: dimension mismatch");
    if (!z.allFinite()) fail(ErrorKind::Input, "build_design: row has non-finite entries (substitute placeholders)");
    for (Index j = 0; j < d; ++j) {
        if (!(weights(j) > 0.0 && weights(j) <= 1.0)) {
            std::ostringstream os;
            os << "build_design: weight of cell " << j << " must lie in (0, 1], got " << weights(j);
            fail(ErrorKind::Input, os.str());
        }
    }
    DesignPair out;
    out.response = inv_root.matrix() * (z - mu);
    out.design = inv_root.matrix() * weights.cwiseInverse().asDiagonal();
    out.weights = weights;
    return out;
}

namespace {

// Records the active-set OLS fit after the latest QR append.
class StepRecorder {
public:
    StepRecorder(const DesignPair& pair, LarPath& path)
        : pair_(pair), path_(path), residual_(pair.response), qty_(pair.response.size()) {
        path_.steps.push_back({residual_.squaredNorm(), 0.0, Vector()});
    }

    void record(const IncrementalQr& qr) {
        const Index k = qr.size();
        const double proj = qr.q().col(k - 1).dot(residual_);
        qty_(k - 1) = proj;
        residual_ -= proj * qr.q().col(k - 1);
        const Vector beta = qr.solve_r(qty_.head(k));
        Vector theta(k);
        for (Index a = 0; a < k; ++a) theta(a) = beta(a) / pair_.weights(path_.order[a]);
        const double rss = residual_.squaredNorm();
        const double delta = std::max(0.0, path_.steps.back().rss - rss);
        path_.steps.push_back({rss, delta, std::move(theta)});
    }

    // Residual of the OLS fit on the cells recorded so far.
    const Vector& residual() const { return residual_; }

private:
    const DesignPair& pair_;
    LarPath& path_;
    Vector residual_;
    Vector qty_;
};

}  // namespace

LarPath lar_trace(const DesignPair& pair, const std::vector<Index>& forced) {
    const Matrix& x = pair.design;
    const Vector& y = pair.response;
    const Index d = y.size();
    if (x.rows() != d || x.cols() != d || pair.weights.size() != d)
        fail(ErrorKind::Input, "lar_trace: design must be square and match the response");
    if (static_cast<Index>(forced.size()) > d) fail(ErrorKind::Input, "lar_trace: more forced cells than cells");

    std::vector<bool> active(static_cast<size_t>(d), false);
    for (Index j : forced) {
        if (j < 0 || j >= d) fail(ErrorKind::Input, "lar_trace: forced index out of range");
        if (active[j]) fail(ErrorKind::Input, "lar_trace: duplicate forced index");
        active[j] = true;
    }

    LarPath path;
    path.order.reserve(static_cast<size_t>(d));
    path.steps.reserve(static_cast<size_t>(d) + 1);
    path.forced_count = static_cast<Index>(forced.size());

    IncrementalQr qr(d, d);
    StepRecorder recorder(pair, path);

    const Vector grad0 = x.transpose() * y;
    std::vector<Index> forced_order(forced);
    std::stable_sort(forced_order.begin(), forced_order.end(), [&](Index a, Index b) {
        const double ga = std::abs(grad0(a));
        const double gb = std::abs(grad0(b));
        return ga != gb ? ga > gb : a < b;
    });
    for (Index j : forced_order) {
        path.order.push_back(j);
        qr.append(x.col(j));
        recorder.record(qr);
    }
    if (path.dim() == d) return path;

    // LAR phase on the problem with the forced columns partialled out. The
    // running residual starts at the OLS residual of the forced fit and stays
    // orthogonal to the forced columns, so x_j' r equals the partialled
    // correlation for every inactive j.
    const Index f = path.forced_count;
    Vector r = recorder.residual();
    Vector corr = x.transpose() * r;
    double col_norm_max = 0.0;
    for (Index j = 0; j < d; ++j) col_norm_max = std::max(col_norm_max, x.col(j).norm());
    const double zero_tol = 1e-13 * y.norm() * col_norm_max;

    std::vector<double> signs;
    auto enter = [&](Index j) {
        active[j] = true;
        path.order.push_back(j);
        signs.push_back(corr(j) < 0.0 ? -1.0 : 1.0);
        qr.append(x.col(j));
        recorder.record(qr);
    };

    // First LAR variable: largest |correlation|, lower index on ties.
    double big = -1.0;
    Index first = -1;
    for (Index j = 0; j < d; ++j) {
        if (!active[j] && std::abs(corr(j)) > big) {
            big = std::abs(corr(j));
            first = j;
        }
    }
    double c_max = big;
    enter(first);

    while (path.dim() < d) {
        if (!(c_max > zero_tol)) {
            // Nothing left to explain: remaining cells enter in index order.
            for (Index j = 0; j < d; ++j)
                if (!active[j]) enter(j);
            break;
        }
        const Index k = qr.size();
        const Index m = k - f;
        // Equiangular direction from the trailing block of R, whose Gram
        // matrix is the partialled cross-product of the LAR-active columns.
        const Matrix r22 = qr.r().bottomRightCorner(m, m);
        const Vector s = Eigen::Map<const Vector>(signs.data(), m);
        const Vector tmp = r22.transpose().triangularView<Eigen::Lower>().solve(s);
        const Vector g = r22.triangularView<Eigen::Upper>().solve(tmp);
        const double angle = 1.0 / std::sqrt(s.dot(g));
        const Vector w = angle * g;
        const Vector u = qr.q().rightCols(m) * (r22 * w);

        double step = std::numeric_limits<double>::infinity();
        Index next = -1;
        for (Index j = 0; j < d; ++j) {
            if (active[j]) continue;
            const double a = x.col(j).dot(u);
            double cand = std::numeric_limits<double>::infinity();
            if (angle - a > 0.0) cand = std::min(cand, std::max(0.0, c_max - corr(j)) / (angle - a));
            if (angle + a > 0.0) cand = std::min(cand, std::max(0.0, c_max + corr(j)) / (angle + a));
            if (cand < step) {
                step = cand;
                next = j;
            }
        }
        if (next < 0) {
            // No inactive correlation catches up before the OLS endpoint.
            step = c_max / angle;
            for (Index j = 0; j < d; ++j)
                if (!active[j]) {
                    next = j;
                    break;
                }
        }
        if (step <= 1e-14) step = 0.0;
        r -= step * u;
        c_max -= step * angle;
        for (Index j = 0; j < d; ++j)
            if (!active[j]) corr(j) = x.col(j).dot(r);
        enter(next);
    }
    return path;
}

}  // namespace cellwise::larpath
