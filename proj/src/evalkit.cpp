#include "evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace cellwise::evalkit {

namespace {

SymMatrix checked_inverse_root(const SymMatrix& b) {
    try {
        return pd_inverse_sqrt(b);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Singular) fail(ErrorKind::Input, std::string("reference matrix: ") + e.what());
        throw;
    }
}

void require_same_dim(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) {
        std::ostringstream os;
        os << "dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
        fail(ErrorKind::Input, os.str());
    }
}

// eta at or below this fraction of the largest eigenvalue counts as zero.
constexpr double kRankTol = 1e-12;

}  // namespace

Vector relative_eigenvalues(const SymMatrix& a, const SymMatrix& b) {
    require_same_dim(a, b);
    const SymMatrix root = checked_inverse_root(b);
    return sym_eigen(SymMatrix(root.matrix() * a.matrix() * root.matrix())).values;
}

double discrepancy(const SymMatrix& a, const SymMatrix& b) {
    const Vector eta = relative_eigenvalues(a, b);
    const double top = eta(0);
    const double bottom = eta(eta.size() - 1);
    if (bottom < -1e-8 * std::max(1.0, std::abs(top))) {
        std::ostringstream os;
        os << "first matrix is not positive semidefinite (eigenvalue " << bottom << ")";
        fail(ErrorKind::Input, os.str());
    }
    if (!(top > 0.0) || bottom <= kRankTol * top) return std::numeric_limits<double>::infinity();
    if (a.matrix() == b.matrix()) return 0.0;
    double sum = 0.0;
    for (Index j = 0; j < eta.size(); ++j) {
        const double x = eta(j) - 1.0;
        sum += x - std::log1p(x);
    }
    return std::max(0.0, sum);
}

double kl_gaussian(const SymMatrix& a, const SymMatrix& b) {
    require_same_dim(a, b);
    Eigen::LLT<Matrix> la(a.matrix());
    Eigen::LLT<Matrix> lb(b.matrix());
    if (la.info() != Eigen::Success || lb.info() != Eigen::Success)
        fail(ErrorKind::Singular, "Gaussian KL divergence requires positive definite matrices");
    const Matrix la_m = la.matrixL();
    const Matrix m = lb.matrixL().solve(la_m);
    const double trace = m.squaredNorm();
    const double logdet_a = 2.0 * la_m.diagonal().array().log().sum();
    const double logdet_b = 2.0 * Matrix(lb.matrixL()).diagonal().array().log().sum();
    return trace - static_cast<double>(a.dim()) - (logdet_a - logdet_b);
}

double discrepancy_symmetric(const SymMatrix& a, const SymMatrix& b, SymmetricKind kind) {
    require_same_dim(a, b);
    {
        Eigen::LLT<Matrix> la(a.matrix());
        if (la.info() != Eigen::Success)
            fail(ErrorKind::Input, "symmetrized discrepancy requires positive definite matrices");
    }
    const Vector eta = relative_eigenvalues(a, b);
    if (a.matrix() == b.matrix()) return 0.0;
    double sum = 0.0;
    for (Index j = 0; j < eta.size(); ++j) {
        const double x = eta(j) - 1.0;
        sum += kind == SymmetricKind::PlusInverse ? x * x / eta(j) : std::abs(std::log1p(x));
    }
    return std::max(0.0, sum);
}

SymMatrix gen_a09(Index d) {
    if (d < 1) fail(ErrorKind::Input, "dimension must be positive");
    Matrix m(d, d);
    for (Index j = 0; j < d; ++j)
        for (Index h = 0; h < d; ++h) m(j, h) = std::pow(-0.9, static_cast<double>(std::abs(j - h)));
    return SymMatrix(std::move(m));
}

SymMatrix gen_randcorr(Index d, Rng& rng, double eta) {
    if (d < 2) fail(ErrorKind::Input, "random correlation matrices need d >= 2");
    if (!(eta > 0.0)) fail(ErrorKind::Input, "eta must be positive");
    Matrix partial = Matrix::Zero(d, d);
    Matrix s = Matrix::Identity(d, d);
    double b = eta + 0.5 * static_cast<double>(d - 1);
    for (Index k = 0; k < d - 1; ++k) {
        b -= 0.5;
        for (Index i = k + 1; i < d; ++i) {
            partial(k, i) = 2.0 * rng.beta(b, b) - 1.0;
            double p = partial(k, i);
            for (Index l = k - 1; l >= 0; --l)
                p = p * std::sqrt((1.0 - partial(l, i) * partial(l, i)) * (1.0 - partial(l, k) * partial(l, k))) +
                    partial(l, i) * partial(l, k);
            s(k, i) = s(i, k) = p;
        }
    }
    std::vector<Index> perm(static_cast<size_t>(d));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = d - 1; i > 0; --i)
        std::swap(perm[i], perm[static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
    Matrix out(d, d);
    for (Index a = 0; a < d; ++a)
        for (Index c = 0; c < d; ++c) out(a, c) = s(perm[a], perm[c]);
    out.diagonal().setOnes();
    return SymMatrix(std::move(out));
}

Matrix gen_gaussian(Index n, const SymMatrix& sigma, Rng& rng) {
    Eigen::LLT<Matrix> llt(sigma.matrix());
    if (llt.info() != Eigen::Success) fail(ErrorKind::Singular, "generator covariance is not positive definite");
    const Matrix l = llt.matrixL();
    const Index d = sigma.dim();
    Matrix out(n, d);
    Vector e(d);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) e(j) = rng.normal();
        out.row(i) = (l * e).transpose();
    }
    return out;
}

Vector structured_outlier(const SymMatrix& sigma, double magnitude) {
    const auto eig = sym_eigen(sigma);
    const Vector u = eig.vectors.col(sigma.dim() - 1);
    Eigen::LLT<Matrix> llt(sigma.matrix());
    if (llt.info() != Eigen::Success || !(eig.values(sigma.dim() - 1) > pd_floor(eig.values(0))))
        fail(ErrorKind::Singular, "restricted covariance is singular");
    const double md = std::sqrt(u.dot(llt.solve(u)));
    return magnitude * u / md;
}

namespace {

// k distinct draws from pool (partial Fisher-Yates).
std::vector<Index> sample_without_replacement(std::vector<Index> pool, Index k, Rng& rng) {
    const auto n = static_cast<Index>(pool.size());
    for (Index i = 0; i < k; ++i) {
        const auto r = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[i], pool[r]);
    }
    pool.resize(static_cast<size_t>(k));
    return pool;
}

Index count_for(Index n, double frac) { return static_cast<Index>(std::floor(static_cast<double>(n) * frac + 1e-9)); }

void check_spec(const ContaminationSpec& spec) {
    if (spec.epsilon < 0.0 || spec.row_frac < 0.0 || spec.gamma < 0.0)
        fail(ErrorKind::Input, "contamination fractions and gamma must be nonnegative");
    if (spec.mode == ContaminationMode::Mixed && spec.epsilon + spec.row_frac > 1.0)
        fail(ErrorKind::Input, "cell and row fractions must sum to at most one");
    if (spec.epsilon > 1.0 || spec.row_frac > 1.0) fail(ErrorKind::Input, "contamination fractions must be <= 1");
}

void apply_cellwise(Contaminated& out, const SymMatrix& sigma, const ContaminationSpec& spec, Rng& rng) {
    const Index n = out.data.rows();
    const Index d = out.data.cols();
    if (spec.epsilon <= 0.0) return;
    const Index per_col = count_for(n, spec.epsilon);
    if (per_col < 1) fail(ErrorKind::Input, "epsilon * n must be at least one per column");
    std::vector<Index> pool;
    for (Index i = 0; i < n; ++i)
        if (!out.outlying_rows[i]) pool.push_back(i);
    if (per_col > static_cast<Index>(pool.size()))
        fail(ErrorKind::Input, "not enough eligible rows for the requested cell fraction");

    CellMask cells = CellMask::Constant(n, d, false);
    for (Index j = 0; j < d; ++j)
        for (Index i : sample_without_replacement(pool, per_col, rng)) cells(i, j) = true;

    for (Index i = 0; i < n; ++i) {
        std::vector<Index> k_set;
        for (Index j = 0; j < d; ++j)
            if (cells(i, j)) k_set.push_back(j);
        if (k_set.empty()) continue;
        const double k = static_cast<double>(k_set.size());
        const Vector v = structured_outlier(sigma.sub(k_set), spec.gamma * std::sqrt(k));
        for (size_t a = 0; a < k_set.size(); ++a) {
            out.data.values(i, k_set[a]) = v(static_cast<Index>(a));
            out.truth(i, k_set[a]) = true;
        }
    }
}

void apply_rowwise(Contaminated& out, const SymMatrix& sigma, const ContaminationSpec& spec, Rng& rng) {
    const Index n = out.data.rows();
    const Index d = out.data.cols();
    const Index rows = count_for(n, spec.row_frac);
    if (spec.row_frac > 0.0 && rows < 1) fail(ErrorKind::Input, "row_frac * n must be at least one");
    if (rows == 0) return;
    const double dd = static_cast<double>(d);
    const Vector v = structured_outlier(sigma, spec.gamma * dd * std::sqrt(dd));
    std::vector<Index> pool(static_cast<size_t>(n));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index i : sample_without_replacement(pool, rows, rng)) {
        out.data.values.row(i) = v.transpose();
        out.truth.row(i).setConstant(true);
        out.outlying_rows[i] = true;
    }
}

Contaminated start(const DataTable& clean, const SymMatrix& sigma) {
    if (sigma.dim() != clean.cols()) fail(ErrorKind::Input, "covariance dimension does not match the data");
    return {clean, CellMask::Constant(clean.rows(), clean.cols(), false),
            std::vector<bool>(static_cast<size_t>(clean.rows()), false)};
}

}  // namespace

Contaminated contaminate_cellwise(const DataTable& clean, const SymMatrix& sigma, const ContaminationSpec& spec) {
    check_spec(spec);
    auto out = start(clean, sigma);
    Rng rng = Rng::substream(spec.seed, spec.replication, Stream::Positions);
    apply_cellwise(out, sigma, spec, rng);
    return out;
}

Contaminated contaminate_rowwise(const DataTable& clean, const SymMatrix& sigma, const ContaminationSpec& spec) {
    check_spec(spec);
    auto out = start(clean, sigma);
    Rng rng = Rng::substream(spec.seed, spec.replication, Stream::Positions);
    apply_rowwise(out, sigma, spec, rng);
    return out;
}

Contaminated contaminate(const DataTable& clean, const SymMatrix& sigma, const ContaminationSpec& spec) {
    switch (spec.mode) {
        case ContaminationMode::Cellwise: return contaminate_cellwise(clean, sigma, spec);
        case ContaminationMode::Rowwise: return contaminate_rowwise(clean, sigma, spec);
        case ContaminationMode::Mixed: break;
    }
    check_spec(spec);
    auto out = start(clean, sigma);
    Rng rng = Rng::substream(spec.seed, spec.replication, Stream::Positions);
    apply_rowwise(out, sigma, spec, rng);
    apply_cellwise(out, sigma, spec, rng);
    return out;
}

ScoreReport score_flags(const CellMask& flagged, const CellMask& truth) {
    if (flagged.rows() != truth.rows() || flagged.cols() != truth.cols())
        fail(ErrorKind::Input, "flag and truth masks differ in shape");
    ScoreReport r;
    r.n_true = truth.count();
    r.n_flagged = flagged.count();
    r.n_hit = (flagged && truth).count();
    if (r.n_true == 0) {
        r.recall_defined = false;
        r.note = "no true outlying cells; recall set to 0";
    } else {
        r.recall = static_cast<double>(r.n_hit) / static_cast<double>(r.n_true);
    }
    if (r.n_flagged == 0) {
        r.precision_defined = false;
        r.note += std::string(r.note.empty() ? "" : "; ") + "no flagged cells; precision set to 0";
    } else {
        r.precision = static_cast<double>(r.n_hit) / static_cast<double>(r.n_flagged);
    }
    r.f_score = (r.recall > 0.0 && r.precision > 0.0) ? 2.0 * r.recall * r.precision / (r.recall + r.precision) : 0.0;
    return r;
}

}  // namespace cellwise::evalkit
