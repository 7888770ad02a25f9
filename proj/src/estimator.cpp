#include "estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace cellwise::estimator {

namespace {

std::vector<double> observed(const Vector& col) {
    std::vector<double> v;
    v.reserve(static_cast<size_t>(col.size()));
    for (Index i = 0; i < col.size(); ++i)
        if (!std::isnan(col(i))) v.push_back(col(i));
    return v;
}

double median_inplace(std::vector<double>& v) {
    const size_t n = v.size();
    const size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

// (median, MAD * consistency) over the observed cells; scale 0 when fewer than
// one observation.
std::pair<double, double> robust_location_scale(const Vector& col) {
    auto v = observed(col);
    if (v.empty()) return {0.0, 0.0};
    const double med = median_inplace(v);
    for (double& x : v) x = std::abs(x - med);
    return {med, kMadConsistency * median_inplace(v)};
}

std::vector<double> average_ranks(const std::vector<double>& x) {
    const size_t n = x.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    for (size_t i = 0; i < n;) {
        size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

Matrix pd_guard(const Matrix& s, int& clipped) {
    if (!s.allFinite()) fail(ErrorKind::Singular, "covariance update produced non-finite entries");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
    const Vector& vals = solver.eigenvalues();
    const double largest = vals(vals.size() - 1);
    if (!(largest > 0.0)) fail(ErrorKind::Singular, "covariance update is degenerate (no positive eigenvalue)");
    const double floor = pd_floor(largest);
    if (vals(0) > floor) return s;
    Vector clippedv = vals;
    for (Index k = 0; k < clippedv.size(); ++k) {
        if (clippedv(k) <= floor) {
            clippedv(k) = 2.0 * floor;
            ++clipped;
        }
    }
    Matrix out = solver.eigenvectors() * clippedv.asDiagonal() * solver.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

std::string column_label(const DataTable& data, Index j) {
    return j < static_cast<Index>(data.names.size()) ? data.names[j] : "V" + std::to_string(j + 1);
}

}  // namespace

Index column_cap(Index n, double max_col_frac) {
    return static_cast<Index>(std::floor(static_cast<double>(n) * max_col_frac + 1e-9));
}

std::vector<ColumnStatus> screen_columns(const DataTable& data, double max_col_frac) {
    const Index cap = column_cap(data.rows(), max_col_frac);
    std::vector<ColumnStatus> out;
    for (Index j = 0; j < data.cols(); ++j) {
        if (data.missing_count(j) > cap) {
            out.push_back(ColumnStatus::TooManyMissing);
            continue;
        }
        const auto [loc, scale] = robust_location_scale(data.values.col(j));
        out.push_back(scale > 0.0 ? ColumnStatus::Ok : ColumnStatus::ZeroScale);
    }
    return out;
}

ColumnScaler fit_scaler(const DataTable& data) {
    const Index d = data.cols();
    ColumnScaler s{Vector(d), Vector(d)};
    std::vector<std::string> bad;
    for (Index j = 0; j < d; ++j) {
        const auto [loc, scale] = robust_location_scale(data.values.col(j));
        s.locations(j) = loc;
        s.scales(j) = scale;
        if (!(scale > 0.0)) bad.push_back(column_label(data, j));
    }
    if (!bad.empty()) {
        std::ostringstream os;
        os << "columns with zero median absolute deviation:";
        for (const auto& b : bad) os << ' ' << b;
        fail(ErrorKind::Input, os.str());
    }
    return s;
}

DataTable apply_scaler(const DataTable& data, const ColumnScaler& scaler) {
    if (scaler.locations.size() != data.cols() || scaler.scales.size() != data.cols())
        fail(ErrorKind::Input, "scaler dimension does not match the table");
    DataTable out = data;
    for (Index j = 0; j < data.cols(); ++j)
        out.values.col(j) = (data.values.col(j).array() - scaler.locations(j)) / scaler.scales(j);
    return out;
}

std::pair<DataTable, ColumnScaler> standardize(const DataTable& data) {
    auto scaler = fit_scaler(data);
    auto z = apply_scaler(data, scaler);
    return {std::move(z), std::move(scaler)};
}

CovModel standardize_model(const CovModel& raw, const ColumnScaler& scaler) {
    if (raw.dim() != scaler.scales.size()) fail(ErrorKind::Input, "model and scaler dimensions differ");
    const Vector inv = scaler.scales.cwiseInverse();
    Vector mu = (raw.mu - scaler.locations).cwiseProduct(inv);
    Matrix s = inv.asDiagonal() * raw.sigma.matrix() * inv.asDiagonal();
    return CovModel::make(std::move(mu), SymMatrix(std::move(s)));
}

CovModel unstandardize_model(const CovModel& standardized, const ColumnScaler& scaler) {
    if (standardized.dim() != scaler.scales.size()) fail(ErrorKind::Input, "model and scaler dimensions differ");
    Vector mu = scaler.locations + standardized.mu.cwiseProduct(scaler.scales);
    Matrix s = scaler.scales.asDiagonal() * standardized.sigma.matrix() * scaler.scales.asDiagonal();
    return CovModel::make(std::move(mu), SymMatrix(std::move(s)));
}

DataTable clr_transform(const DataTable& data) {
    DataTable out = log_transform(data);
    for (Index i = 0; i < out.rows(); ++i) {
        double sum = 0.0;
        Index count = 0;
        for (Index j = 0; j < out.cols(); ++j) {
            if (out.missing(i, j)) continue;
            sum += out.values(i, j);
            ++count;
        }
        if (count == 0) continue;
        const double mean = sum / static_cast<double>(count);
        for (Index j = 0; j < out.cols(); ++j)
            if (!out.missing(i, j)) out.values(i, j) -= mean;
    }
    return out;
}

DataTable log_transform(const DataTable& data) {
    DataTable out = data;
    std::ostringstream bad;
    int nbad = 0;
    for (Index i = 0; i < data.rows(); ++i) {
        for (Index j = 0; j < data.cols(); ++j) {
            if (data.missing(i, j)) continue;
            const double x = data.values(i, j);
            if (!(x > 0.0) || !std::isfinite(x)) {
                if (nbad < 20) bad << (nbad ? ", " : "") << "row " << i + 1 << " column " << column_label(data, j) << " ("
                                   << x << ")";
                ++nbad;
                continue;
            }
            out.values(i, j) = std::log(x);
        }
    }
    if (nbad > 0) {
        std::ostringstream os;
        os << nbad << " nonpositive cell(s) cannot be log-transformed: " << bad.str() << (nbad > 20 ? ", ..." : "");
        fail(ErrorKind::Input, os.str());
    }
    return out;
}

double spearman(const Vector& a, const Vector& b, Index* complete_pairs) {
    std::vector<double> xa, xb;
    for (Index i = 0; i < a.size(); ++i) {
        if (std::isnan(a(i)) || std::isnan(b(i))) continue;
        xa.push_back(a(i));
        xb.push_back(b(i));
    }
    if (complete_pairs) *complete_pairs = static_cast<Index>(xa.size());
    if (xa.size() < 2) return 0.0;
    const auto ra = average_ranks(xa);
    const auto rb = average_ranks(xb);
    const double n = static_cast<double>(ra.size());
    const double mean = (n + 1.0) / 2.0;
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - mean) * (rb[i] - mean);
        saa += (ra[i] - mean) * (ra[i] - mean);
        sbb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CovModel initial_estimate(const DataTable& data, const InitialOption& option) {
    const Index n = data.rows();
    const Index d = data.cols();
    if (n <= d) {
        std::ostringstream os;
        os << "estimation requires more rows than columns (n = " << n << ", d = " << d << ")";
        fail(ErrorKind::Shape, os.str());
    }
    switch (option.method) {
        case InitialMethod::Diagonal: return CovModel::make(Vector::Zero(d), SymMatrix::identity(d));
        case InitialMethod::External: {
            if (!option.external) fail(ErrorKind::Input, "external initial estimate requested without a model");
            if (option.external->dim() != d) fail(ErrorKind::Input, "external initial model has the wrong dimension");
            return CovModel::make(option.external->mu, option.external->sigma);
        }
        case InitialMethod::Rank: break;
    }
    Matrix r = Matrix::Identity(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index h = j + 1; h < d; ++h) {
            Index pairs = 0;
            const double rho = spearman(data.values.col(j), data.values.col(h), &pairs);
            if (pairs < 3) {
                std::ostringstream os;
                os << "columns " << column_label(data, j) << " and " << column_label(data, h) << " have only " << pairs
                   << " complete pairs";
                fail(ErrorKind::Sparsity, os.str());
            }
            r(j, h) = r(h, j) = 2.0 * std::sin(M_PI * rho / 6.0);
        }
    }
    Matrix c = nearest_psd(SymMatrix(r), true).matrix();
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(c, Eigen::EigenvaluesOnly).eigenvalues()(0);
    const double ridge = std::max(0.0, 1e-6 - min_eig);
    if (ridge > 0.0) {
        c.diagonal().array() += ridge;
        const Vector inv_sd = c.diagonal().cwiseSqrt().cwiseInverse();
        c = inv_sd.asDiagonal() * c * inv_sd.asDiagonal();
        c.diagonal().setOnes();
    }
    return CovModel::make(Vector::Zero(d), SymMatrix(std::move(c)));
}

FlagSet d_step(const DataTable& data, const CovModel& model, double q, Index max_col) {
    const Index n = data.rows();
    const Index d = data.cols();
    if (model.dim() != d) fail(ErrorKind::Input, "model dimension does not match the data");

    std::vector<cellhandler::RowTrace> traces;
    traces.reserve(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) traces.push_back(cellhandler::trace_row(data.values.row(i).transpose(), model));

    struct Entry {
        double criterion;
        Index row;
        Index position;
    };
    std::vector<Entry> entries;
    std::vector<Index> counts(static_cast<size_t>(d), 0);
    std::vector<Index> prefix(static_cast<size_t>(n), 0);
    for (Index i = 0; i < n; ++i) {
        const auto& t = traces[i];
        prefix[i] = t.path.forced_count;
        for (Index k = 0; k < t.path.forced_count; ++k) ++counts[t.path.order[k]];
        for (Index k = t.path.forced_count; k < d; ++k)
            entries.push_back({t.criteria(t.path.order[k]), i, k});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.criterion != b.criterion) return a.criterion > b.criterion;
        if (a.row != b.row) return a.row < b.row;
        return a.position < b.position;
    });

    std::vector<bool> locked(static_cast<size_t>(n), false);
    for (const auto& e : entries) {
        if (locked[e.row]) continue;
        const Index col = traces[e.row].path.order[e.position];
        if (!(e.criterion > q) || counts[col] >= max_col) {
            locked[e.row] = true;
            continue;
        }
        ++counts[col];
        ++prefix[e.row];
    }

    FlagSet out;
    out.column_counts = counts;
    out.imputed = data.values;
    out.row_cells.resize(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const auto& t = traces[i];
        const Index m = prefix[i];
        if (m == 0) continue;
        const auto det = cellhandler::detect_prefix(t, m);
        out.imputed.row(i) = det.imputed.transpose();
        out.row_cells[i] = det.flagged;
        std::vector<Index> cols = det.flagged;
        std::sort(cols.begin(), cols.end());
        for (Index j : cols) {
            out.cells.push_back({i, j, data.values(i, j), det.imputed(j), det.residuals(j), det.criteria(j),
                                 t.missing[j]});
        }
    }
    return out;
}

IStepResult i_step(const DataTable& data, const FlagSet& flags, const CovModel& prev) {
    const Index n = data.rows();
    const Index d = data.cols();
    if (flags.imputed.rows() != n || flags.imputed.cols() != d)
        fail(ErrorKind::Input, "flag set does not match the data shape");
    if (!flags.imputed.allFinite()) fail(ErrorKind::Input, "imputed table still has missing cells");
    if (prev.dim() != d) fail(ErrorKind::Input, "model dimension does not match the data");

    const Matrix& x = flags.imputed;
    Vector mu = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - mu.transpose();
    Matrix s = centered.transpose() * centered;

    // Conditional covariance of an imputed block given the untouched block is
    // the inverse of the corresponding block of the precision matrix.
    const Matrix precision = prev.inv_root.matrix() * prev.inv_root.matrix();
    for (const auto& cells : flags.row_cells) {
        if (cells.empty()) continue;
        std::vector<Index> idx = cells;
        std::sort(idx.begin(), idx.end());
        const auto m = static_cast<Index>(idx.size());
        Matrix block(m, m);
        for (Index a = 0; a < m; ++a)
            for (Index b = 0; b < m; ++b) block(a, b) = precision(idx[a], idx[b]);
        Eigen::LLT<Matrix> llt(block);
        if (llt.info() != Eigen::Success) fail(ErrorKind::Singular, "precision block is not positive definite");
        const Matrix cond = llt.solve(Matrix::Identity(m, m));
        for (Index a = 0; a < m; ++a)
            for (Index b = 0; b < m; ++b) s(idx[a], idx[b]) += cond(a, b);
    }
    s /= static_cast<double>(n);
    s = 0.5 * (s + s.transpose());

    IStepResult out;
    s = pd_guard(s, out.clipped_eigenvalues);
    out.model = CovModel::make(std::move(mu), SymMatrix(std::move(s)));
    return out;
}

void validate(const DiConfig& c) {
    if (!(c.quantile > 0.0 && c.quantile < 1.0)) fail(ErrorKind::Input, "quantile must lie in (0, 1)");
    if (!(c.max_col_frac > 0.0 && c.max_col_frac < 1.0)) fail(ErrorKind::Input, "max_col_frac must lie in (0, 1)");
    if (c.max_iter < 1) fail(ErrorKind::Input, "max_iter must be positive");
    if (!(c.tol > 0.0)) fail(ErrorKind::Input, "tol must be positive");
}

std::vector<FlaggedCell> detect_cells(const DataTable& data, const CovModel& model, const DetectOptions& options) {
    if (!(options.quantile > 0.0 && options.quantile < 1.0)) fail(ErrorKind::Input, "quantile must lie in (0, 1)");
    if (model.dim() != data.cols()) fail(ErrorKind::Input, "model dimension does not match the data");
    const ColumnScaler scaler = options.scaler ? *options.scaler : ColumnScaler::identity(data.cols());
    const DataTable z = apply_scaler(data, scaler);
    const CovModel ms = standardize_model(model, scaler);
    const Index cap = options.max_col_frac ? column_cap(data.rows(), *options.max_col_frac)
                                           : std::numeric_limits<Index>::max();
    auto flags = d_step(z, ms, chi2_quantile(1, options.quantile), cap);
    for (auto& c : flags.cells) {
        c.observed = data.values(c.row, c.col);
        c.imputed = scaler.locations(c.col) + scaler.scales(c.col) * c.imputed;
    }
    return std::move(flags.cells);
}

DiResult di_estimate(const DataTable& data, const DiConfig& config) {
    validate(config);
    const Index n = data.rows();
    const Index cap = column_cap(n, config.max_col_frac);

    DiResult result;
    for (Index j = 0; j < data.cols(); ++j) {
        if (data.missing_count(j) > cap)
            result.set_aside.push_back(j);
        else
            result.kept.push_back(j);
    }
    const auto d = static_cast<Index>(result.kept.size());
    if (d == 0) fail(ErrorKind::Shape, "no usable columns remain");
    if (n <= d) {
        std::ostringstream os;
        os << "estimation requires more rows than columns (n = " << n << ", d = " << d << ")";
        fail(ErrorKind::Shape, os.str());
    }
    const DataTable raw = data.select_columns(result.kept);
    auto [z, scaler] = standardize(raw);

    InitialOption init = config.initial;
    if (init.method == InitialMethod::External) {
        if (!init.external) fail(ErrorKind::Input, "external initial estimate requested without a model");
        CovModel ext = *init.external;
        if (ext.dim() == data.cols() && d != data.cols()) {
            Vector mu(d);
            for (Index a = 0; a < d; ++a) mu(a) = ext.mu(result.kept[a]);
            ext = CovModel::make(std::move(mu), ext.sigma.sub(result.kept));
        }
        if (ext.dim() != d) fail(ErrorKind::Input, "external initial model has the wrong dimension");
        init.external = standardize_model(ext, scaler);
    }
    CovModel model = initial_estimate(z, init);
    result.initial = unstandardize_model(model, scaler);

    const double q = chi2_quantile(1, config.quantile);
    for (int t = 1; t <= config.max_iter; ++t) {
        const FlagSet flags = d_step(z, model, q, cap);
        auto next = i_step(z, flags, model);
        result.clipped_eigenvalues += next.clipped_eigenvalues;
        const double crit = (next.model.mu - model.mu).squaredNorm() +
                            (next.model.sigma.matrix() - model.sigma.matrix()).squaredNorm();
        result.criterion_history.push_back(crit);
        result.iterations = t;
        model = std::move(next.model);
        if (crit < config.tol) {
            result.converged = true;
            break;
        }
    }

    result.model = unstandardize_model(model, scaler);
    result.scaler = scaler;
    result.cells = detect_cells(raw, result.model, {config.quantile, config.max_col_frac, scaler});
    for (auto& c : result.cells) c.col = result.kept[c.col];
    return result;
}

}  // namespace cellwise::estimator
