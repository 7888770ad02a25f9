#include "cellwise/cellwise.h"

#include <cmath>
#include <exception>
#include <limits>
#include <new>
#include <string>
#include <vector>

#include "../estimator.hpp"
#include "../evalkit.hpp"
#include "../simulation.hpp"

using namespace cellwise;

struct cw_model {
    CovModel model;
};

struct cw_cells {
    std::vector<estimator::FlaggedCell> cells;
};

struct cw_fit {
    estimator::DiResult result;
    cw_cells cells;
};

struct cw_sim {
    std::vector<cw_sim_row> rows;
    std::vector<cw_sim_row> summary;
};

namespace {

thread_local std::string g_last_error;

cw_status to_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Input: return CW_ERR_INPUT;
        case ErrorKind::Shape: return CW_ERR_SHAPE;
        case ErrorKind::Singular: return CW_ERR_SINGULAR;
        case ErrorKind::Convergence: return CW_ERR_CONVERGENCE;
        case ErrorKind::Sparsity: return CW_ERR_SPARSITY;
    }
    return CW_ERR_INTERNAL;
}

template <class F>
cw_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return CW_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return CW_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CW_ERR_INTERNAL;
    }
}

void require(bool cond, const char* what) {
    if (!cond) fail(ErrorKind::Input, what);
}

Matrix table_from(const double* data, size_t n, size_t d) {
    require(data != nullptr || n * d == 0, "null data pointer");
    Matrix m(static_cast<Index>(n), static_cast<Index>(d));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = data[i * d + j];
    return m;
}

void table_to(const Matrix& m, double* out) {
    const auto d = static_cast<size_t>(m.cols());
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) out[static_cast<size_t>(i) * d + static_cast<size_t>(j)] = m(i, j);
}

cw_sim_row to_row(const simulation::SimRecord& r) {
    cw_sim_row out{};
    out.rep = r.rep;
    out.variant = static_cast<cw_variant>(r.variant);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.recall = r.score.recall_defined ? r.score.recall : nan;
    out.precision = r.score.precision_defined ? r.score.precision : nan;
    out.f_score = r.score.recall_defined ? r.score.f_score : nan;
    out.discrepancy = r.discrepancy;
    out.n_true = static_cast<size_t>(r.score.n_true);
    out.n_flagged = static_cast<size_t>(r.score.n_flagged);
    out.n_hit = static_cast<size_t>(r.score.n_hit);
    out.converged = r.converged ? 1 : 0;
    out.iterations = r.iterations;
    return out;
}

estimator::DiConfig to_config(const cw_di_config* c) {
    estimator::DiConfig cfg;
    if (!c) return cfg;
    cfg.quantile = c->quantile;
    cfg.max_col_frac = c->max_col_frac;
    cfg.max_iter = c->max_iter;
    cfg.tol = c->tol;
    switch (c->initial) {
        case CW_INITIAL_RANK: cfg.initial.method = estimator::InitialMethod::Rank; break;
        case CW_INITIAL_DIAGONAL: cfg.initial.method = estimator::InitialMethod::Diagonal; break;
        case CW_INITIAL_EXTERNAL:
            require(c->external != nullptr, "external initial method requires a model");
            cfg.initial.method = estimator::InitialMethod::External;
            cfg.initial.external = c->external->model;
            break;
        default: fail(ErrorKind::Input, "unknown initial method");
    }
    return cfg;
}

simulation::SimConfig to_sim_config(const cw_sim_config* config) {
    simulation::SimConfig sc;
    require(config->model == CW_COV_A09 || config->model == CW_COV_RANDCORR, "unknown covariance model");
    sc.model = config->model == CW_COV_A09 ? simulation::CovKind::A09 : simulation::CovKind::RandCorr;
    sc.d = static_cast<Index>(config->d);
    sc.n = static_cast<Index>(config->n);
    sc.reps = config->reps;
    sc.seed = config->seed;
    sc.di = to_config(&config->di);
    sc.contamination.gamma = config->gamma;
    switch (config->mode) {
        case CW_CONTAM_CELL:
            sc.contamination.mode = evalkit::ContaminationMode::Cellwise;
            sc.contamination.epsilon = config->eps;
            break;
        case CW_CONTAM_ROW:
            sc.contamination.mode = evalkit::ContaminationMode::Rowwise;
            sc.contamination.epsilon = 0.0;
            sc.contamination.row_frac = config->row_eps;
            break;
        case CW_CONTAM_MIXED:
            sc.contamination.mode = evalkit::ContaminationMode::Mixed;
            sc.contamination.epsilon = config->eps;
            sc.contamination.row_frac = config->row_eps;
            break;
        default: fail(ErrorKind::Input, "unknown contamination mode");
    }
    return sc;
}

}  // namespace

extern "C" {

const char* cw_last_error(void) { return g_last_error.c_str(); }

const char* cw_version(void) { return "0.1.0"; }

cw_status cw_model_create(size_t d, const double* mu, const double* sigma, cw_model** out) {
    return guarded([&] {
        require(out != nullptr && mu != nullptr && sigma != nullptr, "null argument");
        require(d > 0, "model dimension must be positive");
        Vector m = Eigen::Map<const Vector>(mu, static_cast<Index>(d));
        Matrix s = table_from(sigma, d, d);
        *out = new cw_model{CovModel::make(std::move(m), SymMatrix(std::move(s)))};
    });
}

void cw_model_free(cw_model* model) { delete model; }

size_t cw_model_dim(const cw_model* model) { return model ? static_cast<size_t>(model->model.dim()) : 0; }

void cw_model_get_mu(const cw_model* model, double* mu_out) {
    if (!model || !mu_out) return;
    for (Index j = 0; j < model->model.dim(); ++j) mu_out[j] = model->model.mu(j);
}

void cw_model_get_sigma(const cw_model* model, double* sigma_out) {
    if (!model || !sigma_out) return;
    table_to(model->model.sigma.matrix(), sigma_out);
}

size_t cw_cells_count(const cw_cells* cells) { return cells ? cells->cells.size() : 0; }

void cw_cells_get(const cw_cells* cells, size_t index, cw_cell* out) {
    if (!cells || !out || index >= cells->cells.size()) return;
    const auto& c = cells->cells[index];
    *out = cw_cell{static_cast<size_t>(c.row), static_cast<size_t>(c.col), c.observed, c.imputed, c.residual,
                   c.criterion, c.missing ? 1 : 0};
}

void cw_cells_free(cw_cells* cells) { delete cells; }

void cw_detect_options_default(cw_detect_options* options) {
    if (!options) return;
    *options = cw_detect_options{0.99, 0.0, nullptr, nullptr};
}

cw_status cw_detect(const cw_model* model, const double* data, size_t n, size_t d, const cw_detect_options* options,
                    cw_cells** out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        require(d == static_cast<size_t>(model->model.dim()), "data width does not match the model dimension");
        cw_detect_options opts;
        cw_detect_options_default(&opts);
        if (options) opts = *options;
        estimator::DetectOptions o;
        o.quantile = opts.quantile;
        if (opts.max_col_frac > 0.0) o.max_col_frac = opts.max_col_frac;
        require((opts.locations == nullptr) == (opts.scales == nullptr), "locations and scales go together");
        if (opts.locations) {
            estimator::ColumnScaler s{Eigen::Map<const Vector>(opts.locations, static_cast<Index>(d)),
                                      Eigen::Map<const Vector>(opts.scales, static_cast<Index>(d))};
            for (Index j = 0; j < s.scales.size(); ++j)
                require(s.scales(j) > 0.0 && std::isfinite(s.locations(j)), "scales must be positive and finite");
            o.scaler = std::move(s);
        }
        DataTable table(table_from(data, n, d));
        auto cells = estimator::detect_cells(table, model->model, o);
        *out = new cw_cells{std::move(cells)};
    });
}

void cw_di_config_default(cw_di_config* config) {
    if (!config) return;
    *config = cw_di_config{0.99, 0.25, 25, 1e-6, CW_INITIAL_RANK, nullptr};
}

cw_status cw_estimate(const double* data, size_t n, size_t d, const cw_di_config* config, cw_fit** out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        const auto cfg = to_config(config);
        DataTable table(table_from(data, n, d));
        auto result = estimator::di_estimate(table, cfg);
        auto* fit = new cw_fit{std::move(result), {}};
        fit->cells.cells = fit->result.cells;
        *out = fit;
    });
}

void cw_fit_free(cw_fit* fit) { delete fit; }

cw_status cw_fit_model(const cw_fit* fit, cw_model** out) {
    return guarded([&] {
        require(fit != nullptr && out != nullptr, "null argument");
        *out = new cw_model{fit->result.model};
    });
}

cw_status cw_fit_initial_model(const cw_fit* fit, cw_model** out) {
    return guarded([&] {
        require(fit != nullptr && out != nullptr, "null argument");
        *out = new cw_model{fit->result.initial};
    });
}

size_t cw_fit_kept_count(const cw_fit* fit) { return fit ? fit->result.kept.size() : 0; }

void cw_fit_kept_columns(const cw_fit* fit, size_t* out) {
    if (!fit || !out) return;
    for (size_t k = 0; k < fit->result.kept.size(); ++k) out[k] = static_cast<size_t>(fit->result.kept[k]);
}

void cw_fit_scaler(const cw_fit* fit, double* locations, double* scales) {
    if (!fit) return;
    const auto& s = fit->result.scaler;
    for (Index j = 0; j < s.scales.size(); ++j) {
        if (locations) locations[j] = s.locations(j);
        if (scales) scales[j] = s.scales(j);
    }
}

int cw_fit_iterations(const cw_fit* fit) { return fit ? fit->result.iterations : 0; }

int cw_fit_converged(const cw_fit* fit) { return fit && fit->result.converged ? 1 : 0; }

void cw_fit_history(const cw_fit* fit, double* out) {
    if (!fit || !out) return;
    for (size_t k = 0; k < fit->result.criterion_history.size(); ++k) out[k] = fit->result.criterion_history[k];
}

int cw_fit_clipped_eigenvalues(const cw_fit* fit) { return fit ? fit->result.clipped_eigenvalues : 0; }

const cw_cells* cw_fit_cells(const cw_fit* fit) { return fit ? &fit->cells : nullptr; }

cw_status cw_screen_columns(const double* data, size_t n, size_t d, double max_col_frac, int* status_out) {
    return guarded([&] {
        require(status_out != nullptr, "null argument");
        require(max_col_frac > 0.0 && max_col_frac < 1.0, "max_col_frac must lie in (0, 1)");
        const auto st = estimator::screen_columns(DataTable(table_from(data, n, d)), max_col_frac);
        for (size_t j = 0; j < st.size(); ++j) status_out[j] = static_cast<int>(st[j]);
    });
}

cw_status cw_clr_transform(const double* data, size_t n, size_t d, double* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        table_to(estimator::clr_transform(DataTable(table_from(data, n, d))).values, out);
    });
}

cw_status cw_log_transform(const double* data, size_t n, size_t d, double* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        table_to(estimator::log_transform(DataTable(table_from(data, n, d))).values, out);
    });
}

cw_status cw_discrepancy(size_t d, const double* a, const double* b, cw_divergence kind, double* out) {
    return guarded([&] {
        require(a != nullptr && b != nullptr && out != nullptr, "null argument");
        require(d > 0, "dimension must be positive");
        const SymMatrix sa(table_from(a, d, d));
        const SymMatrix sb(table_from(b, d, d));
        switch (kind) {
            case CW_DIVERGENCE_D: *out = evalkit::discrepancy(sa, sb); break;
            case CW_DIVERGENCE_PLUS_INVERSE:
                *out = evalkit::discrepancy_symmetric(sa, sb, evalkit::SymmetricKind::PlusInverse);
                break;
            case CW_DIVERGENCE_ABS_LOG:
                *out = evalkit::discrepancy_symmetric(sa, sb, evalkit::SymmetricKind::AbsLog);
                break;
            default: fail(ErrorKind::Input, "unknown discrepancy kind");
        }
    });
}

void cw_sim_config_default(cw_sim_config* config) {
    if (!config) return;
    cw_sim_config c{};
    c.model = CW_COV_A09;
    c.d = 10;
    c.n = 100;
    c.eps = 0.2;
    c.row_eps = 0.1;
    c.gamma = 5.0;
    c.mode = CW_CONTAM_CELL;
    c.reps = 10;
    c.seed = 1;
    cw_di_config_default(&c.di);
    *config = c;
}

cw_status cw_simulate(const cw_sim_config* config, cw_sim** out) {
    return guarded([&] {
        require(config != nullptr && out != nullptr, "null argument");
        const auto sc = to_sim_config(config);
        const auto records = simulation::run(sc);
        auto* sim = new cw_sim;
        for (const auto& r : records) sim->rows.push_back(to_row(r));
        for (const auto& s : simulation::summarize(records)) {
            cw_sim_row row{};
            row.rep = -1;
            row.variant = static_cast<cw_variant>(s.variant);
            row.recall = s.recall;
            row.precision = s.precision;
            row.f_score = s.f_score;
            row.discrepancy = s.discrepancy;
            row.converged = 1;
            for (const auto& r : records) {
                if (r.variant != s.variant) continue;
                row.n_true += static_cast<size_t>(r.score.n_true);
                row.n_flagged += static_cast<size_t>(r.score.n_flagged);
                row.n_hit += static_cast<size_t>(r.score.n_hit);
                row.iterations += r.iterations;
                if (!r.converged) row.converged = 0;
            }
            sim->summary.push_back(row);
        }
        *out = sim;
    });
}

void cw_sim_free(cw_sim* sim) { delete sim; }

size_t cw_sim_count(const cw_sim* sim) { return sim ? sim->rows.size() : 0; }

void cw_sim_get(const cw_sim* sim, size_t index, cw_sim_row* out) {
    if (sim && out && index < sim->rows.size()) *out = sim->rows[index];
}

size_t cw_sim_summary_count(const cw_sim* sim) { return sim ? sim->summary.size() : 0; }

void cw_sim_summary(const cw_sim* sim, size_t index, cw_sim_row* out) {
    if (sim && out && index < sim->summary.size()) *out = sim->summary[index];
}

cw_status cw_simulate_data(const cw_sim_config* config, int rep, double* data_out, int* truth_out, double* sigma_out) {
    return guarded([&] {
        require(config != nullptr && data_out != nullptr, "null argument");
        require(rep >= 0, "replication index must be nonnegative");
        const auto sc = to_sim_config(config);
        const auto r = simulation::generate(sc, rep);
        const Index n = sc.n, d = sc.d;
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < d; ++j) {
                data_out[i * d + j] = r.sample.data.values(i, j);
                if (truth_out) truth_out[i * d + j] = r.sample.truth(i, j) ? 1 : 0;
            }
        if (sigma_out)
            for (Index a = 0; a < d; ++a)
                for (Index b = 0; b < d; ++b) sigma_out[a * d + b] = r.sigma(a, b);
    });
}

}  // extern "C"
