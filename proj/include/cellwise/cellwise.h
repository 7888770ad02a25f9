/*
 * cellwise: cellwise outlier detection and cellwise robust covariance
 * estimation.
 *
 * C interface to the library. Objects are opaque handles created by
 * cw_*_create / cw_* functions and released with the matching cw_*_free.
 * Every fallible function returns a cw_status; on failure a description is
 * available from cw_last_error() on the calling thread.
 *
 * Tables are passed as row-major arrays of n*d doubles. NaN marks a missing
 * cell.
 */
#ifndef CELLWISE_CELLWISE_H
#define CELLWISE_CELLWISE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CW_API __declspec(dllexport)
#else
#define CW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cw_status {
    CW_OK = 0,
    CW_ERR_INPUT = 1,       /* malformed arguments or data */
    CW_ERR_SHAPE = 2,       /* unsupported table shape (n <= d, no columns) */
    CW_ERR_SINGULAR = 3,    /* matrix not positive definite */
    CW_ERR_CONVERGENCE = 4, /* iterative routine did not converge */
    CW_ERR_SPARSITY = 5,    /* too few complete observations */
    CW_ERR_INTERNAL = 99
} cw_status;

/* Message of the last failed call on this thread ("" if none). */
CW_API const char* cw_last_error(void);
CW_API const char* cw_version(void);

/* ---- models ---------------------------------------------------------- */

typedef struct cw_model cw_model;

/* Location mu (d) and covariance sigma (d*d row-major, symmetric PD). */
CW_API cw_status cw_model_create(size_t d, const double* mu, const double* sigma, cw_model** out);
CW_API void cw_model_free(cw_model* model);
CW_API size_t cw_model_dim(const cw_model* model);
CW_API void cw_model_get_mu(const cw_model* model, double* mu_out);
CW_API void cw_model_get_sigma(const cw_model* model, double* sigma_out);

/* ---- flagged cells --------------------------------------------------- */

typedef struct cw_cell {
    size_t row;
    size_t col;
    double observed;  /* NaN for missing cells */
    double imputed;
    double residual;  /* signed standardized residual; 0 for missing cells */
    double criterion; /* +inf for missing cells */
    int missing;
} cw_cell;

typedef struct cw_cells cw_cells;

CW_API size_t cw_cells_count(const cw_cells* cells);
CW_API void cw_cells_get(const cw_cells* cells, size_t index, cw_cell* out);
CW_API void cw_cells_free(cw_cells* cells);

/* ---- detection with a known model ------------------------------------ */

typedef struct cw_detect_options {
    double quantile;         /* chi-squared(1) probability for the cutoff, default 0.99 */
    double max_col_frac;     /* column cap as a fraction of n; <= 0 disables the cap */
    const double* locations; /* optional column locations (d); NULL for none */
    const double* scales;    /* optional column scales (d); NULL for none */
} cw_detect_options;

CW_API void cw_detect_options_default(cw_detect_options* options);

/* Flags cells of data (n x d) under model. With locations/scales given, data
 * and model are first mapped to that standardized frame. */
CW_API cw_status cw_detect(const cw_model* model, const double* data, size_t n, size_t d,
                           const cw_detect_options* options, cw_cells** out);

/* ---- detection-imputation estimator ---------------------------------- */

typedef enum cw_initial { CW_INITIAL_RANK = 0, CW_INITIAL_DIAGONAL = 1, CW_INITIAL_EXTERNAL = 2 } cw_initial;

typedef struct cw_di_config {
    double quantile;     /* default 0.99 */
    double max_col_frac; /* default 0.25 */
    int max_iter;        /* default 25 */
    double tol;          /* default 1e-6 */
    cw_initial initial;  /* default CW_INITIAL_RANK */
    const cw_model* external; /* raw-unit initial model for CW_INITIAL_EXTERNAL */
} cw_di_config;

CW_API void cw_di_config_default(cw_di_config* config);

typedef struct cw_fit cw_fit;

CW_API cw_status cw_estimate(const double* data, size_t n, size_t d, const cw_di_config* config, cw_fit** out);
CW_API void cw_fit_free(cw_fit* fit);
/* New model handles (caller frees). */
CW_API cw_status cw_fit_model(const cw_fit* fit, cw_model** out);
CW_API cw_status cw_fit_initial_model(const cw_fit* fit, cw_model** out);
/* Number of input columns used; cw_fit_kept_columns fills that many indices. */
CW_API size_t cw_fit_kept_count(const cw_fit* fit);
CW_API void cw_fit_kept_columns(const cw_fit* fit, size_t* out);
/* Column locations and scales of the kept columns. */
CW_API void cw_fit_scaler(const cw_fit* fit, double* locations, double* scales);
CW_API int cw_fit_iterations(const cw_fit* fit);
CW_API int cw_fit_converged(const cw_fit* fit);
/* cw_fit_iterations() entries of |mu_t - mu_{t-1}|^2 + |Sigma_t - Sigma_{t-1}|_F^2. */
CW_API void cw_fit_history(const cw_fit* fit, double* out);
CW_API int cw_fit_clipped_eigenvalues(const cw_fit* fit);
/* Borrowed; valid until cw_fit_free. Column indices refer to the input table. */
CW_API const cw_cells* cw_fit_cells(const cw_fit* fit);

/* ---- column screening and transforms --------------------------------- */

typedef enum cw_column_status {
    CW_COLUMN_OK = 0,
    CW_COLUMN_ZERO_SCALE = 1,
    CW_COLUMN_TOO_MANY_MISSING = 2
} cw_column_status;

CW_API cw_status cw_screen_columns(const double* data, size_t n, size_t d, double max_col_frac, int* status_out);

/* Per-row centered log ratio / elementwise log; out has n*d entries. */
CW_API cw_status cw_clr_transform(const double* data, size_t n, size_t d, double* out);
CW_API cw_status cw_log_transform(const double* data, size_t n, size_t d, double* out);

/* ---- scatter discrepancy --------------------------------------------- */

typedef enum cw_divergence {
    CW_DIVERGENCE_D = 0,            /* sum(eta - 1 - log eta), +inf for singular a */
    CW_DIVERGENCE_PLUS_INVERSE = 1, /* sum(eta + 1/eta - 2) */
    CW_DIVERGENCE_ABS_LOG = 2       /* sum |log eta| */
} cw_divergence;

/* Discrepancy of a relative to b (both d*d row-major). */
CW_API cw_status cw_discrepancy(size_t d, const double* a, const double* b, cw_divergence kind, double* out);

/* ---- simulation ------------------------------------------------------- */

typedef enum cw_cov_kind { CW_COV_A09 = 0, CW_COV_RANDCORR = 1 } cw_cov_kind;
typedef enum cw_contamination { CW_CONTAM_CELL = 0, CW_CONTAM_ROW = 1, CW_CONTAM_MIXED = 2 } cw_contamination;
typedef enum cw_variant { CW_VARIANT_TRUE_MODEL = 0, CW_VARIANT_INITIAL = 1, CW_VARIANT_DI = 2 } cw_variant;

typedef struct cw_sim_config {
    cw_cov_kind model;
    size_t d;
    size_t n;
    double eps;      /* cellwise fraction per column */
    double row_eps;  /* rowwise fraction (row and mixed modes) */
    double gamma;
    cw_contamination mode;
    int reps;
    uint64_t seed;
    cw_di_config di;
} cw_sim_config;

CW_API void cw_sim_config_default(cw_sim_config* config);

typedef struct cw_sim_row {
    int rep;          /* -1 for summary rows */
    cw_variant variant;
    double recall;    /* NaN when undefined */
    double precision; /* NaN when undefined */
    double f_score;
    double discrepancy;
    size_t n_true;
    size_t n_flagged;
    size_t n_hit;
    int converged;
    int iterations;
} cw_sim_row;

typedef struct cw_sim cw_sim;

CW_API cw_status cw_simulate(const cw_sim_config* config, cw_sim** out);
CW_API void cw_sim_free(cw_sim* sim);
CW_API size_t cw_sim_count(const cw_sim* sim);
CW_API void cw_sim_get(const cw_sim* sim, size_t index, cw_sim_row* out);
CW_API size_t cw_sim_summary_count(const cw_sim* sim);
CW_API void cw_sim_summary(const cw_sim* sim, size_t index, cw_sim_row* out);

/* Data of replication rep (0-based) as cw_simulate generates it: n*d values,
 * optional n*d truth mask (1 = contaminated) and d*d true covariance. */
CW_API cw_status cw_simulate_data(const cw_sim_config* config, int rep, double* data_out, int* truth_out,
                                  double* sigma_out);

#ifdef __cplusplus
}
#endif

#endif /* CELLWISE_CELLWISE_H */
