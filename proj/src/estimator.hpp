#pragma once

// Detection-imputation estimator of a cellwise robust location and covariance.

#include <optional>
#include <vector>

#include "cellhandler.hpp"
#include "cov_model.hpp"
#include "data_table.hpp"

namespace cellwise::estimator {

inline constexpr double kMadConsistency = 1.4826;

struct ColumnScaler {
    Vector locations;  // per-column median of observed cells
    Vector scales;     // per-column MAD * 1.4826 of observed cells

    static ColumnScaler identity(Index d) { return {Vector::Zero(d), Vector::Ones(d)}; }
};

enum class ColumnStatus { Ok, ZeroScale, TooManyMissing };

/// Per-column usability: zero MAD over the observed cells, or more missing
/// cells than floor(n * max_col_frac).
std::vector<ColumnStatus> screen_columns(const DataTable& data, double max_col_frac);

ColumnScaler fit_scaler(const DataTable& data);
DataTable apply_scaler(const DataTable& data, const ColumnScaler& scaler);
std::pair<DataTable, ColumnScaler> standardize(const DataTable& data);

/// Model in the standardized frame from a model in raw units, and back.
CovModel standardize_model(const CovModel& raw, const ColumnScaler& scaler);
CovModel unstandardize_model(const CovModel& standardized, const ColumnScaler& scaler);

/// Per-row centered log ratio over the observed cells.
DataTable clr_transform(const DataTable& data);
/// Elementwise natural log; missing cells stay missing.
DataTable log_transform(const DataTable& data);

enum class InitialMethod { Rank, Diagonal, External };

struct InitialOption {
    InitialMethod method = InitialMethod::Rank;
    std::optional<CovModel> external;  // raw units; required for External
};

/// Spearman correlation of two columns over their pairwise complete cells.
double spearman(const Vector& a, const Vector& b, Index* complete_pairs = nullptr);

/// Initial model for standardized data. For External the supplied model is
/// expected in the standardized frame.
CovModel initial_estimate(const DataTable& standardized, const InitialOption& option);

struct FlaggedCell {
    Index row = 0;
    Index col = 0;
    double observed = 0.0;  // NaN for missing cells
    double imputed = 0.0;
    double residual = 0.0;
    double criterion = 0.0;
    bool missing = false;
};

struct FlagSet {
    std::vector<FlaggedCell> cells;             // row-major order
    std::vector<std::vector<Index>> row_cells;  // per row: path prefix of flagged and missing cells
    std::vector<Index> column_counts;           // flagged plus missing per column
    Matrix imputed;                             // data with flagged and missing cells imputed
};

/// Flags cells across all rows under a per-column cap of max_col flagged or
/// missing cells. Cells are visited in order of decreasing criterion (ties:
/// lower row, then earlier path position); a criterion at or below q, or a
/// full column, locks the row.
FlagSet d_step(const DataTable& data, const CovModel& model, double q, Index max_col);

/// EM-style update treating flagged and missing cells as missing. Returns the
/// new model and the number of eigenvalues raised to the PD floor.
struct IStepResult {
    CovModel model;
    int clipped_eigenvalues = 0;
};
IStepResult i_step(const DataTable& data, const FlagSet& flags, const CovModel& prev);

struct DiConfig {
    double quantile = 0.99;
    double max_col_frac = 0.25;
    int max_iter = 25;
    double tol = 1e-6;
    InitialOption initial;
};

void validate(const DiConfig& config);

struct DiResult {
    CovModel model;    // raw units, over the kept columns
    CovModel initial;  // raw units
    ColumnScaler scaler;
    std::vector<Index> kept;       // input column indices used
    std::vector<Index> set_aside;  // columns with too many missing cells
    std::vector<FlaggedCell> cells;  // final flags; col indexes the input table
    int iterations = 0;
    bool converged = false;
    std::vector<double> criterion_history;
    int clipped_eigenvalues = 0;
};

DiResult di_estimate(const DataTable& data, const DiConfig& config);

struct DetectOptions {
    double quantile = 0.99;
    std::optional<double> max_col_frac;  // none: no column cap
    std::optional<ColumnScaler> scaler;  // none: identity
};

/// Flags cells of raw data under a raw-unit model. The data and the model are
/// mapped to the scaler's frame, flagged with d_step, and the imputations are
/// mapped back. This is also the final step of di_estimate.
std::vector<FlaggedCell> detect_cells(const DataTable& data, const CovModel& model, const DetectOptions& options);

Index column_cap(Index n, double max_col_frac);

}  // namespace cellwise::estimator
