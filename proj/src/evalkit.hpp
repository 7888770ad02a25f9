#pragma once

// Scatter-matrix discrepancies, data generators, cellwise and rowwise
// contamination, and detection scores.

#include <cstdint>
#include <string>
#include <vector>

#include "data_table.hpp"
#include "numkit.hpp"
#include "rng.hpp"

namespace cellwise::evalkit {

/// Eigenvalues (nonincreasing) of B^{-1/2} A B^{-1/2}.
Vector relative_eigenvalues(const SymMatrix& a, const SymMatrix& b);

/// D(A, B) = sum_j (eta_j - 1 - ln eta_j). A must be PSD and B PD; a
/// singular A gives +inf.
double discrepancy(const SymMatrix& a, const SymMatrix& b);

/// tr(A B^{-1}) - d - ln det(A B^{-1}), computed from Cholesky factors.
double kl_gaussian(const SymMatrix& a, const SymMatrix& b);

enum class SymmetricKind { PlusInverse, AbsLog };

/// Sum of eta + 1/eta - 2 (PlusInverse) or |ln eta| (AbsLog).
double discrepancy_symmetric(const SymMatrix& a, const SymMatrix& b, SymmetricKind kind);

/// Sigma_jh = (-0.9)^|j-h|.
SymMatrix gen_a09(Index d);

/// Random correlation matrix from the C-vine construction: partial
/// correlations drawn from symmetric Beta distributions on (-1, 1), followed
/// by a random relabeling. Larger eta concentrates mass near the identity.
SymMatrix gen_randcorr(Index d, Rng& rng, double eta = 1.0);

/// n draws from N(0, sigma), one per row.
Matrix gen_gaussian(Index n, const SymMatrix& sigma, Rng& rng);

using CellMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class ContaminationMode { Cellwise, Rowwise, Mixed };

struct ContaminationSpec {
    double epsilon = 0.2;   // cell fraction per column
    double row_frac = 0.0;  // fraction of replaced rows (rowwise and mixed)
    double gamma = 5.0;
    ContaminationMode mode = ContaminationMode::Cellwise;
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
};

struct Contaminated {
    DataTable data;
    CellMask truth;
    std::vector<bool> outlying_rows;
};

/// magnitude * u / MD(u, 0, sigma) with u the unit eigenvector of the smallest
/// eigenvalue (first nonzero component positive).
Vector structured_outlier(const SymMatrix& sigma, double magnitude);

Contaminated contaminate_cellwise(const DataTable& clean, const SymMatrix& sigma, const ContaminationSpec& spec);
Contaminated contaminate_rowwise(const DataTable& clean, const SymMatrix& sigma, const ContaminationSpec& spec);
/// Dispatches on spec.mode; Mixed replaces rows first and then samples the
/// cellwise positions among the remaining rows.
Contaminated contaminate(const DataTable& clean, const SymMatrix& sigma, const ContaminationSpec& spec);

struct ScoreReport {
    double recall = 0.0;
    double precision = 0.0;
    double f_score = 0.0;
    Index n_true = 0;
    Index n_flagged = 0;
    Index n_hit = 0;
    bool recall_defined = true;
    bool precision_defined = true;
    std::string note;
};

ScoreReport score_flags(const CellMask& flagged, const CellMask& truth);

}  // namespace cellwise::evalkit
