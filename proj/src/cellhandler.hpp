#pragma once

// Per-row cell detection on top of the LAR trace.

#include <vector>

#include "cov_model.hpp"
#include "larpath.hpp"

namespace cellwise::cellhandler {

/// Suffix maxima of the path increments, indexed by path position. Forced
/// cells get +inf.
Vector criterion_values(const larpath::LarPath& path);

/// A traced row. The trace runs in the frame where the model covariance has
/// unit diagonal, so the cell ranking does not depend on the units of the
/// individual variables.
struct RowTrace {
    Vector z;                   // observed row, NaN where missing
    std::vector<bool> missing;  // per column
    larpath::LarPath path;
    Vector criteria;            // per column
    Vector mu;
    Vector sd;

    Index dim() const { return z.size(); }
    /// Row with the first m cells of the path replaced by their conditional
    /// expectation given the remaining cells.
    Vector imputed(Index m) const;
};

RowTrace trace_row(const Vector& z, const CovModel& model);

struct RowDetection {
    Vector criteria;                // per column, +inf for missing cells
    std::vector<Index> flagged;     // prefix of path_order, missing cells included
    Vector imputed;                 // full row with flagged and missing cells imputed
    Vector residuals;               // signed sqrt(C) on flagged observed cells, 0 elsewhere
    std::vector<Index> path_order;
    std::vector<bool> missing;
};

/// Detection that flags the first m cells of the traced path.
RowDetection detect_prefix(const RowTrace& trace, Index m);

/// Flags {j : C_j > q}.
RowDetection handle_row(const Vector& z, const CovModel& model, double q);

/// Number of leading path cells with criterion above q.
Index flagged_prefix_length(const RowTrace& trace, double q);

enum class DomainLabel { None, First, Second, Both };

const char* to_string(DomainLabel label);

struct GridSpec {
    double lo1 = -4, hi1 = 4;
    int steps1 = 81;
    double lo2 = -4, hi2 = 4;
    int steps2 = 81;
};

struct DomainPoint {
    double z1;
    double z2;
    DomainLabel label;
};

/// Labels a grid of bivariate points by which cells handle_row flags.
std::vector<DomainPoint> flag_domain_scan(const CovModel& model, const GridSpec& grid, double q);

}  // namespace cellwise::cellhandler
