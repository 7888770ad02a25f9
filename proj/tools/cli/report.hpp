#pragma once

// Flagged-cell report: one line per flagged or missing cell.

#include <optional>
#include <string>
#include <vector>

#include <cellwise/cellwise.h>

#include "table_io.hpp"

namespace cli {

struct ReportRow {
    size_t row = 0;  // 1-based data row
    std::string column;
    double observed = 0.0;
    double imputed = 0.0;
    double residual = 0.0;
    double criterion = 0.0;
    bool missing = false;
};

/// Report rows for cells whose col indexes names, sorted by |residual|
/// descending, then row, then column position.
std::vector<ReportRow> make_report(const cw_cells* cells, const std::vector<std::string>& names);

std::string render_report(const std::vector<ReportRow>& rows, double quantile, std::optional<double> max_col_frac);

std::vector<ReportRow> parse_report(const CsvText& csv, const std::string& source);

}  // namespace cli
