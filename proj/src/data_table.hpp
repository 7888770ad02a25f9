#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "numkit.hpp"

namespace cellwise {

/// n x d numeric table. Missing cells are stored as NaN.
struct DataTable {
    Matrix values;
    std::vector<std::string> names;

    DataTable() = default;
    explicit DataTable(Matrix v, std::vector<std::string> n = {}) : values(std::move(v)), names(std::move(n)) {
        if (names.empty())
            for (Index j = 0; j < values.cols(); ++j) names.push_back("V" + std::to_string(j + 1));
    }

    Index rows() const { return values.rows(); }
    Index cols() const { return values.cols(); }
    bool missing(Index i, Index j) const { return std::isnan(values(i, j)); }
    Index missing_count(Index j) const {
        Index c = 0;
        for (Index i = 0; i < rows(); ++i) c += missing(i, j) ? 1 : 0;
        return c;
    }
    DataTable select_columns(const std::vector<Index>& cols) const {
        DataTable out;
        out.values.resize(rows(), static_cast<Index>(cols.size()));
        for (size_t k = 0; k < cols.size(); ++k) {
            out.values.col(static_cast<Index>(k)) = values.col(cols[k]);
            out.names.push_back(cols[k] < static_cast<Index>(names.size()) ? names[cols[k]] : std::string());
        }
        return out;
    }
};

}  // namespace cellwise
