#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace cli {

std::vector<ReportRow> make_report(const cw_cells* cells, const std::vector<std::string>& names) {
    struct Keyed {
        ReportRow r;
        size_t col;
    };
    std::vector<Keyed> keyed;
    for (size_t k = 0; k < cw_cells_count(cells); ++k) {
        cw_cell c;
        cw_cells_get(cells, k, &c);
        keyed.push_back({{c.row + 1, names.at(c.col), c.observed, c.imputed, c.residual, c.criterion, c.missing != 0}, c.col});
    }
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        const double ra = std::abs(a.r.residual), rb = std::abs(b.r.residual);
        if (ra != rb) return ra > rb;
        if (a.r.row != b.r.row) return a.r.row < b.r.row;
        return a.col < b.col;
    });
    std::vector<ReportRow> out;
    for (auto& k : keyed) out.push_back(std::move(k.r));
    return out;
}

std::string render_report(const std::vector<ReportRow>& rows, double quantile, std::optional<double> max_col_frac) {
    std::string out = "# cellwise cells quantile=" + format_double(quantile) +
                      " max_col_frac=" + (max_col_frac ? format_double(*max_col_frac) : std::string("none")) + "\n";
    out += "row,column,observed,imputed,residual,criterion,missing\n";
    for (const auto& r : rows) {
        out += join_fields({std::to_string(r.row), quote_field(r.column), format_double(r.observed),
                            format_double(r.imputed), format_double(r.residual), format_double(r.criterion),
                            r.missing ? "1" : "0"});
    }
    return out;
}

std::vector<ReportRow> parse_report(const CsvText& csv, const std::string& source) {
    const std::vector<std::string> expect{"row", "column", "observed", "imputed", "residual", "criterion", "missing"};
    if (csv.header != expect) throw Failure(kExitInput, source + ": not a cell report (unexpected header)");
    std::vector<ReportRow> out;
    std::set<std::pair<size_t, std::string>> seen;
    for (size_t k = 0; k < csv.rows.size(); ++k) {
        const auto& f = csv.rows[k];
        ReportRow r;
        double row = 0;
        const std::string where = source + ": report line " + std::to_string(k + 1);
        if (!parse_double(f[0], row) || row < 1 || row != std::floor(row)) throw Failure(kExitInput, where + ": bad row id");
        r.row = static_cast<size_t>(row);
        r.column = f[1];
        auto num = [&](const std::string& s, double& v) {
            if (is_missing_token(s)) {
                v = NAN;
                return;
            }
            if (s == "inf") v = INFINITY;
            else if (s == "-inf") v = -INFINITY;
            else if (!parse_double(s, v)) throw Failure(kExitInput, where + ": bad number '" + s + "'");
        };
        num(f[2], r.observed);
        num(f[3], r.imputed);
        num(f[4], r.residual);
        num(f[5], r.criterion);
        if (f[6] != "0" && f[6] != "1") throw Failure(kExitInput, where + ": missing flag must be 0 or 1");
        r.missing = f[6] == "1";
        if (!seen.insert({r.row, r.column}).second)
            throw Failure(kExitInput, where + ": duplicate cell (" + std::to_string(r.row) + ", " + r.column + ")");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace cli
