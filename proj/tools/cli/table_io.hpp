#pragma once

// CSV tables, number formatting and atomic file output for the command line
// tool.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cli {

/// Failure carrying the process exit code.
class Failure : public std::runtime_error {
public:
    Failure(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

inline constexpr int kExitInput = 2;
inline constexpr int kExitShape = 3;
inline constexpr int kExitConvergence = 4;

/// Raw CSV: header plus string fields. Lines starting with '#' are skipped.
struct CsvText {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;
};

CsvText parse_csv(std::string_view text, const std::string& source);
CsvText read_csv(const std::filesystem::path& path);

/// Numeric table, row-major, NaN for missing cells ("NA" or empty field).
struct Table {
    std::vector<std::string> names;
    size_t n = 0;
    size_t d = 0;
    std::vector<double> values;

    double at(size_t i, size_t j) const { return values[i * d + j]; }
    Table select(const std::vector<size_t>& cols) const;
};

Table to_table(const CsvText& csv, const std::string& source);
Table read_table(const std::filesystem::path& path);

/// Locale independent parse of a whole field; false if it is not a number.
bool parse_double(std::string_view field, double& out);
bool is_missing_token(std::string_view field);

/// Shortest decimal that round-trips; "NA" for NaN, "inf"/"-inf".
std::string format_double(double v);
std::string quote_field(const std::string& s);
std::string join_fields(const std::vector<std::string>& fields);

void write_table(std::string& out, const Table& t);

/// Writes to a temporary sibling and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string utc_timestamp();

}  // namespace cli
