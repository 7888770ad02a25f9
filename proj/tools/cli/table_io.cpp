#include "table_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace cli {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_input(const std::string& msg) { throw Failure(kExitInput, msg); }

}  // namespace

CsvText parse_csv(std::string_view text, const std::string& source) {
    CsvText out;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool quoted = false;
    bool at_line_start = true;
    size_t line = 1;
    size_t record_line = 1;

    auto finish_field = [&] {
        record.push_back(quoted ? field : std::string(trim(field)));
        field.clear();
        quoted = false;
    };
    auto finish_record = [&] {
        const bool blank = record.empty() && !quoted && trim(field).empty();
        finish_field();
        if (blank) {
            record.clear();
            return;
        }
        if (out.header.empty()) {
            out.header = std::move(record);
        } else {
            if (record.size() != out.header.size())
                bad_input(source + ":" + std::to_string(record_line) + ": expected " +
                          std::to_string(out.header.size()) + " fields, found " + std::to_string(record.size()));
            out.rows.push_back(std::move(record));
        }
        record.clear();
    };

    for (size_t pos = 0; pos < text.size(); ++pos) {
        const char c = text[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field.push_back('"');
                    ++pos;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (at_line_start) {
            at_line_start = false;
            record_line = line;
            if (c == '#') {
                const size_t end = text.find('\n', pos);
                const auto comment = text.substr(pos + 1, end == std::string_view::npos ? std::string_view::npos : end - pos - 1);
                out.comments.emplace_back(trim(comment));
                if (end == std::string_view::npos) return out;
                pos = end;
                ++line;
                at_line_start = true;
                continue;
            }
        }
        switch (c) {
            case '"':
                if (!trim(field).empty())
                    bad_input(source + ":" + std::to_string(line) + ": stray quote inside an unquoted field");
                field.clear();
                in_quotes = true;
                quoted = true;
                break;
            case ',':
                finish_field();
                break;
            case '\n':
                finish_record();
                ++line;
                at_line_start = true;
                break;
            default:
                if (!quoted) {
                    field.push_back(c);
                } else if (c != ' ' && c != '\t' && c != '\r') {
                    bad_input(source + ":" + std::to_string(line) + ": text after a closing quote");
                }
        }
    }
    if (in_quotes) bad_input(source + ": unterminated quoted field");
    if (!field.empty() || !record.empty()) finish_record();
    if (out.header.empty()) bad_input(source + ": missing header row");
    return out;
}

CsvText read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) bad_input("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.string());
}

bool is_missing_token(std::string_view field) {
    field = trim(field);
    return field.empty() || field == "NA";
}

bool parse_double(std::string_view field, double& out) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    if (field.empty()) return false;
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

Table Table::select(const std::vector<size_t>& cols) const {
    Table t;
    t.n = n;
    t.d = cols.size();
    for (size_t c : cols) t.names.push_back(names[c]);
    t.values.resize(t.n * t.d);
    for (size_t i = 0; i < n; ++i)
        for (size_t k = 0; k < cols.size(); ++k) t.values[i * t.d + k] = at(i, cols[k]);
    return t;
}

Table to_table(const CsvText& csv, const std::string& source) {
    Table t;
    t.names = csv.header;
    t.d = csv.header.size();
    t.n = csv.rows.size();
    t.values.resize(t.n * t.d);
    std::vector<std::string> problems;
    for (size_t i = 0; i < t.n; ++i) {
        for (size_t j = 0; j < t.d; ++j) {
            const auto& f = csv.rows[i][j];
            double v = NAN;
            if (!is_missing_token(f) && (!parse_double(f, v) || !std::isfinite(v))) {
                if (problems.size() < 10)
                    problems.push_back("row " + std::to_string(i + 1) + ", column '" + t.names[j] + "': '" + f + "'");
                else if (problems.size() == 10)
                    problems.emplace_back("...");
            }
            t.values[i * t.d + j] = v;
        }
    }
    if (!problems.empty()) {
        std::string msg = source + ": non-numeric fields:";
        for (const auto& p : problems) msg += "\n  " + p;
        bad_input(msg);
    }
    return t;
}

Table read_table(const std::filesystem::path& path) { return to_table(read_csv(path), path.string()); }

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos && s != "NA" && !s.empty() && s.front() != '#' &&
        s.front() != ' ' && s.back() != ' ')
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join_fields(const std::vector<std::string>& fields) {
    std::string line;
    for (size_t k = 0; k < fields.size(); ++k) {
        if (k) line.push_back(',');
        line += fields[k];
    }
    line.push_back('\n');
    return line;
}

void write_table(std::string& out, const Table& t) {
    std::vector<std::string> fields;
    for (const auto& name : t.names) fields.push_back(quote_field(name));
    out += join_fields(fields);
    for (size_t i = 0; i < t.n; ++i) {
        fields.clear();
        for (size_t j = 0; j < t.d; ++j) fields.push_back(format_double(t.at(i, j)));
        out += join_fields(fields);
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) bad_input("cannot write " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            bad_input("failed writing " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        bad_input("cannot replace " + path.string());
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace cli
