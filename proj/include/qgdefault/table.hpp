#pragma once

// Plain tabular output: a header and rows of cells, written as CSV or as JSON
// lines. Reals are printed with 12 significant digits so output is stable
// byte for byte.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qgd {

using Cell = std::variant<std::monostate, std::string, double, std::int64_t, bool>;

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != header.size()) throw std::logic_error("Table: row width differs from header");
        rows.push_back(std::move(row));
    }
};

enum class OutputFormat { Csv, Json };

inline OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    throw std::invalid_argument("unknown output format '" + s + "' (expected csv or json)");
}

inline std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

namespace detail {

inline std::string csv_cell(const Cell& c) {
    struct V {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(const std::string& s) const {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string out = "\"";
            for (char ch : s) {
                if (ch == '"') out += '"';
                out += ch;
            }
            return out + "\"";
        }
        std::string operator()(double x) const { return format_real(x); }
        std::string operator()(std::int64_t x) const { return std::to_string(x); }
        std::string operator()(bool b) const { return b ? "1" : "0"; }
    };
    return std::visit(V{}, c);
}

inline std::string json_string(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    return out + "\"";
}

inline std::string json_cell(const Cell& c) {
    struct V {
        std::string operator()(std::monostate) const { return "null"; }
        std::string operator()(const std::string& s) const { return json_string(s); }
        std::string operator()(double x) const { return std::isfinite(x) ? format_real(x) : "null"; }
        std::string operator()(std::int64_t x) const { return std::to_string(x); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(V{}, c);
}

}  // namespace detail

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << detail::csv_cell(r[i]);
        os << '\n';
    }
}

/// One JSON object per row.
inline void write_json_lines(std::ostream& os, const Table& t) {
    for (const auto& r : t.rows) {
        os << '{';
        for (std::size_t i = 0; i < r.size(); ++i) {
            os << (i ? "," : "") << detail::json_string(t.header[i]) << ':' << detail::json_cell(r[i]);
        }
        os << "}\n";
    }
}

inline void write_table(std::ostream& os, const Table& t, OutputFormat f) {
    if (f == OutputFormat::Csv) {
        write_csv(os, t);
    } else {
        write_json_lines(os, t);
    }
}

inline std::string to_string(const Table& t, OutputFormat f) {
    std::ostringstream os;
    write_table(os, t, f);
    return os.str();
}

/// Reads a simple CSV (no embedded newlines) into string cells keyed by header.
struct CsvRows {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw std::invalid_argument("csv: missing column '" + name + "'");
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline CsvRows read_csv_rows(std::istream& in) {
    CsvRows r;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
    r.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        if (f.size() != r.header.size()) {
            throw std::invalid_argument("csv: row " + std::to_string(r.rows.size() + 2) + " has " +
                                        std::to_string(f.size()) + " fields, expected " +
                                        std::to_string(r.header.size()));
        }
        r.rows.push_back(std::move(f));
    }
    return r;
}

}  // namespace qgd
