#pragma once

// Column-oriented numeric tables with '#'-prefixed metadata, serialized as
// CSV. Doubles are printed with %.17g so a written file reads back with the
// exact same bit patterns, which keeps simulation outputs reproducible
// byte for byte.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "noiselock/common.hpp"

namespace noiselock::io {

struct Table {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // column-major, equal lengths

    std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }

    void add_column(std::string name, std::vector<double> values) {
        require(data.empty() || values.size() == rows(),
                "Table: all columns must have the same length");
        columns.push_back(std::move(name));
        data.push_back(std::move(values));
    }

    void add_meta(std::string key, std::string value) {
        meta.emplace_back(std::move(key), std::move(value));
    }

    const std::string* find_meta(std::string_view key) const {
        for (const auto& [k, v] : meta) {
            if (k == key) return &v;
        }
        return nullptr;
    }

    const std::vector<double>& column(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return data[i];
        }
        throw std::invalid_argument("Table: no column named '" + std::string(name) + "'");
    }

    bool has_column(std::string_view name) const {
        for (const auto& c : columns) {
            if (c == name) return true;
        }
        return false;
    }
};

// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string parse_error(const std::filesystem::path& path, std::size_t line,
                               const std::string& what) {
    return path.string() + ":" + std::to_string(line) + ": " + what;
}

inline double parse_double(const std::string& field, const std::filesystem::path& path,
                           std::size_t line) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw std::invalid_argument(parse_error(path, line, "not a number: '" + field + "'"));
    }
    return v;
}

inline void write_csv(const std::filesystem::path& path, const Table& t) {
    std::ofstream out(path);
    require(out.good(), "write_csv: cannot open " + path.string());
    for (const auto& [k, v] : t.meta) out << "# " << k << " = " << v << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        out << (i ? "," : "") << t.columns[i];
    }
    out << "\n";
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.data.size(); ++c) {
            out << (c ? "," : "") << format_double(t.data[c][r]);
        }
        out << "\n";
    }
    require(out.good(), "write_csv: write failed for " + path.string());
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline Table read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw std::invalid_argument("read_csv: cannot open " + path.string());
    Table t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip(line);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string body = strip(line.substr(1));
            const std::size_t eq = body.find('=');
            if (eq != std::string::npos) {
                t.add_meta(strip(body.substr(0, eq)), strip(body.substr(eq + 1)));
            }
            continue;
        }
        if (!have_header) {
            for (auto& name : split_fields(line)) t.columns.push_back(strip(name));
            if (t.columns.empty() || t.columns.front().empty()) {
                throw std::invalid_argument(parse_error(path, lineno, "missing header row"));
            }
            t.data.assign(t.columns.size(), {});
            have_header = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != t.columns.size()) {
            throw std::invalid_argument(parse_error(
                path, lineno,
                "expected " + std::to_string(t.columns.size()) + " fields, found " +
                    std::to_string(fields.size())));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            t.data[c].push_back(parse_double(strip(fields[c]), path, lineno));
        }
    }
    if (!have_header) throw std::invalid_argument(parse_error(path, lineno, "empty file"));
    return t;
}

}  // namespace noiselock::io
