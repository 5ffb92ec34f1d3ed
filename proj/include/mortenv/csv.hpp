#pragma once

// Minimal CSV handling for the comma-separated, header-first files this
// project exchanges. No quoting support: none of the declared formats
// carry embedded commas.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mortenv/errors.hpp"

namespace mortenv {

struct CsvTable {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw ValidationError(path + ": missing column '" + std::string(name) + "'");
    }

    // 1-based data row number as it appears in the file (header is line 1).
    int file_line(std::size_t row) const { return static_cast<int>(row) + 2; }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
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
    for (auto& f : out) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
        std::size_t i = 0;
        while (i < f.size() && f[i] == ' ') ++i;
        f.erase(0, i);
    }
    return out;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    CsvTable table;
    table.path = path;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    table.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != table.header.size())
            throw ValidationError(path + " line " +
                                  std::to_string(table.rows.size() + 2) + ": expected " +
                                  std::to_string(table.header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
    }
    return table;
}

inline long parse_long(const CsvTable& t, std::size_t row, int col) {
    const std::string& s = t.rows[row][col];
    long value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ValidationError(t.path + " line " + std::to_string(t.file_line(row)) +
                              ": '" + s + "' is not an integer");
    return value;
}

inline double parse_double(const CsvTable& t, std::size_t row, int col) {
    const std::string& s = t.rows[row][col];
    try {
        std::size_t used = 0;
        const double value = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return value;
    } catch (const std::exception&) {
        throw ValidationError(t.path + " line " + std::to_string(t.file_line(row)) +
                              ": '" + s + "' is not a number");
    }
}

// Round-trip safe, locale independent formatting for CSV output.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        // Prefer the shortest representation that still round-trips.
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path), path_(path) {
        if (!out_) throw ValidationError("cannot write " + path);
        write_row_strings(header);
    }

    void field(const std::string& s) { fields_.push_back(s); }
    void field(const char* s) { fields_.emplace_back(s); }
    void field(double v) { fields_.push_back(format_double(v)); }
    void field(long v) { fields_.push_back(std::to_string(v)); }
    void field(int v) { fields_.push_back(std::to_string(v)); }

    void end_row() {
        write_row_strings(fields_);
        fields_.clear();
    }

private:
    void write_row_strings(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
    std::string path_;
    std::vector<std::string> fields_;
};

}  // namespace mortenv
