#pragma once

#include <charconv>
#include <cstdio>
#include <istream>
#include <string>
#include <vector>

#include "rsopf/error.hpp"

namespace rsopf::detail {

/// Reads comma separated rows; blank lines and lines starting with '#' are skipped.
inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        for (char c : line) {
            if (c == ',') {
                cells.push_back(cell);
                cell.clear();
            } else if (c != ' ' && c != '\t') {
                cell.push_back(c);
            }
        }
        cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(where + ": '" + s + "' is not a number");
    return v;
}

inline int parse_int(const std::string& s, const std::string& where) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(where + ": '" + s + "' is not an integer");
    return v;
}

/// 17 significant digits, enough to read back the identical double.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace rsopf::detail
