#pragma once

// Minimal CSV helpers shared by the trace, feature and report readers.
// Fields never contain commas or quotes in any of our formats.

#include <charconv>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "iotac/errors.hpp"

namespace iotac::csv {

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

/// Reads one line, dropping a trailing '\r'. Returns false at EOF.
inline bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, std::string_view column) {
    T value{};
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || field.empty()) {
        throw ParseError(line_no, "invalid " + std::string(column) + " '" + std::string(field) + "'");
    }
    return value;
}

/// Shortest round-trip representation of a double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace iotac::csv
