// Copyright 2026 The dtqc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "dtqc/errors.hpp"

namespace dtqc::io {

/// Shortest decimal text that round-trips to the same double. Non-finite
/// values print as "inf", "-inf" or "nan".
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return std::to_string(v);
    return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Parses a double; accepts "inf", "-inf", "nan". Throws ParseError tagged with `line`.
inline double parse_double(std::string_view text, std::size_t line = 0) {
    text = trim(text);
    if (text == "inf" || text == "+inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    if (text == "nan") return NAN;
    double v = 0.0;
    const char* first = text.data();
    if (!text.empty() && text.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ParseError("not a number: '" + std::string(text) + "'", line);
    return v;
}

/// Column-oriented numeric CSV table with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

    /// Index of the named column, or throws ParseError.
    std::size_t column_index(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ParseError("missing column '" + std::string(name) + "'", 1);
    }

    const std::vector<double>& column(std::string_view name) const { return columns[column_index(name)]; }
};

/// Reads a numeric CSV: first line is the header, every following non-empty
/// line must have one number per header field.
inline CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (table.header.empty()) {
            for (auto f : fields) {
                if (f.empty()) throw ParseError("empty column name in header", lineno);
                table.header.emplace_back(f);
            }
            table.columns.resize(table.header.size());
            continue;
        }
        if (fields.size() != table.header.size())
            throw ParseError("expected " + std::to_string(table.header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             lineno);
        for (std::size_t i = 0; i < fields.size(); ++i) table.columns[i].push_back(parse_double(fields[i], lineno));
    }
    if (table.header.empty()) throw ParseError("empty CSV input", 0);
    return table;
}

/// Writes one CSV row of numbers.
template <typename... Ts>
void write_row(std::ostream& out, const Ts&... values) {
    bool first = true;
    auto emit = [&](const auto& v) {
        if (!first) out << ',';
        first = false;
        if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
            out << format_double(static_cast<double>(v));
        else
            out << v;
    };
    (emit(values), ...);
    out << '\n';
}

}  // namespace dtqc::io
