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

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "dtqc/errors.hpp"
#include "dtqc/io.hpp"

namespace dtqc {

/// Keys understood in configuration files.
inline constexpr std::array<std::string_view, 26> known_config_keys = {
    // model
    "omega", "omega0", "kappa", "lambda", "n_qubits", "protocol", "detuning",
    // integration
    "epsilon", "n_periods", "dt_per_period", "n_max", "max_dim", "tail_threshold",
    // analysis
    "nu0", "delta", "t_i", "t_f", "fit_window",
    // sweep
    "mode", "eps_from", "eps_to", "eps_step", "n_list", "workers", "refine_truncation",
    // output
    "time_units",
};

/// Flat key = value configuration. `[section]` headers are accepted and
/// ignored for lookup, `#` and `;` start comments. Unknown keys and
/// duplicate keys are rejected.
class ConfigFile {
public:
    ConfigFile() = default;

    static ConfigFile parse(std::istream& in) {
        ConfigFile cfg;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string_view sv = line;
            if (const auto c = sv.find_first_of("#;"); c != std::string_view::npos) sv = sv.substr(0, c);
            sv = io::trim(sv);
            if (sv.empty()) continue;
            if (sv.front() == '[') {
                if (sv.back() != ']' || sv.size() < 3) throw ParseError("malformed section header", lineno);
                continue;
            }
            const auto eq = sv.find('=');
            if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
            const std::string key(io::trim(sv.substr(0, eq)));
            const std::string value(io::trim(sv.substr(eq + 1)));
            if (key.empty()) throw ParseError("empty key", lineno);
            if (std::find(known_config_keys.begin(), known_config_keys.end(), key) == known_config_keys.end())
                throw ParseError("unknown key '" + key + "'", lineno);
            if (!cfg.values_.emplace(key, Entry{value, lineno}).second)
                throw ParseError("duplicate key '" + key + "'", lineno);
        }
        return cfg;
    }

    static ConfigFile parse(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    static ConfigFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        return parse(in);
    }

    bool contains(std::string_view key) const { return values_.count(std::string(key)) != 0; }

    std::optional<std::string> get_string(std::string_view key) const {
        auto it = values_.find(std::string(key));
        if (it == values_.end()) return std::nullopt;
        return it->second.value;
    }

    std::optional<double> get_double(std::string_view key) const {
        auto it = values_.find(std::string(key));
        if (it == values_.end()) return std::nullopt;
        return io::parse_double(it->second.value, it->second.line);
    }

    std::optional<long long> get_int(std::string_view key) const {
        auto it = values_.find(std::string(key));
        if (it == values_.end()) return std::nullopt;
        const std::string& v = it->second.value;
        long long out = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size())
            throw ParseError("not an integer: '" + v + "'", it->second.line);
        return out;
    }

    std::map<std::string, std::string> entries() const {
        std::map<std::string, std::string> out;
        for (const auto& [k, e] : values_) out.emplace(k, e.value);
        return out;
    }

private:
    struct Entry {
        std::string value;
        std::size_t line;
    };
    std::map<std::string, Entry> values_;
};

}  // namespace dtqc
