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

#include <cmath>

namespace dtqc {

/// Point in the mean-field phase space: normalized collective spin
/// j = <J>/N (|j| = 1/2) and the cavity quadratures x, p.
///
/// Also used for time derivatives, hence the vector-space operators.
struct MeanFieldState {
    double jx = 0.0;
    double jy = 0.0;
    double jz = 0.0;
    double x = 0.0;
    double p = 0.0;

    double spin_norm_sq() const noexcept { return jx * jx + jy * jy + jz * jz; }

    bool is_finite() const noexcept {
        return std::isfinite(jx) && std::isfinite(jy) && std::isfinite(jz) && std::isfinite(x) &&
               std::isfinite(p);
    }

    friend bool operator==(const MeanFieldState&, const MeanFieldState&) = default;
};

inline MeanFieldState operator+(const MeanFieldState& a, const MeanFieldState& b) noexcept {
    return {a.jx + b.jx, a.jy + b.jy, a.jz + b.jz, a.x + b.x, a.p + b.p};
}

inline MeanFieldState operator-(const MeanFieldState& a, const MeanFieldState& b) noexcept {
    return {a.jx - b.jx, a.jy - b.jy, a.jz - b.jz, a.x - b.x, a.p - b.p};
}

inline MeanFieldState operator*(double s, const MeanFieldState& a) noexcept {
    return {s * a.jx, s * a.jy, s * a.jz, s * a.x, s * a.p};
}

/// Largest componentwise absolute difference.
inline double max_abs_diff(const MeanFieldState& a, const MeanFieldState& b) noexcept {
    const MeanFieldState d = a - b;
    return std::fmax(std::fmax(std::fmax(std::fabs(d.jx), std::fabs(d.jy)),
                               std::fmax(std::fabs(d.jz), std::fabs(d.x))),
                     std::fabs(d.p));
}

}  // namespace dtqc
