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
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "dtqc/errors.hpp"
#include "dtqc/mean_field_state.hpp"

namespace dtqc {

/// The golden ratio b = (1 + sqrt 5) / 2.
inline constexpr double golden_ratio = std::numbers::phi;

/// Physical constants of the open Dicke model in dimensionless units.
struct ModelParams {
    double omega = 1.0;       ///< cavity frequency
    double omega0 = 1.0;      ///< atomic splitting
    double kappa = 0.05;      ///< photon loss rate
    double lambda_max = 1.0;  ///< coupling during "on" half-periods
    int n_qubits = 2;         ///< only used by the quantum engine

    /// Throws DomainError unless omega, omega0 > 0, kappa >= 0, lambda_max >= 0, n_qubits >= 1.
    void validate() const;

    double critical() const;

    /// True when lambda_max lies above the superradiant threshold.
    bool superradiant() const { return lambda_max > critical(); }
};

/// Coupling threshold of the superradiant transition,
/// lambda_c = 1/2 sqrt((omega0/omega)(omega^2 + kappa^2/4)).
///
/// kappa = 0 (closed Dicke model) is accepted; negative kappa and
/// non-positive frequencies are not.
inline double critical_coupling(double omega0, double omega, double kappa) {
    if (!(omega0 > 0.0) || !(omega > 0.0) || !(kappa >= 0.0))
        throw DomainError("critical_coupling: frequencies must be > 0 and kappa >= 0");
    return 0.5 * std::sqrt((omega0 / omega) * (omega * omega + 0.25 * kappa * kappa));
}

inline void ModelParams::validate() const {
    if (!(omega > 0.0)) throw DomainError("omega must be > 0");
    if (!(omega0 > 0.0)) throw DomainError("omega0 must be > 0");
    if (!(kappa >= 0.0)) throw DomainError("kappa must be >= 0");
    if (!(lambda_max >= 0.0)) throw DomainError("lambda must be >= 0");
    if (n_qubits < 1) throw DomainError("n_qubits must be >= 1");
}

inline double ModelParams::critical() const { return critical_coupling(omega0, omega, kappa); }

/// n-th letter of the binary Fibonacci word, r_n = sign(cos(2 pi b n) - cos(pi b)),
/// the sharp limit of the tanh-smoothed definition. A vanishing argument maps to +1.
inline int fibonacci_element(std::int64_t n) {
    if (n < 1) throw DomainError("fibonacci_element: index must be >= 1");
    // cos(2 pi b n) only depends on frac(b n); reduce first to keep the argument small.
    const double bn = static_cast<double>(n) * golden_ratio;
    const double frac = bn - std::floor(bn);
    const double arg = std::cos(2.0 * std::numbers::pi * frac) - std::cos(std::numbers::pi * golden_ratio);
    return arg >= 0.0 ? +1 : -1;
}

/// Which pulse train drives the coupling.
enum class DriveProtocol {
    fibonacci,  ///< lambda (1 + r_n)/2 in the first half of period n, 0 in the second
    periodic,   ///< every r_n = +1 (plain period-doubling protocol)
    constant,   ///< lambda at all times
    off,        ///< zero coupling at all times
};

DriveProtocol parse_protocol(std::string_view name);
std::string_view to_string(DriveProtocol p);

/// How the detuning epsilon moves the drive period away from T0 = 2 pi / omega0.
enum class DetuningConvention {
    phase,   ///< free precession over T/2 overshoots pi by epsilon radians: T = T0 (1 + epsilon / pi)
    period,  ///< relative period change: T = T0 (1 + epsilon)
};

DetuningConvention parse_detuning(std::string_view name);
std::string_view to_string(DetuningConvention c);

/// Period T for a detuning epsilon under the given convention.
inline double detuned_period(double omega0, double epsilon, DetuningConvention c) {
    const double t0 = 2.0 * std::numbers::pi / omega0;
    return c == DetuningConvention::phase ? t0 * (1.0 + epsilon / std::numbers::pi) : t0 * (1.0 + epsilon);
}

/// Piecewise-constant coupling lambda(t) with a detuned period T (see DetuningConvention).
///
/// Immutable after construction. The Fibonacci letters up to `horizon`
/// periods are precomputed and shared between copies; later periods fall
/// back to fibonacci_element(), which yields the same values.
class DriveSchedule {
public:
    DriveSchedule(double omega0, double lambda_max, double epsilon, std::int64_t horizon = 0,
                  DriveProtocol protocol = DriveProtocol::fibonacci,
                  DetuningConvention convention = DetuningConvention::phase)
        : base_period_(2.0 * std::numbers::pi / omega0),
          epsilon_(epsilon),
          period_(detuned_period(omega0, epsilon, convention)),
          lambda_max_(lambda_max),
          protocol_(protocol),
          convention_(convention) {
        if (!(omega0 > 0.0)) throw DomainError("DriveSchedule: omega0 must be > 0");
        if (!(period_ > 0.0) || !std::isfinite(period_))
            throw DomainError("DriveSchedule: detuning makes the period non-positive");
        auto cache = std::make_shared<std::vector<std::int8_t>>();
        cache->reserve(static_cast<std::size_t>(std::max<std::int64_t>(horizon, 0)));
        for (std::int64_t n = 1; n <= horizon; ++n)
            cache->push_back(static_cast<std::int8_t>(fibonacci_element(n)));
        letters_ = std::move(cache);
    }

    DriveSchedule(const ModelParams& params, double epsilon, std::int64_t horizon = 0,
                  DriveProtocol protocol = DriveProtocol::fibonacci,
                  DetuningConvention convention = DetuningConvention::phase)
        : DriveSchedule(params.omega0, params.lambda_max, epsilon, horizon, protocol, convention) {}

    double base_period() const noexcept { return base_period_; }
    double period() const noexcept { return period_; }
    double half_period() const noexcept { return 0.5 * period_; }
    double epsilon() const noexcept { return epsilon_; }
    double lambda_max() const noexcept { return lambda_max_; }
    DriveProtocol protocol() const noexcept { return protocol_; }
    DetuningConvention convention() const noexcept { return convention_; }

    /// Drive letter of period n (1-based) under the active protocol.
    int letter(std::int64_t n) const {
        switch (protocol_) {
            case DriveProtocol::fibonacci:
                if (n >= 1 && n <= static_cast<std::int64_t>(letters_->size()))
                    return (*letters_)[static_cast<std::size_t>(n - 1)];
                return fibonacci_element(n);
            case DriveProtocol::periodic:
            case DriveProtocol::constant:
                if (n < 1) throw DomainError("letter: index must be >= 1");
                return +1;
            case DriveProtocol::off:
                if (n < 1) throw DomainError("letter: index must be >= 1");
                return -1;
        }
        return -1;
    }

    /// Coupling during half-period k (0-based; k = 2(n-1) is the first half of period n).
    double half_period_amplitude(std::int64_t k) const {
        switch (protocol_) {
            case DriveProtocol::constant: return lambda_max_;
            case DriveProtocol::off: return 0.0;
            default: break;
        }
        if (k % 2 != 0) return 0.0;
        return lambda_max_ * 0.5 * (1.0 + letter(k / 2 + 1));
    }

    /// lambda(t) for t >= 0; each half-period is closed on the left.
    double amplitude(double t) const {
        if (!(t >= 0.0)) throw DomainError("drive_amplitude: t must be >= 0");
        return half_period_amplitude(half_period_index(t));
    }

    /// Index k of the half-period [k T/2, (k+1) T/2) containing t.
    std::int64_t half_period_index(double t) const {
        const double periods = std::floor(t / period_);
        const double phase = t - periods * period_;
        auto k = static_cast<std::int64_t>(periods) * 2;
        return phase < 0.5 * period_ ? k : k + 1;
    }

private:
    double base_period_;
    double epsilon_;
    double period_;
    double lambda_max_;
    DriveProtocol protocol_;
    DetuningConvention convention_;
    std::shared_ptr<const std::vector<std::int8_t>> letters_;
};

inline double drive_amplitude(double t, const DriveSchedule& schedule) { return schedule.amplitude(t); }

inline DriveProtocol parse_protocol(std::string_view name) {
    if (name == "fibonacci") return DriveProtocol::fibonacci;
    if (name == "periodic") return DriveProtocol::periodic;
    if (name == "constant") return DriveProtocol::constant;
    if (name == "off") return DriveProtocol::off;
    throw ConfigError("unknown drive protocol '" + std::string(name) + "'");
}

inline DetuningConvention parse_detuning(std::string_view name) {
    if (name == "phase") return DetuningConvention::phase;
    if (name == "period") return DetuningConvention::period;
    throw ConfigError("unknown detuning convention '" + std::string(name) + "'");
}

inline std::string_view to_string(DetuningConvention c) {
    return c == DetuningConvention::phase ? "phase" : "period";
}

inline std::string_view to_string(DriveProtocol p) {
    switch (p) {
        case DriveProtocol::fibonacci: return "fibonacci";
        case DriveProtocol::periodic: return "periodic";
        case DriveProtocol::constant: return "constant";
        case DriveProtocol::off: return "off";
    }
    return "?";
}

/// Symmetry-broken stationary point of the mean-field equations at constant
/// coupling lambda_max (the branch with j_x > 0, x < 0).
///
/// j_z = -lc^2 / (2 l^2), j_x = sqrt(1 - lc^4 / l^4) / 2, so |j| = 1/2 exactly.
inline MeanFieldState superradiant_fixed_point(const ModelParams& params) {
    params.validate();
    const double lc = params.critical();
    const double l = params.lambda_max;
    if (!(l > lc)) throw DomainError("superradiant_fixed_point: requires lambda > lambda_c");
    const double ratio2 = (lc * lc) / (l * l);
    MeanFieldState s;
    s.jz = -0.5 * ratio2;
    s.jx = 0.5 * std::sqrt(1.0 - ratio2 * ratio2);
    s.jy = 0.0;
    const double w = params.omega;
    s.x = -2.0 * l * std::sqrt(2.0 * w) * s.jx / (w * w + 0.25 * params.kappa * params.kappa);
    s.p = 0.5 * params.kappa * s.x;
    return s;
}

}  // namespace dtqc
