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

// Mean-field (thermodynamic-limit) dynamics of the driven open Dicke model.

#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "dtqc/errors.hpp"
#include "dtqc/io.hpp"
#include "dtqc/mean_field_state.hpp"
#include "dtqc/model.hpp"

namespace dtqc {

/// Time derivative of the mean-field state at coupling lambda_t.
inline MeanFieldState mean_field_rhs(const MeanFieldState& s, double lambda_t, const ModelParams& params) noexcept {
    const double g = 2.0 * lambda_t * std::sqrt(2.0 * params.omega);
    const double half_kappa = 0.5 * params.kappa;
    return {
        -params.omega0 * s.jy,
        params.omega0 * s.jx - g * s.x * s.jz,
        g * s.x * s.jy,
        s.p - half_kappa * s.x,
        -params.omega * params.omega * s.x - half_kappa * s.p - g * s.jx,
    };
}

namespace detail {

// One classical RK4 step with the coupling held at lambda_t.
inline MeanFieldState rk4_advance(const MeanFieldState& s, double dt, double lambda_t,
                                  const ModelParams& params) noexcept {
    const MeanFieldState k1 = mean_field_rhs(s, lambda_t, params);
    const MeanFieldState k2 = mean_field_rhs(s + (0.5 * dt) * k1, lambda_t, params);
    const MeanFieldState k3 = mean_field_rhs(s + (0.5 * dt) * k2, lambda_t, params);
    const MeanFieldState k4 = mean_field_rhs(s + dt * k3, lambda_t, params);
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Number of steps of size dt in a half period; throws unless it is a whole number.
inline std::int64_t steps_per_half_period(double half_period, double dt) {
    if (!(dt > 0.0)) throw ConfigError("time step must be > 0");
    const double ratio = half_period / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::fabs(ratio - rounded) > 1e-9 * rounded)
        throw ConfigError("time step must divide the half period T/2 exactly");
    return static_cast<std::int64_t>(rounded);
}

}  // namespace detail

/// Advances `state` from t to t + dt with classical RK4.
///
/// dt must divide T/2, so [t, t + dt] never straddles a switching time and
/// lambda(t), lambda(t + dt/2) and the left limit at t + dt coincide; the
/// coupling is read once at the step midpoint.
inline MeanFieldState rk4_step(const MeanFieldState& state, double t, double dt, const DriveSchedule& schedule,
                               const ModelParams& params) {
    detail::steps_per_half_period(schedule.half_period(), dt);
    return detail::rk4_advance(state, dt, schedule.amplitude(t + 0.5 * dt), params);
}

enum class RecordMode {
    dense,         ///< every integration step
    stroboscopic,  ///< every half period, t = k T/2
};

/// Sampled mean-field evolution.
struct Trajectory {
    std::vector<double> times;
    std::vector<MeanFieldState> states;
    std::vector<double> lambda;                    ///< lambda(t) at each sample (right-continuous)
    std::vector<std::size_t> stroboscopic_indices;  ///< samples at multiples of T/2
    DriveSchedule schedule;
    double max_norm_drift = 0.0;  ///< max |j^2 - 1/4| over every integration step

    std::size_t size() const noexcept { return times.size(); }

    /// j_x at the stroboscopic samples, in time order.
    std::vector<double> stroboscopic_jx() const {
        std::vector<double> out;
        out.reserve(stroboscopic_indices.size());
        for (auto i : stroboscopic_indices) out.push_back(states[i].jx);
        return out;
    }

    std::vector<double> stroboscopic_lambda() const {
        std::vector<double> out;
        out.reserve(stroboscopic_indices.size());
        for (auto i : stroboscopic_indices) out.push_back(lambda[i]);
        return out;
    }
};

/// Integrates n_periods drive periods with dt = T / dt_per_period.
///
/// dt_per_period must be a positive even integer so that every switching
/// time is a step boundary. Throws IntegrationError on the first non-finite
/// state.
inline Trajectory integrate(const MeanFieldState& initial, const DriveSchedule& schedule, const ModelParams& params,
                            std::int64_t n_periods, std::int64_t dt_per_period = 2000,
                            RecordMode mode = RecordMode::stroboscopic) {
    if (n_periods < 1) throw ConfigError("integrate: n_periods must be >= 1");
    if (dt_per_period < 2 || dt_per_period % 2 != 0)
        throw ConfigError("integrate: dt_per_period must be a positive even integer");
    if (!initial.is_finite()) throw DomainError("integrate: initial state is not finite");

    const std::int64_t per_half = dt_per_period / 2;
    const double half = schedule.half_period();
    const double dt = schedule.period() / static_cast<double>(dt_per_period);
    const std::int64_t n_halves = 2 * n_periods;

    Trajectory traj{{}, {}, {}, {}, schedule};
    const auto samples = mode == RecordMode::dense ? static_cast<std::size_t>(n_halves * per_half + 1)
                                                   : static_cast<std::size_t>(n_halves + 1);
    traj.times.reserve(samples);
    traj.states.reserve(samples);
    traj.lambda.reserve(samples);
    traj.stroboscopic_indices.reserve(static_cast<std::size_t>(n_halves + 1));

    auto record = [&](double t, const MeanFieldState& s, double lam, bool strobe) {
        if (strobe) traj.stroboscopic_indices.push_back(traj.times.size());
        traj.times.push_back(t);
        traj.states.push_back(s);
        traj.lambda.push_back(lam);
    };

    MeanFieldState s = initial;
    traj.max_norm_drift = std::fabs(s.spin_norm_sq() - 0.25);
    record(0.0, s, schedule.half_period_amplitude(0), true);

    for (std::int64_t k = 0; k < n_halves; ++k) {
        const double lam = schedule.half_period_amplitude(k);
        const double t0 = static_cast<double>(k) * half;
        for (std::int64_t j = 1; j <= per_half; ++j) {
            s = detail::rk4_advance(s, dt, lam, params);
            const bool boundary = j == per_half;
            const double t = boundary ? static_cast<double>(k + 1) * half : t0 + static_cast<double>(j) * dt;
            if (!s.is_finite()) throw IntegrationError("mean-field integration produced a non-finite state", t);
            traj.max_norm_drift = std::fmax(traj.max_norm_drift, std::fabs(s.spin_norm_sq() - 0.25));
            if (mode == RecordMode::dense || boundary)
                record(t, s, boundary ? schedule.half_period_amplitude(k + 1) : lam, boundary);
        }
    }
    return traj;
}

/// Nearby initial condition for the decorrelator: j_x shifted by -5e-4,
/// j_y = 0 and j_z chosen on the lower hemisphere so that |j| = 1/2.
inline MeanFieldState perturbed_initial_state(const MeanFieldState& base) {
    if (base.jy != 0.0) throw DomainError("perturbed_initial_state: base must have jy = 0");
    const double jx = base.jx - 0.5e-3;
    if (!(jx * jx < 0.25)) throw DomainError("perturbed_initial_state: |jx'| must be < 1/2");
    MeanFieldState out = base;
    out.jx = jx;
    out.jy = 0.0;
    out.jz = -std::sqrt(0.25 - jx * jx);
    return out;
}

enum class TimeUnits { absolute, periods };

/// CSV with header t,jx,jy,jz,x,p,lambda_t,stroboscopic.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, TimeUnits units = TimeUnits::absolute) {
    out << "t,jx,jy,jz,x,p,lambda_t,stroboscopic\n";
    const double unit = units == TimeUnits::periods ? traj.schedule.period() : 1.0;
    std::size_t next_strobe = 0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        int strobe = 0;
        if (next_strobe < traj.stroboscopic_indices.size() && traj.stroboscopic_indices[next_strobe] == i) {
            strobe = 1;
            ++next_strobe;
        }
        const auto& s = traj.states[i];
        io::write_row(out, traj.times[i] / unit, s.jx, s.jy, s.jz, s.x, s.p, traj.lambda[i], strobe);
    }
}

}  // namespace dtqc
