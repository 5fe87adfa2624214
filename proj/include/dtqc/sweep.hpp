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

// Parameter scans: the detuning phase diagram and lifetime versus system size.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "dtqc/diagnostics.hpp"
#include "dtqc/model.hpp"
#include "dtqc/quantum.hpp"
#include "dtqc/semiclassical.hpp"

namespace dtqc {

/// Runs fn(0..count-1) on up to `workers` threads. Each index runs exactly
/// once; fn must not throw.
inline void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
}

/// Settings shared by every mean-field row.
struct MeanFieldRunConfig {
    std::int64_t n_periods = 5000;
    std::int64_t dt_per_period = 2000;
    DriveProtocol protocol = DriveProtocol::fibonacci;
    DetuningConvention detuning = DetuningConvention::phase;
    double delta = default_fraction_halfwidth;
    double t_i_periods = 0.0;  ///< decorrelator window start
    double t_f_periods = std::numeric_limits<double>::infinity();  ///< window end (inf: whole run)
};

/// Base and perturbed trajectories plus their spectral and chaos diagnostics.
struct MeanFieldAnalysis {
    Trajectory base;
    Trajectory perturbed;
    Spectrum spectrum;        ///< of stroboscopic j_x
    Spectrum drive_spectrum;  ///< of lambda(t) sampled identically
    double mean_d = 0.0;
};

/// Integrates the fixed-point start and its perturbed partner at detuning epsilon.
inline MeanFieldAnalysis analyze_mean_field(double epsilon, const ModelParams& params, const MeanFieldRunConfig& cfg) {
    const DriveSchedule schedule(params, epsilon, cfg.n_periods, cfg.protocol, cfg.detuning);
    const MeanFieldState start = superradiant_fixed_point(params);
    MeanFieldAnalysis out{
        integrate(start, schedule, params, cfg.n_periods, cfg.dt_per_period),
        integrate(perturbed_initial_state(start), schedule, params, cfg.n_periods, cfg.dt_per_period),
        {},
        {},
    };
    out.spectrum = power_spectrum(out.base.stroboscopic_jx());
    out.drive_spectrum = power_spectrum(out.base.stroboscopic_lambda());
    const double T = schedule.period();
    out.mean_d = decorrelator(out.base, out.perturbed, cfg.t_i_periods * T, cfg.t_f_periods * T).mean_d;
    return out;
}

enum class RowStatus { ok, failed, truncation };

inline std::string_view to_string(RowStatus s) {
    switch (s) {
        case RowStatus::ok: return "ok";
        case RowStatus::failed: return "failed";
        case RowStatus::truncation: return "truncation";
    }
    return "?";
}

/// One row of a sweep: an epsilon value (phase diagram) or a qubit count (lifetimes).
struct SweepRecord {
    double epsilon = 0.0;
    int n_qubits = 0;
    double f = NAN;
    double f_norm = NAN;
    double mean_d = NAN;
    double d_norm = NAN;
    double nu0_used = NAN;
    double tau = NAN;
    double A = NAN;
    double residual = NAN;
    int n_max = 0;
    int suggested_n_max = 0;
    RowStatus status = RowStatus::ok;
    std::string message;

    bool ok() const noexcept { return status == RowStatus::ok; }
};

enum class SweepKind { epsilon, system_size };

struct SweepResult {
    SweepKind kind = SweepKind::epsilon;
    std::vector<SweepRecord> records;  ///< in input grid order
    ModelParams params;
    MeanFieldRunConfig mf_config;
    struct QuantumConfigSnapshot {
        std::int64_t n_periods = 0;
        std::int64_t dt_per_period = 0;
        int n_max = 0;
        double tail_threshold = 0.0;
        DetuningConvention detuning = DetuningConvention::phase;
        DriveProtocol protocol = DriveProtocol::fibonacci;
    } q_config;
    double nu0_reference = NAN;
    // Wall-clock bookkeeping; never written to the sweep files.
    std::chrono::system_clock::time_point started{};
    std::chrono::system_clock::time_point finished{};
};

/// Divides f and mean_d by their maxima over successful rows. A column whose
/// maximum is zero maps to 1.
inline SweepResult normalize_columns(SweepResult result) {
    double fmax = -INFINITY, dmax = -INFINITY;
    bool any = false;
    for (const auto& r : result.records) {
        if (!r.ok()) continue;
        any = true;
        if (std::isfinite(r.f)) fmax = std::fmax(fmax, r.f);
        if (std::isfinite(r.mean_d)) dmax = std::fmax(dmax, r.mean_d);
    }
    if (!any) throw AnalysisError("normalize_columns: every row failed");
    for (auto& r : result.records) {
        if (!r.ok()) {
            r.f_norm = r.d_norm = NAN;
            continue;
        }
        r.f_norm = std::isfinite(r.f) ? (fmax > 0.0 ? r.f / fmax : 1.0) : NAN;
        r.d_norm = std::isfinite(r.mean_d) ? (dmax > 0.0 ? r.mean_d / dmax : 1.0) : NAN;
    }
    return result;
}

/// Detuning phase diagram. nu0 comes from the epsilon = 0 row unless given.
inline SweepResult sweep_epsilon(const std::vector<double>& grid, const ModelParams& params,
                                 const MeanFieldRunConfig& cfg = {}, unsigned workers = 1,
                                 std::optional<double> nu0 = std::nullopt) {
    if (grid.empty()) throw ConfigError("sweep_epsilon: empty grid");
    const auto zero = std::find(grid.begin(), grid.end(), 0.0);
    if (!nu0 && zero == grid.end())
        throw ConfigError("sweep_epsilon: grid must contain epsilon = 0 or an explicit nu0 must be supplied");
    params.validate();

    SweepResult result;
    result.kind = SweepKind::epsilon;
    result.params = params;
    result.mf_config = cfg;
    result.started = std::chrono::system_clock::now();
    result.records.resize(grid.size());
    std::vector<std::optional<Spectrum>> spectra(grid.size());

    parallel_for(grid.size(), workers, [&](std::size_t i) {
        SweepRecord& rec = result.records[i];
        rec.epsilon = grid[i];
        try {
            MeanFieldAnalysis a = analyze_mean_field(grid[i], params, cfg);
            rec.mean_d = a.mean_d;
            spectra[i] = std::move(a.spectrum);
        } catch (const std::exception& e) {
            rec.status = RowStatus::failed;
            rec.message = e.what();
        }
    });

    if (nu0) {
        result.nu0_reference = *nu0;
    } else {
        const auto z = static_cast<std::size_t>(zero - grid.begin());
        if (!spectra[z]) throw AnalysisError("sweep_epsilon: the epsilon = 0 reference run failed: " +
                                             result.records[z].message);
        result.nu0_reference = find_subharmonic_peak(*spectra[z]);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        SweepRecord& rec = result.records[i];
        if (!rec.ok()) continue;
        rec.nu0_used = result.nu0_reference;
        try {
            rec.f = quasicrystal_fraction(*spectra[i], result.nu0_reference, cfg.delta);
        } catch (const std::exception& e) {
            rec.status = RowStatus::failed;
            rec.message = e.what();
        }
    }
    result.finished = std::chrono::system_clock::now();
    return normalize_columns(std::move(result));
}

/// Settings shared by every quantum row.
struct QuantumRunConfig {
    std::int64_t n_periods = 200;
    std::int64_t dt_per_period = 500;
    int n_max = 0;  ///< 0 selects default_n_max(N)
    int max_dim = default_max_dim;
    double tail_threshold = default_tail_threshold;
    double fit_window_periods = 5.0;
    DriveProtocol protocol = DriveProtocol::fibonacci;
    DetuningConvention detuning = DetuningConvention::phase;
    /// Rerun truncation-limited rows at the suggested cutoff while it fits under max_dim.
    bool refine_truncated = false;
};

struct QuantumRun {
    QuantumTrajectory trajectory;
    TruncationReport truncation;
    std::optional<LifetimeFit> fit;
    std::string fit_error;
};

/// Evolves |+>^N (x) |0> and fits the |<Jx>|/N envelope.
inline QuantumRun run_quantum(int n_qubits, double epsilon, const ModelParams& base_params,
                              const QuantumRunConfig& cfg) {
    ModelParams params = base_params;
    params.n_qubits = n_qubits;
    params.validate();
    const int n_max = cfg.n_max > 0 ? cfg.n_max : default_n_max(n_qubits);
    const OperatorSet ops(n_qubits, n_max, cfg.max_dim);
    const DriveSchedule schedule(params, epsilon, cfg.n_periods, cfg.protocol, cfg.detuning);
    EvolveOptions opt;
    opt.tail_threshold = cfg.tail_threshold;
    opt.abort_on_truncation = false;
    QuantumRun run;
    run.trajectory = evolve(initial_state(n_qubits, n_max, cfg.max_dim), schedule, params, ops, cfg.n_periods,
                            cfg.dt_per_period, opt);
    run.truncation = check_truncation(run.trajectory, cfg.tail_threshold);
    try {
        run.fit = fit_lifetime(run.trajectory.jx, run.trajectory.times_in_periods(), cfg.fit_window_periods);
    } catch (const std::exception& e) {
        run.fit_error = e.what();
    }
    return run;
}

/// Lifetime tau(N) at fixed detuning.
inline SweepResult sweep_system_size(const std::vector<int>& n_list, double epsilon, const ModelParams& params,
                                     const QuantumRunConfig& cfg = {}, unsigned workers = 1) {
    if (n_list.empty()) throw ConfigError("sweep_system_size: empty N list");
    for (int n : n_list) {
        if (n < 1) throw ConfigError("sweep_system_size: N must be >= 1");
        const int n_max = cfg.n_max > 0 ? cfg.n_max : default_n_max(n);
        check_dimension(n, n_max, cfg.max_dim);
    }
    SweepResult result;
    result.kind = SweepKind::system_size;
    result.params = params;
    result.q_config = {cfg.n_periods, cfg.dt_per_period, cfg.n_max, cfg.tail_threshold, cfg.detuning, cfg.protocol};
    result.started = std::chrono::system_clock::now();
    result.records.resize(n_list.size());

    parallel_for(n_list.size(), workers, [&](std::size_t i) {
        SweepRecord& rec = result.records[i];
        rec.n_qubits = n_list[i];
        rec.epsilon = epsilon;
        rec.n_max = cfg.n_max > 0 ? cfg.n_max : default_n_max(n_list[i]);
        try {
            QuantumRunConfig row_cfg = cfg;
            row_cfg.n_max = rec.n_max;
            QuantumRun run = run_quantum(n_list[i], epsilon, params, row_cfg);
            for (int attempt = 0; cfg.refine_truncated && !run.truncation.pass && attempt < 3; ++attempt) {
                const int next = detail::suggest_n_max(row_cfg.n_max);
                if (static_cast<std::int64_t>(n_list[i] + 1) * (next + 1) > cfg.max_dim) break;
                row_cfg.n_max = next;
                run = run_quantum(n_list[i], epsilon, params, row_cfg);
            }
            rec.n_max = row_cfg.n_max;
            if (run.fit) {
                rec.tau = run.fit->tau;
                rec.A = run.fit->A;
                rec.residual = run.fit->residual;
            }
            if (!run.truncation.pass) {
                rec.status = RowStatus::truncation;
                rec.suggested_n_max = detail::suggest_n_max(rec.n_max);
                rec.message = run.truncation.message;
            } else if (!run.fit) {
                rec.status = RowStatus::failed;
                rec.message = run.fit_error;
            }
        } catch (const std::exception& e) {
            rec.status = RowStatus::failed;
            rec.message = e.what();
        }
    });
    result.finished = std::chrono::system_clock::now();
    return result;
}

/// epsilon,f,f_norm,mean_d,d_norm,status
inline void write_epsilon_sweep_csv(std::ostream& out, const SweepResult& r) {
    out << "epsilon,f,f_norm,mean_d,d_norm,status\n";
    for (const auto& rec : r.records) io::write_row(out, rec.epsilon, rec.f, rec.f_norm, rec.mean_d, rec.d_norm, to_string(rec.status));
}

/// N,tau,A,residual,status
inline void write_system_size_csv(std::ostream& out, const SweepResult& r) {
    out << "N,tau,A,residual,status\n";
    for (const auto& rec : r.records) io::write_row(out, rec.n_qubits, rec.tau, rec.A, rec.residual, to_string(rec.status));
}

/// Evenly spaced grid from..to inclusive; values are rounded to 12 decimals
/// so that e.g. 0.15 prints as 0.15.
inline std::vector<double> make_grid(double from, double to, double step) {
    if (!(step > 0.0)) throw ConfigError("grid step must be > 0");
    if (!(to >= from)) throw ConfigError("grid end must be >= start");
    const auto count = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = std::round((from + static_cast<double>(i) * step) * 1e12) / 1e12;
    return grid;
}

}  // namespace dtqc
