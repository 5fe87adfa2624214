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

// Classification tools for driven-dissipative responses: spectra, the
// quasicrystal fraction, the decorrelator, Bloch-sphere projection and
// exponential lifetime fits.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "dtqc/errors.hpp"
#include "dtqc/io.hpp"
#include "dtqc/semiclassical.hpp"

namespace dtqc {

/// One-sided magnitude spectrum on [0, Nyquist].
///
/// Frequencies are in units of the drive frequency 1/T. Amplitudes are
/// normalized so that sum(amps^2) equals the sum of squared input samples.
struct Spectrum {
    std::vector<double> freqs;
    std::vector<double> amps;
    double bin_width = 0.0;

    std::size_t size() const noexcept { return freqs.size(); }
    double nyquist() const noexcept { return freqs.empty() ? 0.0 : freqs.back(); }

    /// Bin whose centre is closest to nu.
    std::size_t bin_of(double nu) const {
        const double k = std::round(nu / bin_width);
        return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(size() - 1)));
    }
};

inline constexpr std::size_t min_spectrum_samples = 64;

/// Largest power of two not exceeding n (n >= 1).
inline std::size_t floor_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p <= n / 2) p *= 2;
    return p;
}

/// Rectangular-window DFT magnitude of a real, uniformly sampled series.
/// Only the leading power-of-two samples are transformed.
inline Spectrum power_spectrum(std::span<const double> series, int samples_per_period = 2) {
    if (series.size() < min_spectrum_samples)
        throw AnalysisError("series too short for a spectrum: " + std::to_string(series.size()) + " < " +
                            std::to_string(min_spectrum_samples) + " samples");
    if (samples_per_period < 1) throw DomainError("power_spectrum: samples_per_period must be >= 1");

    const std::size_t n = floor_pow2(series.size());
    std::vector<double> in(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<std::complex<double>> out;
    Eigen::FFT<double> fft;
    fft.fwd(out, in);

    Spectrum spec;
    const std::size_t half = n / 2;
    spec.bin_width = static_cast<double>(samples_per_period) / static_cast<double>(n);
    spec.freqs.resize(half + 1);
    spec.amps.resize(half + 1);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t k = 0; k <= half; ++k) {
        const double fold = (k == 0 || k == half) ? 1.0 : std::sqrt(2.0);
        spec.freqs[k] = static_cast<double>(k) * spec.bin_width;
        spec.amps[k] = fold * norm * std::abs(out[k]);
    }
    return spec;
}

/// Frequency of the strongest non-DC bin (bins below 2 bin widths are skipped).
/// Ties resolve to the lower frequency. Throws AnalysisError when the peak is
/// less than 5x the median amplitude.
inline double find_subharmonic_peak(const Spectrum& spec) {
    std::vector<double> considered;
    std::size_t best = spec.size();
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (spec.freqs[k] < 2.0 * spec.bin_width - 1e-12 * spec.bin_width) continue;
        considered.push_back(spec.amps[k]);
        if (best == spec.size() || spec.amps[k] > spec.amps[best]) best = k;
    }
    if (best == spec.size()) throw AnalysisError("spectrum has no non-DC bins");
    auto mid = considered.begin() + static_cast<std::ptrdiff_t>(considered.size() / 2);
    std::nth_element(considered.begin(), mid, considered.end());
    const double median = *mid;
    if (!(spec.amps[best] >= 5.0 * median))
        throw AnalysisError("no subharmonic peak: spectrum is flat (max/median < 5)");
    return spec.freqs[best];
}

inline constexpr double default_fraction_halfwidth = 1.0 / 20.0;

/// Spectral weight of the nu0 bin relative to all bins with |nu - nu0| <= delta.
inline double quasicrystal_fraction(const Spectrum& spec, double nu0, double delta = default_fraction_halfwidth) {
    if (spec.size() == 0) throw AnalysisError("quasicrystal_fraction: empty spectrum");
    const double tol = 1e-9 * spec.bin_width;
    if (!(delta >= 0.0) || nu0 - delta < -tol || nu0 + delta > spec.nyquist() + tol)
        throw DomainError("quasicrystal_fraction: window [nu0 - delta, nu0 + delta] leaves the frequency axis");
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (std::fabs(spec.freqs[k] - nu0) <= delta + tol) {
            total += spec.amps[k];
            ++count;
        }
    }
    if (count == 0 || !(total > 0.0)) throw AnalysisError("quasicrystal_fraction: empty window");
    return spec.amps[spec.bin_of(nu0)] / total;
}

struct DecorrelatorResult {
    double mean_d = 0.0;
    double t_i = 0.0;
    double t_f = 0.0;
    std::vector<double> times;
    std::vector<double> d;
};

/// Mean of | |a(t)| - |b(t)| | over samples with t_i <= t <= t_f.
///
/// Both series must be sampled on the same time grid.
inline DecorrelatorResult decorrelator(std::span<const double> times, std::span<const double> a,
                                       std::span<const double> times_b, std::span<const double> b, double t_i,
                                       double t_f) {
    if (times.size() != a.size() || times_b.size() != b.size())
        throw DomainError("decorrelator: times and values differ in length");
    if (times.size() != times_b.size()) throw AnalysisError("decorrelator: mismatched sampling grids");
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double scale = std::fmax(1.0, std::fabs(times[i]));
        if (std::fabs(times[i] - times_b[i]) > 1e-9 * scale)
            throw AnalysisError("decorrelator: mismatched sampling grids");
    }
    if (!(t_i < t_f)) throw DomainError("decorrelator: requires t_i < t_f");

    DecorrelatorResult r;
    r.t_i = t_i;
    r.t_f = t_f;
    double sum = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_i || times[i] > t_f) continue;
        const double d = std::fabs(std::fabs(a[i]) - std::fabs(b[i]));
        r.times.push_back(times[i]);
        r.d.push_back(d);
        sum += d;
    }
    if (r.d.empty()) throw AnalysisError("decorrelator: no samples inside [t_i, t_f]");
    r.mean_d = sum / static_cast<double>(r.d.size());
    return r;
}

/// Decorrelator of j_x between two mean-field trajectories. t_f defaults to
/// the end of the record.
inline DecorrelatorResult decorrelator(const Trajectory& traj, const Trajectory& perturbed, double t_i = 0.0,
                                       double t_f = std::numeric_limits<double>::infinity()) {
    std::vector<double> a, b;
    a.reserve(traj.size());
    b.reserve(perturbed.size());
    for (const auto& s : traj.states) a.push_back(s.jx);
    for (const auto& s : perturbed.states) b.push_back(s.jx);
    return decorrelator(traj.times, a, perturbed.times, b, t_i, t_f);
}

using Vec3 = std::array<double, 3>;

/// Spin directions on the unit sphere, j / |j|.
inline std::vector<Vec3> bloch_projection(std::span<const MeanFieldState> states) {
    std::vector<Vec3> out;
    out.reserve(states.size());
    for (const auto& s : states) {
        const double r = std::sqrt(s.spin_norm_sq());
        if (!(r > 0.0)) throw DomainError("bloch_projection: zero-norm spin");
        out.push_back({s.jx / r, s.jy / r, s.jz / r});
    }
    return out;
}

inline std::vector<Vec3> bloch_projection(const Trajectory& traj) { return bloch_projection(traj.states); }

/// Stroboscopic samples only.
inline std::vector<Vec3> stroboscopic_bloch_projection(const Trajectory& traj) {
    std::vector<MeanFieldState> s;
    s.reserve(traj.stroboscopic_indices.size());
    for (auto i : traj.stroboscopic_indices) s.push_back(traj.states[i]);
    return bloch_projection(s);
}

struct TwoMeans {
    Vec3 centre_a{};
    Vec3 centre_b{};
    std::size_t size_a = 0;
    std::size_t size_b = 0;
    double radius = 0.0;  ///< largest per-cluster RMS distance to its centre
};

/// Deterministic 2-means (farthest-point seeding, Lloyd iterations) used as a
/// localization witness for Bloch-sphere point clouds.
inline TwoMeans two_means(std::span<const Vec3> points, int max_iter = 100) {
    if (points.size() < 2) throw AnalysisError("two_means: need at least two points");
    auto dist2 = [](const Vec3& u, const Vec3& v) {
        const double dx = u[0] - v[0], dy = u[1] - v[1], dz = u[2] - v[2];
        return dx * dx + dy * dy + dz * dz;
    };
    TwoMeans r;
    r.centre_a = points[0];
    r.centre_b = *std::max_element(points.begin(), points.end(), [&](const Vec3& u, const Vec3& v) {
        return dist2(u, points[0]) < dist2(v, points[0]);
    });
    std::vector<char> label(points.size(), 0);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = it == 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const char l = dist2(points[i], r.centre_b) < dist2(points[i], r.centre_a) ? 1 : 0;
            if (l != label[i]) changed = true;
            label[i] = l;
        }
        Vec3 sa{}, sb{};
        std::size_t na = 0, nb = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto& acc = label[i] ? sb : sa;
            for (int c = 0; c < 3; ++c) acc[c] += points[i][c];
            ++(label[i] ? nb : na);
        }
        if (na) for (int c = 0; c < 3; ++c) r.centre_a[c] = sa[c] / static_cast<double>(na);
        if (nb) for (int c = 0; c < 3; ++c) r.centre_b[c] = sb[c] / static_cast<double>(nb);
        r.size_a = na;
        r.size_b = nb;
        if (!changed) break;
    }
    double ssa = 0.0, ssb = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        (label[i] ? ssb : ssa) += dist2(points[i], label[i] ? r.centre_b : r.centre_a);
    const double ra = r.size_a ? std::sqrt(ssa / static_cast<double>(r.size_a)) : 0.0;
    const double rb = r.size_b ? std::sqrt(ssb / static_cast<double>(r.size_b)) : 0.0;
    r.radius = std::fmax(ra, rb);
    return r;
}

/// Frequencies of non-DC local maxima whose amplitude is at least
/// `rel_threshold` times the largest non-DC amplitude.
inline std::vector<double> spectral_peaks(const Spectrum& spec, double rel_threshold = 0.1) {
    std::vector<double> out;
    if (spec.size() < 3) return out;
    double top = 0.0;
    for (std::size_t k = 1; k < spec.size(); ++k) top = std::fmax(top, spec.amps[k]);
    if (!(top > 0.0)) return out;
    for (std::size_t k = 1; k < spec.size(); ++k) {
        const double a = spec.amps[k];
        const double left = spec.amps[k - 1];
        const double right = k + 1 < spec.size() ? spec.amps[k + 1] : -1.0;
        if (a >= rel_threshold * top && a > left && a >= right) out.push_back(spec.freqs[k]);
    }
    return out;
}

/// True when nu lies within `bins` bins of any listed peak.
inline bool near_any_peak(double nu, std::span<const double> peaks, double bin_width, double bins = 2.0) {
    return std::any_of(peaks.begin(), peaks.end(),
                       [&](double p) { return std::fabs(p - nu) <= bins * bin_width; });
}

/// Result of fitting |j_x| = A exp(-t / tau).
struct LifetimeFit {
    double A = 0.0;
    double tau = 0.0;       ///< +inf when the envelope does not decay
    double residual = 0.0;  ///< RMS residual of the log-linear fit
    std::size_t n_points = 0;
    bool decaying = true;
    std::vector<double> envelope_times;
    std::vector<double> envelope;
};

inline constexpr std::size_t min_envelope_points = 10;

/// Fits an exponential decay to the envelope of |series|.
///
/// `times` must be in units of the drive period. The envelope is the maximum
/// of |series| in consecutive windows of `window_periods` periods (placed at
/// the time of that maximum); points below 1e-6 are dropped, and log|j_x| is
/// fitted by linear least squares.
inline LifetimeFit fit_lifetime(std::span<const double> series, std::span<const double> times,
                                double window_periods = 5.0) {
    if (series.size() != times.size()) throw DomainError("fit_lifetime: series and times differ in length");
    if (!(window_periods > 0.0)) throw DomainError("fit_lifetime: window must be > 0");
    LifetimeFit fit;
    if (series.empty()) throw AnalysisError("fit_lifetime: fewer than 10 usable envelope points");

    const double t0 = times.front();
    std::size_t i = 0;
    while (i < series.size()) {
        const auto w = std::floor((times[i] - t0) / window_periods);
        double best = -1.0, best_t = 0.0;
        for (; i < series.size() && std::floor((times[i] - t0) / window_periods) == w; ++i) {
            const double v = std::fabs(series[i]);
            if (v > best) {
                best = v;
                best_t = times[i];
            }
        }
        if (best >= 1e-6) {
            fit.envelope_times.push_back(best_t);
            fit.envelope.push_back(best);
        }
    }
    fit.n_points = fit.envelope.size();
    if (fit.n_points < min_envelope_points) throw AnalysisError("fit_lifetime: fewer than 10 usable envelope points");

    const auto n = static_cast<double>(fit.n_points);
    double tm = 0.0, ym = 0.0;
    for (std::size_t k = 0; k < fit.n_points; ++k) {
        tm += fit.envelope_times[k];
        ym += std::log(fit.envelope[k]);
    }
    tm /= n;
    ym /= n;
    double stt = 0.0, sty = 0.0;
    for (std::size_t k = 0; k < fit.n_points; ++k) {
        const double dt = fit.envelope_times[k] - tm;
        stt += dt * dt;
        sty += dt * (std::log(fit.envelope[k]) - ym);
    }
    if (!(stt > 0.0)) throw AnalysisError("fit_lifetime: envelope points share one time");
    const double slope = sty / stt;
    const double intercept = ym - slope * tm;
    double ss = 0.0;
    for (std::size_t k = 0; k < fit.n_points; ++k) {
        const double r = std::log(fit.envelope[k]) - (intercept + slope * fit.envelope_times[k]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    fit.A = std::exp(intercept);
    // Relative tolerance absorbs rounding in the slope of a constant series.
    if (slope >= -1e-12 / std::sqrt(stt / n)) {
        fit.decaying = false;
        fit.tau = std::numeric_limits<double>::infinity();
    } else {
        fit.tau = -1.0 / slope;
    }
    return fit;
}

/// CSV with header nu,amp.
inline void write_spectrum_csv(std::ostream& out, const Spectrum& spec) {
    out << "nu,amp\n";
    for (std::size_t k = 0; k < spec.size(); ++k) io::write_row(out, spec.freqs[k], spec.amps[k]);
}

/// Rebuilds a Spectrum from a stored nu,amp table (uniform grid from 0).
inline Spectrum spectrum_from_table(const io::CsvTable& table) {
    Spectrum spec;
    spec.freqs = table.column("nu");
    spec.amps = table.column("amp");
    if (spec.freqs.size() < 2) throw ParseError("spectrum table needs at least two rows", 0);
    spec.bin_width = spec.freqs[1] - spec.freqs[0];
    return spec;
}

}  // namespace dtqc
