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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "dtqc/diagnostics.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double pi = std::numbers::pi;

std::vector<double> tone(std::size_t n, double nu, double spp = 2.0, double amp = 1.0, double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = amp * std::cos(2 * pi * nu * static_cast<double>(k) / spp + phase);
    return x;
}
}  // namespace

TEST_CASE("spectrum matches a direct DFT", "[diagnostics]") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    std::vector<double> x(256);
    for (auto& v : x) v = g(rng);
    const auto spec = dtqc::power_spectrum(x, 2);
    REQUIRE(spec.size() == 129);
    CHECK(spec.bin_width == 2.0 / 256);
    for (std::size_t k = 0; k <= 128; ++k) {
        std::complex<double> acc = 0;
        for (std::size_t j = 0; j < 256; ++j)
            acc += x[j] * std::polar(1.0, -2 * pi * static_cast<double>(j * k) / 256.0);
        const double fold = (k == 0 || k == 128) ? 1.0 : std::sqrt(2.0);
        CHECK_THAT(spec.amps[k], WithinAbs(fold * std::abs(acc) / 16.0, 1e-10));
        CHECK(spec.freqs[k] == static_cast<double>(k) * spec.bin_width);
    }
}

TEST_CASE("spectrum obeys Parseval", "[diagnostics][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t n : {64u, 128u, 1024u, 4096u}) {
        std::vector<double> x(n);
        for (auto& v : x) v = u(rng);
        double energy = 0, spectral = 0;
        for (double v : x) energy += v * v;
        for (double a : dtqc::power_spectrum(x).amps) spectral += a * a;
        CHECK_THAT(spectral, WithinRel(energy, 1e-12));
    }
}

TEST_CASE("spectrum uses the leading power of two", "[diagnostics]") {
    auto x = tone(1500, 0.25);
    const auto spec = dtqc::power_spectrum(x);
    CHECK(spec.size() == 513);
    CHECK(spec.nyquist() == 1.0);
    CHECK(dtqc::floor_pow2(1) == 1);
    CHECK(dtqc::floor_pow2(1023) == 512);
    CHECK(dtqc::floor_pow2(1024) == 1024);
}

TEST_CASE("short series are rejected", "[diagnostics]") {
    CHECK_THROWS_AS(dtqc::power_spectrum(std::vector<double>(10, 1.0)), dtqc::AnalysisError);
    CHECK_THROWS_WITH(dtqc::power_spectrum(std::vector<double>(63, 1.0)),
                      Catch::Matchers::ContainsSubstring("series too short"));
    CHECK_NOTHROW(dtqc::power_spectrum(std::vector<double>(64, 1.0)));
}

TEST_CASE("peak detection finds a pure tone", "[diagnostics]") {
    const double nu = 300.0 * 2.0 / 4096.0;  // on a bin centre
    const auto spec = dtqc::power_spectrum(tone(4096, nu, 2.0, 0.3, 0.4));
    CHECK(dtqc::find_subharmonic_peak(spec) == nu);
    // All weight sits in one bin, so the fraction is 1.
    CHECK_THAT(dtqc::quasicrystal_fraction(spec, nu), WithinAbs(1.0, 1e-9));
}

TEST_CASE("peak detection ignores the DC component", "[diagnostics]") {
    auto x = tone(1024, 0.5, 2.0, 0.1);
    for (auto& v : x) v += 5.0;
    CHECK(dtqc::find_subharmonic_peak(dtqc::power_spectrum(x)) == 0.5);
}

TEST_CASE("flat spectra have no peak", "[diagnostics]") {
    std::vector<double> impulse(512, 0.0);
    impulse[0] = 1.0;
    CHECK_THROWS_AS(dtqc::find_subharmonic_peak(dtqc::power_spectrum(impulse)), dtqc::AnalysisError);
}

TEST_CASE("ties resolve to the lower frequency", "[diagnostics]") {
    dtqc::Spectrum s;
    s.bin_width = 0.1;
    for (int k = 0; k <= 10; ++k) {
        s.freqs.push_back(0.1 * k);
        s.amps.push_back(0.01);
    }
    s.amps[4] = s.amps[7] = 1.0;
    CHECK(dtqc::find_subharmonic_peak(s) == s.freqs[4]);
}

TEST_CASE("quasicrystal fraction on a hand-built spectrum", "[diagnostics]") {
    dtqc::Spectrum s;
    s.bin_width = 0.01;
    for (int k = 0; k <= 100; ++k) {
        s.freqs.push_back(0.01 * k);
        s.amps.push_back(k == 40 ? 3.0 : 0.1);
    }
    // Window |nu - 0.4| <= 0.05 covers 11 bins: 3 / (3 + 10 * 0.1).
    CHECK_THAT(dtqc::quasicrystal_fraction(s, 0.4, 0.05), WithinAbs(0.75, 1e-12));
    CHECK_THAT(dtqc::quasicrystal_fraction(s, 0.4, 0.0), WithinAbs(1.0, 1e-12));
    CHECK_THROWS_AS(dtqc::quasicrystal_fraction(s, 0.02, 0.05), dtqc::DomainError);
    CHECK_THROWS_AS(dtqc::quasicrystal_fraction(s, 0.98, 0.05), dtqc::DomainError);
    s.amps.assign(s.amps.size(), 0.0);
    CHECK_THROWS_AS(dtqc::quasicrystal_fraction(s, 0.4, 0.05), dtqc::AnalysisError);
}

TEST_CASE("quasicrystal fraction lies in [0, 1]", "[diagnostics][property]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> x(2048);
    for (int trial = 0; trial < 20; ++trial) {
        for (auto& v : x) v = u(rng);
        const auto spec = dtqc::power_spectrum(x);
        const double nu0 = 0.1 + 0.8 * u(rng);
        const double f = dtqc::quasicrystal_fraction(spec, nu0);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }
}

TEST_CASE("spectral peaks and drive proximity", "[diagnostics]") {
    auto x = tone(2048, 0.25);
    const auto y = tone(2048, 0.75, 2.0, 0.5);
    const auto z = tone(2048, 0.5, 2.0, 0.01);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += y[k] + z[k];
    const auto spec = dtqc::power_spectrum(x);
    const auto peaks = dtqc::spectral_peaks(spec, 0.1);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0] == 0.25);
    CHECK(peaks[1] == 0.75);
    CHECK(dtqc::near_any_peak(0.25 + 2 * spec.bin_width, peaks, spec.bin_width));
    CHECK_FALSE(dtqc::near_any_peak(0.25 + 3 * spec.bin_width, peaks, spec.bin_width));
}

TEST_CASE("decorrelator", "[diagnostics]") {
    const std::vector<double> t = {0, 1, 2, 3, 4};
    const std::vector<double> a = {0.5, -0.4, 0.3, -0.2, 0.1};
    const std::vector<double> b = {0.5, 0.4, -0.1, 0.2, -0.3};
    // | |a| - |b| | = 0, 0, 0.2, 0, 0.2
    CHECK_THAT(dtqc::decorrelator(t, a, t, b, 0, 10).mean_d, WithinAbs(0.08, 1e-15));
    CHECK_THAT(dtqc::decorrelator(t, a, t, b, 1.5, 2.5).mean_d, WithinAbs(0.2, 1e-15));
    CHECK(dtqc::decorrelator(t, a, t, a, 0, 10).mean_d == 0.0);
    const std::vector<double> shifted = {0, 1, 2, 3, 4.5};
    CHECK_THROWS_AS(dtqc::decorrelator(t, a, shifted, b, 0, 10), dtqc::AnalysisError);
    CHECK_THROWS_AS(dtqc::decorrelator(t, a, t, b, 3, 3), dtqc::DomainError);
    CHECK_THROWS_AS(dtqc::decorrelator(t, a, t, b, 10, 20), dtqc::AnalysisError);
}

TEST_CASE("decorrelator is symmetric and bounded", "[diagnostics][property]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<double> t(300), a(300), b(300);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = 0.5 * static_cast<double>(i);
        a[i] = u(rng);
        b[i] = u(rng);
    }
    const double ab = dtqc::decorrelator(t, a, t, b, 0, 1e9).mean_d;
    const double ba = dtqc::decorrelator(t, b, t, a, 0, 1e9).mean_d;
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK(ab <= 0.5);
}

TEST_CASE("Bloch projection", "[diagnostics]") {
    std::vector<dtqc::MeanFieldState> states(3);
    states[0].jx = 0.5;
    states[1].jx = 0.3;
    states[1].jz = -0.4;
    states[2].jy = 0.1;
    const auto pts = dtqc::bloch_projection(states);
    CHECK(pts[0] == dtqc::Vec3{1, 0, 0});
    CHECK_THAT(pts[1][0], WithinAbs(0.6, 1e-15));
    CHECK_THAT(pts[1][2], WithinAbs(-0.8, 1e-15));
    CHECK(pts[2] == dtqc::Vec3{0, 1, 0});
    states.push_back({});
    CHECK_THROWS_AS(dtqc::bloch_projection(states), dtqc::DomainError);
}

TEST_CASE("two-means separates two tight clusters", "[diagnostics]") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0, 0.01);
    std::vector<dtqc::Vec3> pts;
    for (int i = 0; i < 50; ++i) pts.push_back({0.9 + g(rng), 0.1 + g(rng), g(rng)});
    for (int i = 0; i < 30; ++i) pts.push_back({-0.9 + g(rng), g(rng), 0.2 + g(rng)});
    const auto r = dtqc::two_means(pts);
    CHECK(r.size_a + r.size_b == 80);
    CHECK(std::min(r.size_a, r.size_b) == 30);
    CHECK(r.radius < 0.05);
    CHECK(std::fabs(r.centre_a[0] - r.centre_b[0]) > 1.7);
    CHECK_THROWS_AS(dtqc::two_means(std::vector<dtqc::Vec3>{{1, 0, 0}}), dtqc::AnalysisError);
}

TEST_CASE("lifetime fit recovers a clean exponential", "[diagnostics]") {
    for (double tau : {20.0, 77.0, 400.0}) {
        const double A = 0.37;
        std::vector<double> t, y;
        for (int k = 0; k <= 400; ++k) {
            t.push_back(0.5 * k);
            y.push_back(A * std::exp(-t.back() / tau));
        }
        const auto fit = dtqc::fit_lifetime(y, t);
        CHECK(fit.decaying);
        CHECK_THAT(fit.tau, WithinRel(tau, 1e-6));
        CHECK_THAT(fit.A, WithinRel(A, 1e-6));
        CHECK(fit.residual < 1e-10);
    }
}

TEST_CASE("lifetime fit tolerates a 5% modulation", "[diagnostics]") {
    const double A = 0.2, tau = 90.0;
    std::vector<double> t, y;
    for (int k = 0; k <= 800; ++k) {
        t.push_back(0.5 * k);
        const double sign = k % 3 == 0 ? -1.0 : 1.0;
        y.push_back(sign * A * std::exp(-t.back() / tau) * (1.0 + 0.05 * std::cos(2 * pi * 0.13 * t.back())));
    }
    const auto fit = dtqc::fit_lifetime(y, t);
    CHECK_THAT(fit.tau, WithinRel(tau, 0.05));
    CHECK_THAT(fit.A, WithinRel(A, 0.05));
}

TEST_CASE("lifetime fit edge cases", "[diagnostics]") {
    std::vector<double> t, flat;
    for (int k = 0; k < 200; ++k) {
        t.push_back(0.5 * k);
        flat.push_back(k % 2 ? 0.3 : -0.3);
    }
    const auto fit = dtqc::fit_lifetime(flat, t);
    CHECK_FALSE(fit.decaying);
    CHECK(std::isinf(fit.tau));
    CHECK_THAT(fit.A, WithinRel(0.3, 1e-12));

    std::vector<double> short_t(t.begin(), t.begin() + 60), short_y(flat.begin(), flat.begin() + 60);
    CHECK_THROWS_AS(dtqc::fit_lifetime(short_y, short_t), dtqc::AnalysisError);  // 6 windows
    CHECK_THROWS_AS(dtqc::fit_lifetime(flat, short_t), dtqc::DomainError);
    std::vector<double> zeros(200, 0.0);
    CHECK_THROWS_AS(dtqc::fit_lifetime(zeros, t), dtqc::AnalysisError);
}

TEST_CASE("spectrum CSV round trip is exact", "[diagnostics]") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> x(512);
    for (auto& v : x) v = u(rng);
    const auto spec = dtqc::power_spectrum(x);
    std::stringstream buf;
    dtqc::write_spectrum_csv(buf, spec);
    const auto back = dtqc::spectrum_from_table(dtqc::io::read_csv(buf));
    CHECK(back.freqs == spec.freqs);
    CHECK(back.amps == spec.amps);
    CHECK(back.bin_width == spec.bin_width);
}
