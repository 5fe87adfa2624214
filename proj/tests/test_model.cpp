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
#include <numbers>

#include "dtqc/model.hpp"
#include "dtqc/semiclassical.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("critical coupling against an independent evaluation", "[model]") {
    // lambda_c^2 = omega0 (omega^2 + kappa^2/4) / (4 omega), evaluated in long double.
    auto oracle = [](long double w0, long double w, long double k) {
        return std::sqrt(w0 * (w * w + k * k / 4.0L) / (4.0L * w));
    };
    CHECK_THAT(dtqc::critical_coupling(1, 1, 0.05), WithinAbs(static_cast<double>(oracle(1, 1, 0.05L)), 1e-12));
    CHECK_THAT(dtqc::critical_coupling(1, 1, 0.05), WithinAbs(0.5001562256, 1e-9));
    CHECK(dtqc::critical_coupling(1, 1, 0) == 0.5);
    CHECK_THAT(dtqc::critical_coupling(2.0, 0.5, 0.3), WithinAbs(static_cast<double>(oracle(2.0L, 0.5L, 0.3L)), 1e-12));
    CHECK_THAT(dtqc::critical_coupling(0.7, 1.3, 1.1), WithinAbs(static_cast<double>(oracle(0.7L, 1.3L, 1.1L)), 1e-12));
}

TEST_CASE("critical coupling rejects unphysical parameters", "[model]") {
    CHECK_THROWS_AS(dtqc::critical_coupling(0, 1, 0.05), dtqc::DomainError);
    CHECK_THROWS_AS(dtqc::critical_coupling(1, -1, 0.05), dtqc::DomainError);
    CHECK_THROWS_AS(dtqc::critical_coupling(1, 1, -0.1), dtqc::DomainError);
    CHECK_THROWS_AS(dtqc::critical_coupling(NAN, 1, 0.1), dtqc::DomainError);
}

TEST_CASE("critical coupling grows with kappa", "[model][property]") {
    double prev = 0.0;
    for (double k = 0.0; k < 3.0; k += 0.1) {
        const double lc = dtqc::critical_coupling(1, 1, k);
        CHECK(lc > prev);
        prev = lc;
    }
}

TEST_CASE("model parameter validation", "[model]") {
    dtqc::ModelParams p;
    CHECK_NOTHROW(p.validate());
    CHECK(p.superradiant());
    p.n_qubits = 0;
    CHECK_THROWS_AS(p.validate(), dtqc::DomainError);
    p = {};
    p.lambda_max = -1;
    CHECK_THROWS_AS(p.validate(), dtqc::DomainError);
}

namespace {
// r_n = +1 iff n b lies within (2 - b)/2 of an integer: cos(2 pi theta) >= cos(pi b)
// with cos(pi b) = cos(pi (2 - b)).
int sturmian_letter(long n) {
    const long double b = (1.0L + std::sqrt(5.0L)) / 2.0L;
    const long double x = static_cast<long double>(n) * b;
    const long double dist = std::fabs(x - std::nearbyint(x));
    return dist <= (2.0L - b) / 2.0L ? 1 : -1;
}
}  // namespace

TEST_CASE("Fibonacci letters match the rotation-word oracle", "[model]") {
    for (long n = 1; n <= 20000; ++n) REQUIRE(dtqc::fibonacci_element(n) == sturmian_letter(n));
}

TEST_CASE("Fibonacci word: +1 density and aperiodicity", "[model]") {
    int plus = 0;
    std::vector<int> r(10001);
    for (int n = 1; n <= 10000; ++n) {
        r[n] = dtqc::fibonacci_element(n);
        plus += r[n] > 0;
    }
    CHECK_THAT(plus / 1e4, WithinAbs(2.0 - dtqc::golden_ratio, 0.01));
    for (int p = 1; p <= 100; ++p) {
        bool differs = false;
        for (int n = 1; n + p <= 10000 && !differs; ++n) differs = r[n] != r[n + p];
        CHECK(differs);
    }
}

TEST_CASE("Fibonacci word is balanced", "[model][property]") {
    // Sturmian words: +1 counts in any two windows of equal length differ by at most one.
    std::vector<int> r(3001);
    for (int n = 1; n <= 3000; ++n) r[n] = dtqc::fibonacci_element(n) > 0;
    for (int len : {2, 3, 5, 8, 13, 21, 50, 144}) {
        int lo = len, hi = 0;
        for (int s = 1; s + len - 1 <= 3000; ++s) {
            int c = 0;
            for (int k = 0; k < len; ++k) c += r[s + k];
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        CHECK(hi - lo <= 1);
    }
}

TEST_CASE("Fibonacci first letters", "[model]") {
    // dist(n b, Z) for n = 1..8: .382 .236 .146 .472 .090 .292 .326 .056
    const int expected[] = {-1, -1, 1, -1, 1, -1, -1, 1};
    for (int n = 1; n <= 8; ++n) CHECK(dtqc::fibonacci_element(n) == expected[n - 1]);
    CHECK_THROWS_AS(dtqc::fibonacci_element(0), dtqc::DomainError);
    CHECK_THROWS_AS(dtqc::fibonacci_element(-3), dtqc::DomainError);
}

TEST_CASE("drive schedule layout", "[model]") {
    const dtqc::DriveSchedule d(1.0, 0.8, 0.0, 50);
    CHECK_THAT(d.period(), WithinRel(2 * std::numbers::pi, 1e-15));
    for (int n = 1; n <= 60; ++n) {
        const double first = d.half_period_amplitude(2 * (n - 1));
        CHECK(first == (dtqc::fibonacci_element(n) > 0 ? 0.8 : 0.0));
        CHECK(d.half_period_amplitude(2 * n - 1) == 0.0);
        CHECK(d.letter(n) == dtqc::fibonacci_element(n));
    }
    // Period 3 has r = +1: on for [2T, 2.5T), off from 2.5T.
    const double T = d.period();
    CHECK(d.amplitude(2.0 * T) == 0.8);
    CHECK(d.amplitude(2.25 * T) == 0.8);
    CHECK(d.amplitude(2.5 * T + 1e-12) == 0.0);
    CHECK(dtqc::drive_amplitude(0.1, d) == 0.0);  // period 1 has r = -1
    CHECK_THROWS_AS(d.amplitude(-1e-9), dtqc::DomainError);
}

TEST_CASE("drive protocols", "[model]") {
    const dtqc::DriveSchedule periodic(1.0, 1.0, 0.0, 0, dtqc::DriveProtocol::periodic);
    const dtqc::DriveSchedule constant(1.0, 1.0, 0.0, 0, dtqc::DriveProtocol::constant);
    const dtqc::DriveSchedule off(1.0, 1.0, 0.0, 0, dtqc::DriveProtocol::off);
    for (int k = 0; k < 20; ++k) {
        CHECK(periodic.half_period_amplitude(k) == (k % 2 == 0 ? 1.0 : 0.0));
        CHECK(constant.half_period_amplitude(k) == 1.0);
        CHECK(off.half_period_amplitude(k) == 0.0);
    }
    CHECK(dtqc::parse_protocol("periodic") == dtqc::DriveProtocol::periodic);
    CHECK(dtqc::to_string(dtqc::DriveProtocol::off) == "off");
    CHECK_THROWS_AS(dtqc::parse_protocol("square"), dtqc::ConfigError);
}

TEST_CASE("detuning conventions", "[model]") {
    const double T0 = 2 * std::numbers::pi;
    CHECK_THAT(dtqc::detuned_period(1.0, 0.1, dtqc::DetuningConvention::period), WithinRel(T0 * 1.1, 1e-15));
    CHECK_THAT(dtqc::detuned_period(1.0, 0.1, dtqc::DetuningConvention::phase),
               WithinRel(T0 * (1 + 0.1 / std::numbers::pi), 1e-15));
    // Phase convention: free precession over T/2 turns the spin by pi + epsilon.
    const dtqc::DriveSchedule d(2.0, 1.0, 0.07);
    CHECK_THAT(2.0 * d.half_period(), WithinRel(std::numbers::pi + 0.07, 1e-14));
    CHECK(dtqc::parse_detuning("period") == dtqc::DetuningConvention::period);
    CHECK_THROWS_AS(dtqc::parse_detuning("frequency"), dtqc::ConfigError);
    CHECK_THROWS_AS(dtqc::DriveSchedule(1.0, 1.0, -1.5, 0, dtqc::DriveProtocol::fibonacci,
                                        dtqc::DetuningConvention::period),
                    dtqc::DomainError);
}

TEST_CASE("letter cache and fallback agree", "[model][property]") {
    const dtqc::DriveSchedule cached(1.0, 1.0, 0.0, 100);
    const dtqc::DriveSchedule uncached(1.0, 1.0, 0.0, 0);
    for (int n = 1; n <= 300; ++n) CHECK(cached.letter(n) == uncached.letter(n));
}

TEST_CASE("superradiant fixed point is stationary", "[model]") {
    const dtqc::ModelParams p;
    const auto s = dtqc::superradiant_fixed_point(p);
    CHECK_THAT(s.jx, WithinAbs(0.48411, 1e-5));
    CHECK_THAT(s.jz, WithinAbs(-0.12508, 1e-5));
    CHECK_THAT(s.x, WithinAbs(-1.3684, 1e-4));
    CHECK_THAT(s.p, WithinAbs(-0.03421, 1e-5));
    CHECK_THAT(s.spin_norm_sq(), WithinAbs(0.25, 1e-15));
    const auto ds = dtqc::mean_field_rhs(s, p.lambda_max, p);
    CHECK(std::fabs(ds.jx) < 1e-14);
    CHECK(std::fabs(ds.jy) < 1e-14);
    CHECK(std::fabs(ds.jz) < 1e-14);
    CHECK(std::fabs(ds.x) < 1e-14);
    CHECK(std::fabs(ds.p) < 1e-14);
}

TEST_CASE("fixed point over a range of parameters", "[model][property]") {
    for (double kappa : {0.0, 0.05, 0.5, 1.5})
        for (double lambda : {0.9, 1.0, 1.7, 3.0}) {
            dtqc::ModelParams p;
            p.kappa = kappa;
            p.lambda_max = lambda;
            p.omega = 1.3;
            if (!p.superradiant()) continue;
            const auto s = dtqc::superradiant_fixed_point(p);
            const auto ds = dtqc::mean_field_rhs(s, lambda, p);
            CHECK(std::fabs(ds.jy) + std::fabs(ds.x) + std::fabs(ds.p) < 1e-13);
            CHECK(s.jx > 0.0);
        }
}

TEST_CASE("fixed point requires the superradiant phase", "[model]") {
    dtqc::ModelParams p;
    p.lambda_max = 0.4;
    CHECK_THROWS_AS(dtqc::superradiant_fixed_point(p), dtqc::DomainError);
    p.lambda_max = p.critical();
    CHECK_THROWS_AS(dtqc::superradiant_fixed_point(p), dtqc::DomainError);
}
