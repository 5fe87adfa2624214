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

// Prints the first Fibonacci letters and the resulting half-period couplings.

#include <iostream>

#include "dtqc/model.hpp"

int main() {
    const dtqc::ModelParams params;
    const dtqc::DriveSchedule drive(params, 0.0, 20);
    std::cout << "n  r_n  lambda(first half)  lambda(second half)\n";
    for (int n = 1; n <= 20; ++n)
        std::cout << n << "  " << (drive.letter(n) > 0 ? "+1" : "-1") << "  "
                  << drive.half_period_amplitude(2 * (n - 1)) << "  " << drive.half_period_amplitude(2 * n - 1)
                  << "\n";

    int plus = 0;
    for (int n = 1; n <= 10000; ++n) plus += dtqc::fibonacci_element(n) > 0;
    std::cout << "+1 density over 10^4 letters: " << plus / 1e4 << " (2 - phi = " << 2.0 - dtqc::golden_ratio << ")\n";
}
