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

// Two qubits in a lossy cavity under the Fibonacci drive: lifetime of the
// stroboscopic <Jx>/N envelope.

#include <iostream>

#include "dtqc/sweep.hpp"

int main(int argc, char** argv) {
    dtqc::QuantumRunConfig cfg;
    cfg.n_periods = argc > 1 ? std::stol(argv[1]) : 100;
    const double epsilon = argc > 2 ? std::stod(argv[2]) : 0.0;
    const auto run = dtqc::run_quantum(2, epsilon, dtqc::ModelParams{}, cfg);

    std::cout << run.truncation.message << "\n";
    std::cout << "trace drift " << run.trajectory.max_trace_drift << "\n";
    if (run.fit)
        std::cout << "tau = " << run.fit->tau << " periods, A = " << run.fit->A << "\n";
    else
        std::cout << "fit failed: " << run.fit_error << "\n";
}
