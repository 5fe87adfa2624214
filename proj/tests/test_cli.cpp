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

// End-to-end checks of the tqc binary.

#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "dtqc/io.hpp"

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

const fs::path work = TQC_WORK_DIR;

struct Result {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Result run(const std::string& args, const std::string& env = "") {
    fs::create_directories(work);
    const fs::path out = work / "stdout.txt", err = work / "stderr.txt";
    const std::string cmd = env + " " + TQC_BINARY + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

fs::path fresh(const std::string& name) {
    const fs::path p = work / name;
    fs::remove_all(p);
    return p;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::size_t data_rows(const fs::path& csv) {
    const auto text = slurp(csv);
    const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    return lines > 0 ? lines - 1 : 0;
}

}  // namespace

TEST_CASE("usage errors exit with code 2", "[cli]") {
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
    const auto periods = run("mf-run --periods 0 --out-dir " + fresh("u1").string());
    CHECK(periods.code == 2);
    CHECK_THAT(periods.err, ContainsSubstring("n_periods"));
    CHECK(run("q-run --n-qubits 0 --out-dir " + fresh("u2").string()).code == 2);
    CHECK(run("mf-run --dt-per-period 999 --periods 10 --out-dir " + fresh("u3").string()).code == 2);
    CHECK(run("mf-run --protocol square --out-dir " + fresh("u4").string()).code == 2);
    CHECK(run("sweep --mode diagonal --out-dir " + fresh("u5").string()).code == 2);
    CHECK(run("mf-run --lambda 0.3 --out-dir " + fresh("u6").string()).code == 2);
}

TEST_CASE("mf-run writes a spectrum with a dominant non-DC peak", "[cli]") {
    const auto dir = fresh("mf");
    const auto r = run("mf-run --epsilon 0 --periods 5000 --emit spectrum,drive-spectrum,bloch --decorrelator --out-dir " +
                       dir.string());
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("nu0=") && ContainsSubstring("f=") && ContainsSubstring("mean_d="));
    const auto summary = read_json(dir / "summary.json");
    const double nu0 = summary["nu0"];
    CHECK(nu0 > 0.05);
    CHECK(nu0 < 0.95);
    CHECK(summary["peak_shifted_from_drive"] == true);
    CHECK(data_rows(dir / "spectrum.csv") == 4097);
    CHECK(fs::exists(dir / "drive_spectrum.csv"));
    CHECK(fs::exists(dir / "bloch.csv"));
    CHECK(fs::exists(dir / "config.json"));
    CHECK(fs::exists(dir / "config.cfg"));

    SECTION("analyze reproduces the stored nu0") {
        const auto adir = fresh("mf_analyze");
        const auto a = run("analyze --input " + (dir / "spectrum.csv").string() + " --out-dir " + adir.string());
        REQUIRE(a.code == 0);
        const auto analysis = read_json(adir / "analysis.json");
        CHECK(analysis["nu0"].get<double>() == nu0);
        CHECK(analysis["f"].get<double>() == summary["f"].get<double>());
    }
}

TEST_CASE("identical invocations produce identical files", "[cli]") {
    const auto a = fresh("det_a"), b = fresh("det_b");
    const std::string args = "mf-run --epsilon 0.02 --periods 400 --emit spectrum,trajectory,bloch --decorrelator";
    REQUIRE(run(args + " --out-dir " + a.string()).code == 0);
    REQUIRE(run(args + " --out-dir " + b.string()).code == 0);
    for (const char* f : {"spectrum.csv", "trajectory.csv", "bloch.csv", "summary.json", "config.json", "config.cfg"})
        CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("config snapshot re-runs the command", "[cli]") {
    const auto a = fresh("snap_a"), b = fresh("snap_b");
    REQUIRE(run("mf-run --epsilon 0.03 --periods 300 --kappa 0.07 --out-dir " + a.string()).code == 0);
    REQUIRE(run("mf-run --config " + (a / "config.cfg").string() + " --out-dir " + b.string()).code == 0);
    CHECK(slurp(a / "spectrum.csv") == slurp(b / "spectrum.csv"));
    CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
}

TEST_CASE("flags override the config file", "[cli]") {
    const auto dir = fresh("override");
    fs::create_directories(dir);
    std::ofstream(dir / "in.cfg") << "[model]\nkappa = 0.1\n[run]\nn_periods = 200\nepsilon = 0.01\n";
    REQUIRE(run("mf-run --config " + (dir / "in.cfg").string() + " --periods 256 --out-dir " + dir.string()).code == 0);
    const auto cfg = read_json(dir / "config.json")["settings"];
    CHECK(cfg["kappa"] == "0.1");
    CHECK(cfg["n_periods"] == "256");
    CHECK(cfg["epsilon"] == "0.01");
    CHECK(read_json(dir / "summary.json")["n_periods"] == 256);
}

TEST_CASE("bad config files are usage errors with line numbers", "[cli]") {
    const auto dir = fresh("badcfg");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.cfg") << "kappa = 0.1\n\nspeed = 3\n";
    const auto r = run("mf-run --config " + (dir / "bad.cfg").string() + " --out-dir " + dir.string());
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("line 3"));
}

TEST_CASE("json table format", "[cli]") {
    const auto dir = fresh("jsonfmt");
    REQUIRE(run("mf-run --periods 200 --format json --out-dir " + dir.string()).code == 0);
    const auto j = read_json(dir / "spectrum.json");
    CHECK(j["columns"] == nlohmann::json::array({"nu", "amp"}));
    CHECK(j["rows"].size() == 129);
}

TEST_CASE("analyze: short series, malformed CSV, synthetic fit", "[cli]") {
    const auto dir = fresh("analyze");
    fs::create_directories(dir);
    {
        std::ofstream s(dir / "short.csv");
        s << "t,jx\n";
        for (int k = 0; k < 10; ++k) s << 0.5 * k << ',' << 0.4 * std::cos(k) << '\n';
    }
    const auto shorty = run("analyze --time-units periods --input " + (dir / "short.csv").string() + " --out-dir " +
                            dir.string());
    CHECK(shorty.code == 1);
    CHECK_THAT(shorty.err, ContainsSubstring("series too short"));

    std::ofstream(dir / "bad.csv") << "t,jx\n0,0.1\n0.5,0.2\n1.0,zz\n";
    const auto bad = run("analyze --input " + (dir / "bad.csv").string() + " --out-dir " + dir.string());
    CHECK(bad.code == 1);
    CHECK_THAT(bad.err, ContainsSubstring("line 4"));

    {
        std::ofstream s(dir / "decay.csv");
        s << "t,jx\n";
        for (int k = 0; k <= 400; ++k) {
            const double t = 0.5 * k;
            s << dtqc::io::format_double(t) << ',' << dtqc::io::format_double(0.3 * std::exp(-t / 42.0)) << '\n';
        }
    }
    const auto fit = run("analyze --fit --time-units periods --input " + (dir / "decay.csv").string() + " --out-dir " +
                         dir.string());
    REQUIRE(fit.code == 0);
    const auto j = read_json(dir / "analysis.json");
    CHECK(std::fabs(j["tau"].get<double>() / 42.0 - 1.0) < 1e-6);
    CHECK(std::fabs(j["A"].get<double>() / 0.3 - 1.0) < 1e-6);
}

TEST_CASE("analyze recomputes the decorrelator from stored trajectories", "[cli]") {
    const auto base = fresh("dec_base"), out = fresh("dec_out");
    REQUIRE(run("mf-run --epsilon 0.15 --periods 400 --decorrelator --emit trajectory --out-dir " + base.string())
                .code == 0);
    const double expected = read_json(base / "summary.json")["mean_d"];
    CHECK(expected > 0.0);
    const auto r = run("analyze --input " + (base / "trajectory.csv").string() + " --perturbed " +
                       (base / "trajectory_perturbed.csv").string() + " --epsilon 0.15 --out-dir " + out.string());
    REQUIRE(r.code == 0);
    CHECK(read_json(out / "analysis.json")["mean_d"].get<double>() == expected);
}

TEST_CASE("q-run", "[cli]") {
    const auto dir = fresh("q");
    const auto r = run("q-run --n-qubits 2 --epsilon 0 --periods 30 --fit --fit-window 2 --out-dir " + dir.string());
    REQUIRE(r.code == 0);
    const auto fit = read_json(dir / "fit.json");
    CHECK(fit["tau"].is_number());
    CHECK(fit["tau"].get<double>() > 0.0);
    CHECK(data_rows(dir / "quantum.csv") == 61);
    CHECK(read_json(dir / "config.json")["settings"]["n_max"] == "30");

    SECTION("analyze fits the stored quantum record identically") {
        const auto adir = fresh("q_analyze");
        const auto a = run("analyze --fit --fit-window 2 --input " + (dir / "quantum.csv").string() +
                           " --out-dir " + adir.string());
        REQUIRE(a.code == 0);
        CHECK(read_json(adir / "analysis.json")["tau"] == fit["tau"]);
    }
}

TEST_CASE("resource cap refusal and TQC_MAX_DIM", "[cli]") {
    const auto dir = fresh("cap");
    const auto r = run("q-run --n-qubits 4 --periods 2 --out-dir " + dir.string(), "TQC_MAX_DIM=50");
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("refusing") && ContainsSubstring("--n-max 9"));
    const auto big = run("q-run --n-qubits 12 --periods 2 --out-dir " + dir.string());
    CHECK(big.code == 2);
    const auto ok = run("q-run --n-qubits 1 --n-max 8 --periods 2 --tail-threshold 1 --out-dir " + dir.string(),
                        "TQC_MAX_DIM=18");
    CHECK(ok.code == 0);
}

TEST_CASE("q-run reports truncation", "[cli]") {
    const auto dir = fresh("trunc");
    const auto r = run("q-run --n-qubits 4 --n-max 4 --periods 10 --out-dir " + dir.string());
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("n_max >= 14"));
}

TEST_CASE("epsilon sweep: 41 rows, worker-independent bytes", "[cli]") {
    const auto a = fresh("sweep_a"), b = fresh("sweep_b");
    const std::string args = "sweep --mode epsilon --from 0 --to 0.2 --step 0.005 --periods 200 --dt-per-period 400";
    REQUIRE(run(args + " --workers 1 --out-dir " + a.string()).code == 0);
    REQUIRE(run(args + " --workers 8 --out-dir " + b.string()).code == 0);
    CHECK(data_rows(a / "sweep_epsilon.csv") == 41);
    CHECK(slurp(a / "sweep_epsilon.csv") == slurp(b / "sweep_epsilon.csv"));
    CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
    const auto cfg = read_json(a / "config.json")["settings"];
    CHECK(cfg["workers"] == "1");
    CHECK(cfg["eps_step"] == "0.005");
}

TEST_CASE("system-size sweep through the CLI", "[cli]") {
    const auto dir = fresh("sweep_n");
    const auto r = run("sweep --mode system-size --n 1:2 --epsilon 0 --periods 20 --fit-window 1 --out-dir " +
                       dir.string());
    REQUIRE(r.code == 0);
    const auto text = slurp(dir / "sweep_system_size.csv");
    CHECK(text.rfind("N,tau,A,residual,status\n1,", 0) == 0);
    CHECK(data_rows(dir / "sweep_system_size.csv") == 2);
    CHECK(run("sweep --mode system-size --n 3:1 --out-dir " + dir.string()).code == 2);
}
