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

// tqc: command-line front end.
//
//   tqc mf-run   mean-field trajectory, spectrum, decorrelator, Bloch projection
//   tqc q-run    few-qubit master-equation run and lifetime fit
//   tqc sweep    epsilon phase diagram or lifetime versus N
//   tqc analyze  re-analysis of stored CSV files
//
// Settings resolve as: built-in defaults < config file < TQC_MAX_DIM < flags.
// Exit codes: 0 success, 1 runtime or numerical failure, 2 usage/config error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dtqc/config.hpp"
#include "dtqc/diagnostics.hpp"
#include "dtqc/io.hpp"
#include "dtqc/model.hpp"
#include "dtqc/quantum.hpp"
#include "dtqc/semiclassical.hpp"
#include "dtqc/sweep.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Resolved configuration

enum class Command { mf_run, q_run, sweep, analyze };

// Which config section each key belongs to in the snapshot.
const std::map<std::string, std::string>& key_sections() {
    static const std::map<std::string, std::string> m = {
        {"omega", "model"},         {"omega0", "model"},       {"kappa", "model"},
        {"lambda", "model"},        {"n_qubits", "model"},     {"protocol", "model"},
        {"detuning", "model"},      {"epsilon", "run"},        {"n_periods", "run"},
        {"dt_per_period", "run"},   {"n_max", "run"},          {"max_dim", "run"},
        {"tail_threshold", "run"},  {"nu0", "analysis"},       {"delta", "analysis"},
        {"t_i", "analysis"},        {"t_f", "analysis"},       {"fit_window", "analysis"},
        {"mode", "sweep"},          {"eps_from", "sweep"},     {"eps_to", "sweep"},
        {"eps_step", "sweep"},      {"n_list", "sweep"},       {"workers", "sweep"},
        {"refine_truncation", "sweep"}, {"time_units", "output"},
    };
    return m;
}

class RunConfig {
public:
    std::map<std::string, std::string> values;
    std::string out_dir = ".";
    std::string format = "csv";

    bool has(const std::string& key) const { return values.count(key) != 0; }

    const std::string& str(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw UsageError("missing setting '" + key + "'");
        return it->second;
    }

    double num(const std::string& key) const {
        try {
            return dtqc::io::parse_double(str(key));
        } catch (const dtqc::ParseError&) {
            throw UsageError("invalid value for " + key + ": '" + str(key) + "'");
        }
    }

    long long integer(const std::string& key) const {
        const std::string& v = str(key);
        long long out = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size())
            throw UsageError("invalid integer for " + key + ": '" + v + "'");
        return out;
    }

    bool boolean(const std::string& key) const {
        const std::string& v = str(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw UsageError("invalid boolean for " + key + ": '" + v + "'");
    }

    std::optional<double> opt_num(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return num(key);
    }

    dtqc::ModelParams params() const {
        dtqc::ModelParams p;
        p.omega = num("omega");
        p.omega0 = num("omega0");
        p.kappa = num("kappa");
        p.lambda_max = num("lambda");
        if (has("n_qubits")) p.n_qubits = static_cast<int>(integer("n_qubits"));
        return p;
    }

    dtqc::DriveProtocol protocol() const { return dtqc::parse_protocol(str("protocol")); }
    dtqc::DetuningConvention detuning() const { return dtqc::parse_detuning(str("detuning")); }

    dtqc::TimeUnits time_units() const {
        const auto& u = str("time_units");
        if (u == "absolute") return dtqc::TimeUnits::absolute;
        if (u == "periods") return dtqc::TimeUnits::periods;
        throw UsageError("time_units must be 'absolute' or 'periods'");
    }

    // key = value snapshot with [section] headers; feeds straight back into --config.
    std::string to_config_text() const {
        std::map<std::string, std::vector<std::string>> by_section;
        for (const auto& [k, v] : values) {
            auto it = key_sections().find(k);
            by_section[it == key_sections().end() ? "run" : it->second].push_back(k + " = " + v);
        }
        std::ostringstream out;
        bool first = true;
        for (const char* s : {"model", "run", "analysis", "sweep", "output"}) {
            auto it = by_section.find(s);
            if (it == by_section.end()) continue;
            if (!first) out << '\n';
            first = false;
            out << '[' << s << "]\n";
            for (const auto& line : it->second) out << line << '\n';
        }
        return out.str();
    }

    json to_json(std::string_view command) const {
        json j;
        j["command"] = command;
        json settings = json::object();
        for (const auto& [k, v] : values) settings[k] = v;
        j["settings"] = settings;
        j["format"] = format;
        return j;
    }
};

// Raw string flags bound by CLI11; only flags actually given override.
class FlagSet {
public:
    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto& slot = storage_[key];
        options_.emplace_back(key, app->add_option(flag, slot, help));
    }

    void add_switch(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        switches_.emplace_back(key, app->add_flag(flag, help));
    }

    void apply(std::map<std::string, std::string>& values) const {
        for (const auto& [key, opt] : options_)
            if (opt->count() > 0) values[key] = storage_.at(key);
        for (const auto& [key, opt] : switches_)
            if (opt->count() > 0) values[key] = "true";
    }

private:
    std::map<std::string, std::string> storage_;
    std::vector<std::pair<std::string, CLI::Option*>> options_;
    std::vector<std::pair<std::string, CLI::Option*>> switches_;
};

struct Common {
    std::string config_path;
    std::string out_dir = ".";
    std::string format = "csv";
    FlagSet flags;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "config file (key = value, [section] headers)");
    sub->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
    sub->add_option("--format", c.format, "table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

void add_model_flags(CLI::App* sub, FlagSet& f) {
    f.add(sub, "--omega", "omega", "cavity frequency");
    f.add(sub, "--omega0", "omega0", "qubit frequency");
    f.add(sub, "--kappa", "kappa", "cavity decay rate");
    f.add(sub, "--lambda", "lambda", "drive coupling amplitude");
    f.add(sub, "--epsilon", "epsilon", "detuning");
    f.add(sub, "--protocol", "protocol", "fibonacci | periodic | constant | off");
    f.add(sub, "--detuning", "detuning", "detuning convention: phase | period");
}

void set_default(std::map<std::string, std::string>& v, const std::string& key, const std::string& value) {
    v.try_emplace(key, value);
}

void model_defaults(std::map<std::string, std::string>& v) {
    set_default(v, "omega", "1");
    set_default(v, "omega0", "1");
    set_default(v, "kappa", "0.05");
    set_default(v, "lambda", "1");
    set_default(v, "epsilon", "0");
    set_default(v, "protocol", "fibonacci");
    set_default(v, "detuning", "phase");
}

void mf_defaults(std::map<std::string, std::string>& v) {
    set_default(v, "n_periods", "5000");
    set_default(v, "dt_per_period", "2000");
    set_default(v, "delta", "0.05");
    set_default(v, "t_i", "0");
    set_default(v, "t_f", "inf");
    set_default(v, "time_units", "absolute");
}

void q_defaults(std::map<std::string, std::string>& v) {
    set_default(v, "n_qubits", "2");
    set_default(v, "n_periods", "200");
    set_default(v, "dt_per_period", "500");
    set_default(v, "max_dim", std::to_string(dtqc::default_max_dim));
    set_default(v, "tail_threshold", "1e-06");
    set_default(v, "fit_window", "5");
    set_default(v, "time_units", "absolute");
}

RunConfig resolve(Command cmd, const Common& c) {
    RunConfig rc;
    rc.out_dir = c.out_dir;
    rc.format = c.format;
    if (!c.config_path.empty()) {
        try {
            rc.values = dtqc::ConfigFile::load(c.config_path).entries();
        } catch (const std::exception& e) {
            throw UsageError(c.config_path + ": " + e.what());
        }
    }
    if (const char* env = std::getenv("TQC_MAX_DIM"); env && *env) rc.values["max_dim"] = env;
    c.flags.apply(rc.values);

    auto& v = rc.values;
    model_defaults(v);
    switch (cmd) {
        case Command::mf_run: mf_defaults(v); break;
        case Command::q_run: q_defaults(v); break;
        case Command::sweep: {
            set_default(v, "mode", "epsilon");
            set_default(v, "workers", "1");
            if (v["mode"] == "epsilon") {
                mf_defaults(v);
                set_default(v, "eps_from", "0");
                set_default(v, "eps_to", "0.2");
                set_default(v, "eps_step", "0.005");
            } else if (v["mode"] == "system-size") {
                q_defaults(v);
                set_default(v, "n_list", "2:6");
                set_default(v, "refine_truncation", "false");
            } else {
                throw UsageError("--mode must be 'epsilon' or 'system-size'");
            }
            break;
        }
        case Command::analyze:
            set_default(v, "delta", "0.05");
            set_default(v, "t_i", "0");
            set_default(v, "t_f", "inf");
            set_default(v, "fit_window", "5");
            set_default(v, "time_units", "absolute");
            break;
    }
    return rc;
}

// ---------------------------------------------------------------------------
// Output helpers

json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
}

// Converts CSV text into {"columns": [...], "rows": [[...], ...]}.
json csv_to_json(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    json out;
    out["columns"] = json::array();
    out["rows"] = json::array();
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = dtqc::io::split(line, ',');
        if (header) {
            for (auto f : fields) out["columns"].push_back(std::string(f));
            header = false;
            continue;
        }
        json row = json::array();
        for (auto f : fields) {
            try {
                row.push_back(number(dtqc::io::parse_double(f)));
            } catch (const dtqc::ParseError&) {
                row.push_back(std::string(f));
            }
        }
        out["rows"].push_back(std::move(row));
    }
    return out;
}

class Output {
public:
    explicit Output(const RunConfig& rc) : dir_(rc.out_dir), format_(rc.format) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw UsageError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    // Writes a table produced by `fill` as <stem>.csv or <stem>.json.
    template <typename Fill>
    fs::path table(const std::string& stem, Fill&& fill) const {
        std::ostringstream csv;
        fill(csv);
        if (format_ == "json") return text(stem + ".json", csv_to_json(csv.str()).dump(1) + "\n");
        return text(stem + ".csv", csv.str());
    }

    fs::path json_file(const std::string& name, const json& j) const { return text(name, j.dump(2) + "\n"); }

    fs::path text(const std::string& name, const std::string& content) const {
        const fs::path p = dir_ / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
        out << content;
        if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
        return p;
    }

    void snapshot(const RunConfig& rc, std::string_view command) const {
        json_file("config.json", rc.to_json(command));
        text("config.cfg", rc.to_config_text());
    }

private:
    fs::path dir_;
    std::string format_;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto f : dtqc::io::split(s, ','))
        if (!f.empty()) out.emplace_back(f);
    return out;
}

// "2:6" (inclusive range) or "2,3,5".
std::vector<int> parse_n_list(const std::string& s) {
    std::vector<int> out;
    auto to_int = [&](std::string_view t) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
            throw UsageError("invalid N list '" + s + "'");
        return v;
    };
    if (const auto colon = s.find(':'); colon != std::string::npos) {
        const int a = to_int(dtqc::io::trim(std::string_view(s).substr(0, colon)));
        const int b = to_int(dtqc::io::trim(std::string_view(s).substr(colon + 1)));
        if (b < a) throw UsageError("invalid N range '" + s + "'");
        for (int n = a; n <= b; ++n) out.push_back(n);
    } else {
        for (auto f : dtqc::io::split(s, ',')) out.push_back(to_int(f));
    }
    if (out.empty()) throw UsageError("empty N list");
    for (int n : out)
        if (n < 1) throw UsageError("N must be >= 1");
    return out;
}

long long positive(const RunConfig& rc, const std::string& key) {
    const long long v = rc.integer(key);
    if (v < 1) throw UsageError(key + " must be >= 1");
    return v;
}

// ---------------------------------------------------------------------------
// mf-run

struct MfFlags {
    std::string emit = "spectrum";
    bool decorrelator = false;
    bool dense = false;
};

int cmd_mf_run(const RunConfig& rc, const MfFlags& mf) {
    const dtqc::ModelParams params = rc.params();
    params.validate();
    const double epsilon = rc.num("epsilon");
    dtqc::MeanFieldRunConfig cfg;
    cfg.n_periods = positive(rc, "n_periods");
    cfg.dt_per_period = positive(rc, "dt_per_period");
    cfg.protocol = rc.protocol();
    cfg.detuning = rc.detuning();
    cfg.delta = rc.num("delta");
    cfg.t_i_periods = rc.num("t_i");
    cfg.t_f_periods = rc.num("t_f");
    const auto units = rc.time_units();

    std::vector<std::string> emit = split_list(mf.emit);
    for (const auto& e : emit)
        if (e != "spectrum" && e != "bloch" && e != "trajectory" && e != "drive-spectrum")
            throw UsageError("--emit accepts spectrum, bloch, trajectory, drive-spectrum; got '" + e + "'");
    auto wants = [&](std::string_view e) { return std::find(emit.begin(), emit.end(), e) != emit.end(); };

    const Output out(rc);
    out.snapshot(rc, "mf-run");

    const dtqc::DriveSchedule schedule(params, epsilon, cfg.n_periods, cfg.protocol, cfg.detuning);
    const dtqc::MeanFieldState start = dtqc::superradiant_fixed_point(params);
    const auto mode = mf.dense ? dtqc::RecordMode::dense : dtqc::RecordMode::stroboscopic;
    const dtqc::Trajectory base = dtqc::integrate(start, schedule, params, cfg.n_periods, cfg.dt_per_period, mode);

    json summary;
    summary["epsilon"] = epsilon;
    summary["period"] = schedule.period();
    summary["n_periods"] = cfg.n_periods;
    summary["max_norm_drift"] = number(base.max_norm_drift);

    const dtqc::Spectrum spec = dtqc::power_spectrum(base.stroboscopic_jx());
    const dtqc::Spectrum drive = dtqc::power_spectrum(base.stroboscopic_lambda());
    const double peak = dtqc::find_subharmonic_peak(spec);

    // nu0 for the fraction: flag, this run's own peak at epsilon = 0, or an epsilon = 0 reference run.
    double nu0 = peak;
    std::string nu0_source = "peak";
    if (auto given = rc.opt_num("nu0")) {
        nu0 = *given;
        nu0_source = "setting";
    } else if (epsilon != 0.0) {
        const dtqc::DriveSchedule ref(params, 0.0, cfg.n_periods, cfg.protocol, cfg.detuning);
        const auto ref_traj = dtqc::integrate(start, ref, params, cfg.n_periods, cfg.dt_per_period);
        nu0 = dtqc::find_subharmonic_peak(dtqc::power_spectrum(ref_traj.stroboscopic_jx()));
        nu0_source = "reference run at epsilon = 0";
    }
    const double f = dtqc::quasicrystal_fraction(spec, nu0, cfg.delta);
    const auto drive_peaks = dtqc::spectral_peaks(drive);

    summary["peak_nu"] = peak;
    summary["nu0"] = nu0;
    summary["nu0_source"] = nu0_source;
    summary["f"] = f;
    summary["drive_peaks"] = drive_peaks;
    summary["peak_shifted_from_drive"] = !dtqc::near_any_peak(peak, drive_peaks, spec.bin_width);

    std::ostringstream line;
    line << "epsilon=" << dtqc::io::format_double(epsilon) << " nu0=" << dtqc::io::format_double(nu0)
         << " f=" << dtqc::io::format_double(f);

    if (mf.decorrelator) {
        const auto pert = dtqc::integrate(dtqc::perturbed_initial_state(start), schedule, params, cfg.n_periods,
                                          cfg.dt_per_period, mode);
        const double T = schedule.period();
        const auto d = dtqc::decorrelator(base, pert, cfg.t_i_periods * T, cfg.t_f_periods * T);
        summary["mean_d"] = d.mean_d;
        line << " mean_d=" << dtqc::io::format_double(d.mean_d);
        if (wants("trajectory"))
            out.table("trajectory_perturbed", [&](std::ostream& o) { dtqc::write_trajectory_csv(o, pert, units); });
    }

    if (wants("spectrum")) out.table("spectrum", [&](std::ostream& o) { dtqc::write_spectrum_csv(o, spec); });
    if (wants("drive-spectrum")) out.table("drive_spectrum", [&](std::ostream& o) { dtqc::write_spectrum_csv(o, drive); });
    if (wants("trajectory"))
        out.table("trajectory", [&](std::ostream& o) { dtqc::write_trajectory_csv(o, base, units); });
    if (wants("bloch")) {
        const auto pts = dtqc::stroboscopic_bloch_projection(base);
        const double unit = units == dtqc::TimeUnits::periods ? schedule.period() : 1.0;
        out.table("bloch", [&](std::ostream& o) {
            o << "t,bx,by,bz\n";
            for (std::size_t k = 0; k < pts.size(); ++k)
                dtqc::io::write_row(o, base.times[base.stroboscopic_indices[k]] / unit, pts[k][0], pts[k][1], pts[k][2]);
        });
        const auto tm = dtqc::two_means(pts);
        summary["bloch_two_means"] = {
            {"centre_a", tm.centre_a}, {"centre_b", tm.centre_b}, {"size_a", tm.size_a},
            {"size_b", tm.size_b},     {"radius", tm.radius},
        };
    }
    out.json_file("summary.json", summary);
    std::cout << line.str() << '\n';
    return exit_ok;
}

// ---------------------------------------------------------------------------
// q-run

struct QFlags {
    bool fit = false;
    bool allow_truncation = false;
    bool check_positivity = false;
};

int cmd_q_run(const RunConfig& rc, const QFlags& qf) {
    dtqc::ModelParams params = rc.params();
    const long long n = rc.integer("n_qubits");
    if (n < 1) throw UsageError("n_qubits must be >= 1");
    params.n_qubits = static_cast<int>(n);
    params.validate();
    const double epsilon = rc.num("epsilon");
    const long long n_periods = positive(rc, "n_periods");
    const long long dtpp = positive(rc, "dt_per_period");
    const int n_max = rc.has("n_max") ? static_cast<int>(rc.integer("n_max")) : dtqc::default_n_max(params.n_qubits);
    const int max_dim = static_cast<int>(positive(rc, "max_dim"));
    const double window = rc.num("fit_window");
    const auto units = rc.time_units();

    RunConfig snap = rc;
    snap.values["n_max"] = std::to_string(n_max);

    const long long dim = static_cast<long long>(params.n_qubits + 1) * (n_max + 1);
    if (dim > max_dim) {
        const int fit_n_max = max_dim / (params.n_qubits + 1) - 1;
        std::ostringstream msg;
        msg << "refusing: Hilbert space dimension " << dim << " = (N+1)(n_max+1) exceeds the cap " << max_dim
            << ". Suggested: ";
        if (fit_n_max >= 4) msg << "--n-max " << fit_n_max << " (may fail the truncation check), or ";
        msg << "--max-dim " << dim << " / TQC_MAX_DIM=" << dim;
        throw dtqc::ResourceError(msg.str());
    }

    const Output out(snap);
    out.snapshot(snap, "q-run");

    const dtqc::DriveSchedule schedule(params, epsilon, n_periods, rc.protocol(), rc.detuning());
    dtqc::EvolveOptions opt;
    opt.tail_threshold = rc.num("tail_threshold");
    opt.abort_on_truncation = !qf.allow_truncation;
    opt.check_positivity = qf.check_positivity;
    const dtqc::OperatorSet ops(params.n_qubits, n_max, max_dim);
    const auto tr = dtqc::evolve(dtqc::initial_state(params.n_qubits, n_max, max_dim), schedule, params, ops,
                                 n_periods, dtpp, opt);
    out.table("quantum", [&](std::ostream& o) { dtqc::write_quantum_csv(o, tr, units == dtqc::TimeUnits::periods); });

    const auto trunc = dtqc::check_truncation(tr, opt.tail_threshold);
    json summary;
    summary["n_qubits"] = params.n_qubits;
    summary["n_max"] = n_max;
    summary["epsilon"] = epsilon;
    summary["period"] = schedule.period();
    summary["n_periods"] = n_periods;
    summary["max_trace_drift"] = number(tr.max_trace_drift);
    summary["max_hermiticity_dev"] = number(tr.max_hermiticity_dev);
    if (qf.check_positivity) summary["min_eigenvalue"] = number(tr.min_eigenvalue);
    summary["max_tail_population"] = number(trunc.max_tail);
    summary["truncation_ok"] = trunc.pass;

    std::ostringstream line;
    line << "N=" << params.n_qubits << " epsilon=" << dtqc::io::format_double(epsilon) << " n_max=" << n_max;
    if (qf.fit) {
        const auto fit = dtqc::fit_lifetime(tr.jx, tr.times_in_periods(), window);
        json fj;
        fj["A"] = number(fit.A);
        fj["tau"] = number(fit.tau);
        fj["tau_units"] = "drive periods";
        fj["residual"] = number(fit.residual);
        fj["n_points"] = fit.n_points;
        fj["decaying"] = fit.decaying;
        fj["window_periods"] = window;
        out.json_file("fit.json", fj);
        summary["tau"] = number(fit.tau);
        summary["A"] = number(fit.A);
        line << " tau=" << dtqc::io::format_double(fit.tau) << " A=" << dtqc::io::format_double(fit.A);
    }
    out.json_file("summary.json", summary);
    std::cout << line.str() << '\n';
    if (!trunc.pass) {
        std::cerr << "warning: " << trunc.message << '\n';
        return exit_runtime;
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const RunConfig& rc) {
    const dtqc::ModelParams params = rc.params();
    params.validate();
    const long long workers = positive(rc, "workers");
    dtqc::SweepResult result;
    std::string stem;

    RunConfig snap = rc;
    if (rc.str("mode") == "epsilon") {
        dtqc::MeanFieldRunConfig cfg;
        cfg.n_periods = positive(rc, "n_periods");
        cfg.dt_per_period = positive(rc, "dt_per_period");
        cfg.protocol = rc.protocol();
        cfg.detuning = rc.detuning();
        cfg.delta = rc.num("delta");
        cfg.t_i_periods = rc.num("t_i");
        cfg.t_f_periods = rc.num("t_f");
        std::vector<double> grid;
        try {
            grid = dtqc::make_grid(rc.num("eps_from"), rc.num("eps_to"), rc.num("eps_step"));
        } catch (const dtqc::ConfigError& e) {
            throw UsageError(e.what());
        }
        const Output out(snap);
        out.snapshot(snap, "sweep");
        stem = "sweep_epsilon";
        result = dtqc::sweep_epsilon(grid, params, cfg, static_cast<unsigned>(workers), rc.opt_num("nu0"));
        out.table(stem, [&](std::ostream& o) { dtqc::write_epsilon_sweep_csv(o, result); });
    } else {
        dtqc::QuantumRunConfig cfg;
        cfg.n_periods = positive(rc, "n_periods");
        cfg.dt_per_period = positive(rc, "dt_per_period");
        cfg.n_max = rc.has("n_max") ? static_cast<int>(rc.integer("n_max")) : 0;
        cfg.max_dim = static_cast<int>(positive(rc, "max_dim"));
        cfg.tail_threshold = rc.num("tail_threshold");
        cfg.fit_window_periods = rc.num("fit_window");
        cfg.refine_truncated = rc.boolean("refine_truncation");
        cfg.protocol = rc.protocol();
        cfg.detuning = rc.detuning();
        const auto n_list = parse_n_list(rc.str("n_list"));
        for (int n : n_list) dtqc::check_dimension(n, cfg.n_max > 0 ? cfg.n_max : dtqc::default_n_max(n), cfg.max_dim);
        const Output out(snap);
        out.snapshot(snap, "sweep");
        stem = "sweep_system_size";
        result = dtqc::sweep_system_size(n_list, rc.num("epsilon"), params, cfg, static_cast<unsigned>(workers));
        out.table(stem, [&](std::ostream& o) { dtqc::write_system_size_csv(o, result); });
    }

    json summary;
    summary["mode"] = rc.str("mode");
    summary["rows"] = result.records.size();
    if (result.kind == dtqc::SweepKind::epsilon) summary["nu0_reference"] = number(result.nu0_reference);
    json problems = json::array();
    std::size_t bad = 0;
    for (const auto& r : result.records) {
        if (r.ok()) continue;
        ++bad;
        json p;
        if (result.kind == dtqc::SweepKind::epsilon)
            p["epsilon"] = r.epsilon;
        else
            p["N"] = r.n_qubits;
        p["status"] = std::string(dtqc::to_string(r.status));
        p["message"] = r.message;
        if (r.suggested_n_max > 0) p["suggested_n_max"] = r.suggested_n_max;
        problems.push_back(p);
        std::cerr << "warning: row " << (result.kind == dtqc::SweepKind::epsilon ? dtqc::io::format_double(r.epsilon)
                                                                                 : std::to_string(r.n_qubits))
                  << ": " << r.message << '\n';
    }
    summary["failed_rows"] = problems;
    if (result.kind == dtqc::SweepKind::system_size) {
        json used = json::object();
        for (const auto& r : result.records) used[std::to_string(r.n_qubits)] = r.n_max;
        summary["n_max_used"] = used;
    }
    Output(snap).json_file("summary.json", summary);
    std::cout << stem << ": " << result.records.size() << " rows, " << bad << " flagged\n";
    return bad == 0 ? exit_ok : exit_runtime;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeFlags {
    std::string input;
    std::string perturbed;
    std::string column = "jx";
    bool fit = false;
};

dtqc::io::CsvTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open '" + path + "'");
    try {
        return dtqc::io::read_csv(in);
    } catch (const dtqc::ParseError& e) {
        throw dtqc::ParseError(path + ": " + e.what(), 0);
    }
}

bool has_column(const dtqc::io::CsvTable& t, std::string_view name) {
    return std::find(t.header.begin(), t.header.end(), name) != t.header.end();
}

struct Series {
    std::vector<double> t_periods;
    std::vector<double> values;
};

// Stroboscopic rows only when the file marks them.
Series extract_series(const dtqc::io::CsvTable& t, const std::string& column, double period) {
    const auto& time = t.column("t");
    const auto& v = t.column(column);
    const std::vector<double>* strobe = has_column(t, "stroboscopic") ? &t.column("stroboscopic") : nullptr;
    Series s;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        if (strobe && (*strobe)[i] != 1.0) continue;
        s.t_periods.push_back(time[i] / period);
        s.values.push_back(v[i]);
    }
    return s;
}

int cmd_analyze(const RunConfig& rc, const AnalyzeFlags& af) {
    if (af.input.empty()) throw UsageError("analyze: --input is required");
    const auto table = load_table(af.input);
    const Output out(rc);
    out.snapshot(rc, "analyze");
    json result;
    result["input"] = fs::path(af.input).filename().string();
    std::ostringstream line;
    const double delta = rc.num("delta");

    if (has_column(table, "nu") && has_column(table, "amp")) {
        const auto spec = dtqc::spectrum_from_table(table);
        const double peak = dtqc::find_subharmonic_peak(spec);
        const double nu0 = rc.opt_num("nu0").value_or(peak);
        const double f = dtqc::quasicrystal_fraction(spec, nu0, delta);
        result["peak_nu"] = peak;
        result["nu0"] = nu0;
        result["f"] = f;
        line << "nu0=" << dtqc::io::format_double(nu0) << " f=" << dtqc::io::format_double(f);
        out.json_file("analysis.json", result);
        std::cout << line.str() << '\n';
        return exit_ok;
    }

    double period = 1.0;  // length of a drive period in the file's time unit
    if (rc.time_units() == dtqc::TimeUnits::absolute) {
        const dtqc::ModelParams params = rc.params();
        period = dtqc::DriveSchedule(params, rc.num("epsilon"), 0, rc.protocol(), rc.detuning()).period();
    }
    const Series s = extract_series(table, af.column, period);
    if (s.values.size() < 2) throw dtqc::AnalysisError("series too short: " + std::to_string(s.values.size()) + " samples");
    const double step = s.t_periods[1] - s.t_periods[0];
    const int spp = static_cast<int>(std::lround(1.0 / step));
    if (spp < 1 || std::fabs(spp * step - 1.0) > 1e-6)
        throw dtqc::AnalysisError("samples are not an integer number per drive period");
    result["samples_per_period"] = spp;
    result["samples"] = s.values.size();

    // Spectral analysis is optional when a fit or decorrelator was asked for.
    const bool spectral_optional = af.fit || !af.perturbed.empty();
    if (s.values.size() < dtqc::min_spectrum_samples) {
        const std::string msg = "series too short: " + std::to_string(s.values.size()) +
                                " samples, need at least " + std::to_string(dtqc::min_spectrum_samples);
        if (!spectral_optional) throw dtqc::AnalysisError(msg);
        result["spectrum_note"] = msg;
    } else {
        const auto spec = dtqc::power_spectrum(s.values, spp);
        out.table("spectrum", [&](std::ostream& o) { dtqc::write_spectrum_csv(o, spec); });
        try {
            const double peak = dtqc::find_subharmonic_peak(spec);
            const double nu0 = rc.opt_num("nu0").value_or(peak);
            const double f = dtqc::quasicrystal_fraction(spec, nu0, delta);
            result["peak_nu"] = peak;
            result["nu0"] = nu0;
            result["f"] = f;
            line << "nu0=" << dtqc::io::format_double(nu0) << " f=" << dtqc::io::format_double(f);
        } catch (const dtqc::AnalysisError& e) {
            // A flat spectrum is normal for a decayed quantum record.
            if (!spectral_optional) throw;
            result["spectrum_note"] = e.what();
        } catch (const dtqc::DomainError& e) {
            if (!spectral_optional) throw;
            result["spectrum_note"] = e.what();
        }
    }

    if (!af.perturbed.empty()) {
        const Series p = extract_series(load_table(af.perturbed), af.column, period);
        const auto d = dtqc::decorrelator(s.t_periods, s.values, p.t_periods, p.values, rc.num("t_i"), rc.num("t_f"));
        result["mean_d"] = d.mean_d;
        line << " mean_d=" << dtqc::io::format_double(d.mean_d);
    }
    if (af.fit) {
        const auto fit = dtqc::fit_lifetime(s.values, s.t_periods, rc.num("fit_window"));
        result["tau"] = number(fit.tau);
        result["A"] = number(fit.A);
        result["residual"] = number(fit.residual);
        result["tau_units"] = "drive periods";
        line << " tau=" << dtqc::io::format_double(fit.tau) << " A=" << dtqc::io::format_double(fit.A);
    }
    out.json_file("analysis.json", result);
    std::cout << dtqc::io::trim(line.str()) << '\n';
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dissipative Dicke time-quasicrystal simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tqc 1.0.0");

    Common mf_c, q_c, sw_c, an_c;
    MfFlags mf;
    QFlags qf;
    AnalyzeFlags af;

    auto* mf_run = app.add_subcommand("mf-run", "mean-field run from the superradiant fixed point");
    add_common(mf_run, mf_c);
    add_model_flags(mf_run, mf_c.flags);
    mf_c.flags.add(mf_run, "--periods", "n_periods", "drive periods (default 5000)");
    mf_c.flags.add(mf_run, "--dt-per-period", "dt_per_period", "RK4 steps per period, even (default 2000)");
    mf_c.flags.add(mf_run, "--nu0", "nu0", "reference frequency for f");
    mf_c.flags.add(mf_run, "--delta", "delta", "half-width of the fraction window");
    mf_c.flags.add(mf_run, "--t-i", "t_i", "decorrelator window start, periods");
    mf_c.flags.add(mf_run, "--t-f", "t_f", "decorrelator window end, periods");
    mf_c.flags.add(mf_run, "--time-units", "time_units", "absolute | periods");
    mf_run->add_option("--emit", mf.emit, "comma list: spectrum,drive-spectrum,bloch,trajectory")->capture_default_str();
    mf_run->add_flag("--decorrelator", mf.decorrelator, "also integrate the perturbed start and report <d>");
    mf_run->add_flag("--dense", mf.dense, "record every integration step in the trajectory");

    auto* q_run = app.add_subcommand("q-run", "few-qubit Lindblad run");
    add_common(q_run, q_c);
    add_model_flags(q_run, q_c.flags);
    q_c.flags.add(q_run, "--n-qubits", "n_qubits", "number of qubits N (default 2)");
    q_c.flags.add(q_run, "--n-max", "n_max", "Fock cutoff (default 20 + 5N)");
    q_c.flags.add(q_run, "--periods", "n_periods", "drive periods (default 200)");
    q_c.flags.add(q_run, "--dt-per-period", "dt_per_period", "RK4 steps per period, even (default 500)");
    q_c.flags.add(q_run, "--max-dim", "max_dim", "Hilbert-space dimension cap");
    q_c.flags.add(q_run, "--tail-threshold", "tail_threshold", "Fock tail population limit");
    q_c.flags.add(q_run, "--fit-window", "fit_window", "envelope window, periods");
    q_c.flags.add(q_run, "--time-units", "time_units", "absolute | periods");
    q_run->add_flag("--fit", qf.fit, "fit the |jx| envelope and write fit.json");
    q_run->add_flag("--allow-truncation", qf.allow_truncation, "finish the run even if the Fock tail grows");
    q_run->add_flag("--check-positivity", qf.check_positivity, "track the smallest eigenvalue of rho");

    auto* sweep = app.add_subcommand("sweep", "epsilon phase diagram or lifetime versus N");
    add_common(sweep, sw_c);
    add_model_flags(sweep, sw_c.flags);
    sw_c.flags.add(sweep, "--mode", "mode", "epsilon | system-size");
    sw_c.flags.add(sweep, "--from", "eps_from", "first epsilon");
    sw_c.flags.add(sweep, "--to", "eps_to", "last epsilon");
    sw_c.flags.add(sweep, "--step", "eps_step", "epsilon step");
    sw_c.flags.add(sweep, "--n", "n_list", "qubit counts: 2:6 or 2,4,6");
    sw_c.flags.add(sweep, "--workers", "workers", "parallel rows");
    sw_c.flags.add(sweep, "--periods", "n_periods", "drive periods per row");
    sw_c.flags.add(sweep, "--dt-per-period", "dt_per_period", "RK4 steps per period, even");
    sw_c.flags.add(sweep, "--nu0", "nu0", "reference frequency (default: epsilon = 0 row)");
    sw_c.flags.add(sweep, "--delta", "delta", "half-width of the fraction window");
    sw_c.flags.add(sweep, "--n-max", "n_max", "Fock cutoff for every N (default 20 + 5N)");
    sw_c.flags.add(sweep, "--max-dim", "max_dim", "Hilbert-space dimension cap");
    sw_c.flags.add(sweep, "--tail-threshold", "tail_threshold", "Fock tail population limit");
    sw_c.flags.add(sweep, "--fit-window", "fit_window", "envelope window, periods");
    sw_c.flags.add_switch(sweep, "--refine-truncation", "refine_truncation",
                          "rerun truncated rows at the suggested n_max while it fits the cap");

    auto* analyze = app.add_subcommand("analyze", "re-analyse stored CSV output");
    add_common(analyze, an_c);
    add_model_flags(analyze, an_c.flags);
    analyze->add_option("--input", af.input, "trajectory, quantum or spectrum CSV")->required();
    analyze->add_option("--perturbed", af.perturbed, "second trajectory for the decorrelator");
    analyze->add_option("--column", af.column, "series column")->capture_default_str();
    analyze->add_flag("--fit", af.fit, "fit an exponential envelope");
    an_c.flags.add(analyze, "--nu0", "nu0", "reference frequency for f");
    an_c.flags.add(analyze, "--delta", "delta", "half-width of the fraction window");
    an_c.flags.add(analyze, "--t-i", "t_i", "decorrelator window start, periods");
    an_c.flags.add(analyze, "--t-f", "t_f", "decorrelator window end, periods");
    an_c.flags.add(analyze, "--fit-window", "fit_window", "envelope window, periods");
    an_c.flags.add(analyze, "--time-units", "time_units", "units of the t column: absolute | periods");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*mf_run) return cmd_mf_run(resolve(Command::mf_run, mf_c), mf);
        if (*q_run) return cmd_q_run(resolve(Command::q_run, q_c), qf);
        if (*sweep) return cmd_sweep(resolve(Command::sweep, sw_c));
        return cmd_analyze(resolve(Command::analyze, an_c), af);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const dtqc::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const dtqc::DomainError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const dtqc::ResourceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const dtqc::TruncationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}
