#pragma once

// Config-driven experiment runner behind the `ermakov_lab` CLI.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure
// (width collapse, NaN, divergence), 3 verification failure.

#include "ermakov/identities.hpp"
#include "ermakov/lab/analysis.hpp"
#include "ermakov/lab/config.hpp"
#include "ermakov/lab/csv.hpp"
#include "ermakov/ode.hpp"
#include "ermakov/pde.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ermakov::lab {

enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 1,
    kNumericalFailure = 2,
    kVerificationFailure = 3,
};

inline constexpr const char* kOutputEnvVar = "ERMAKOV_LAB_OUT";
inline constexpr const char* kReportSchema = "ermakov-lab-report v1";

struct Check {
    std::string name;
    double value;
    double tolerance;
    bool pass;
};

inline json to_json(const Check& c) {
    return {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}};
}

inline json to_json(const identities::IdentityReport& r) {
    return {{"name", r.name},         {"max_abs_residual", r.max_abs_residual},
            {"tolerance", r.tolerance}, {"pass", r.pass},
            {"samples", r.samples},   {"value", r.value}};
}

/// Collected results of one run; serialised as report.json.
struct RunReport {
    json config;
    json summary = json::object();
    std::vector<identities::IdentityReport> identity_reports;
    std::vector<identities::IdentityReport> witness_reports;  // expected to fail
    std::vector<Check> checks;
    double wall_time_s = 0.0;

    bool pass() const {
        bool ok = true;
        for (const auto& r : identity_reports) ok = ok && r.pass;
        for (const auto& c : checks) ok = ok && c.pass;
        return ok;
    }

    json to_json() const {
        json ids = json::array(), wit = json::array(), chk = json::array();
        for (const auto& r : identity_reports) ids.push_back(lab::to_json(r));
        for (const auto& r : witness_reports) wit.push_back(lab::to_json(r));
        for (const auto& c : checks) chk.push_back(lab::to_json(c));
        return {{"schema", kReportSchema}, {"config", config},         {"summary", summary},
                {"identity_reports", ids}, {"witness_reports", wit}, {"checks", chk},
                {"pass", pass()},          {"wall_time_s", wall_time_s}};
    }
};

namespace detail {

inline std::string units_label(const PhysParams& p) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "nondimensional with hbar=%.17g m=%.17g", p.hbar, p.m);
    return buf;
}

inline Check make_check(std::string name, double value, double tolerance) {
    return {std::move(name), value, tolerance, value <= tolerance};
}

inline void write_measurement_csv(const std::filesystem::path& path, const MeasurementTrajectory& traj,
                                  std::size_t stride) {
    CsvWriter csv(path, "trajectory",
                  {"t", "alpha", "alphadot", "xbar", "xbardot", "delta", "I", "dIdt_analytic", "dIdt_numeric", "X"},
                  units_label(traj.params));
    const auto numeric = numeric_invariant_rate(traj);
    for (std::size_t i = 0; i < traj.records.size(); i += stride) {
        const auto& r = traj.records[i];
        csv.row({r.state.t, r.state.alpha, r.state.alphadot, r.state.xbar, r.state.xbardot, r.delta, r.invariant,
                 r.rate, numeric[i], r.drive});
    }
}

inline void write_classical_csv(const std::filesystem::path& path, const ClassicalTrajectory& traj, std::size_t stride) {
    CsvWriter csv(path, "classical-trajectory", {"t", "q", "qdot", "alpha", "alphadot", "I"}, "nondimensional");
    for (std::size_t i = 0; i < traj.records.size(); i += stride) {
        const auto& r = traj.records[i];
        csv.row({r.state.t, r.state.q, r.state.qdot, r.state.alpha, r.state.alphadot, r.invariant});
    }
}

inline void write_fields_csv(const std::filesystem::path& path, const pde::MadelungFields& f, const PhysParams& p) {
    CsvWriter csv(path, "fields", {"x", "rho", "S", "v_qu", "V_qu", "valid"}, units_label(p));
    for (std::size_t i = 0; i < f.grid.n; ++i)
        csv.row({f.grid.x(i), f.rho[i], f.S[i], f.v_qu[i], f.V_qu[i], static_cast<double>(f.valid_mask[i])});
}

// Evolves in chunks so that field snapshots can be written along the way.
inline pde::EvolveResult run_pde(const ScenarioConfig& c, const std::filesystem::path* snapshot_dir) {
    const auto grid = c.resolved_grid();
    const auto& i = c.init;
    auto packet = pde::gaussian_packet(grid, i.xbar0, i.delta(c.params), i.xbardot0, i.width_rate(c.params), c.params);
    const std::size_t steps = c.steps();
    const std::size_t chunk = (snapshot_dir && c.output.snapshot_stride > 0) ? c.output.snapshot_stride : steps;

    pde::EvolveResult all;
    all.history.push_back(pde::observables(packet, c.params));
    if (snapshot_dir && c.output.snapshot_stride > 0)
        write_fields_csv(*snapshot_dir / "fields_000000.csv", pde::madelung_decompose(packet, c.params), c.params);
    std::size_t done = 0;
    while (done < steps) {
        const std::size_t n = std::min(chunk, steps - done);
        auto part = pde::evolve(std::move(packet), c.params, c.drive, c.dt, n);
        all.cfl_exceeded = all.cfl_exceeded || part.cfl_exceeded;
        all.history.insert(all.history.end(), part.history.begin() + 1, part.history.end());
        packet = std::move(part.packet);
        done += n;
        if (snapshot_dir && c.output.snapshot_stride > 0) {
            char name[32];
            std::snprintf(name, sizeof name, "fields_%06zu.csv", done);
            write_fields_csv(*snapshot_dir / name, pde::madelung_decompose(packet, c.params), c.params);
        }
    }
    all.packet = std::move(packet);
    return all;
}

inline void write_observables_csv(const std::filesystem::path& path, const std::vector<pde::Observables>& history,
                                  const PhysParams& p, std::size_t stride) {
    CsvWriter csv(path, "observables", {"t", "norm", "xbar", "delta", "excess_kurtosis", "k_t"}, units_label(p));
    for (std::size_t i = 0; i < history.size(); i += stride) {
        const auto& o = history[i];
        csv.row({o.t, o.norm, o.xbar, o.delta, o.excess_kurtosis, o.k_t});
    }
}

inline MeasurementTrajectory run_ode(const ScenarioConfig& c) {
    return integrate_measurement(c.init.measurement_state(c.params), c.params, c.drive,
                                 static_cast<double>(c.steps()) * c.dt, c.dt);
}

inline void summarise_ode(RunReport& rep, const MeasurementTrajectory& traj) {
    rep.summary["max_invariant_drift"] = relative_range(invariant_series(traj));
    rep.summary["max_rate_mismatch"] = rate_mismatch(traj);
}

inline void summarise_pde(RunReport& rep, const pde::EvolveResult& res) {
    rep.summary["norm_drift"] = max_norm_drift(res.history);
    rep.summary["kurtosis_max"] = max_abs_kurtosis(res.history);
    rep.summary["cfl_exceeded"] = res.cfl_exceeded;
}

inline void do_ode(const ScenarioConfig& c, const std::filesystem::path& dir, RunReport& rep) {
    if (c.system == OdeSystem::Classical) {
        const auto traj = integrate_classical(c.init.classical_state(), c.omega(), static_cast<double>(c.steps()) * c.dt, c.dt);
        std::vector<double> inv;
        for (const auto& r : traj.records) inv.push_back(r.invariant);
        rep.summary["max_invariant_drift"] = relative_range(inv);
        write_classical_csv(dir / "trajectory.csv", traj, c.output.stride);
        return;
    }
    const auto traj = run_ode(c);
    summarise_ode(rep, traj);
    write_measurement_csv(dir / "trajectory.csv", traj, c.output.stride);
}

inline void do_pde(const ScenarioConfig& c, const std::filesystem::path& dir, RunReport& rep) {
    const auto res = run_pde(c, &dir);
    summarise_pde(rep, res);
    write_observables_csv(dir / "observables.csv", res.history, c.params, c.output.stride);
}

inline void do_compare(const ScenarioConfig& c, const std::filesystem::path& dir, RunReport& rep) {
    const auto res = run_pde(c, nullptr);
    const auto traj = run_ode(c);
    summarise_pde(rep, res);
    summarise_ode(rep, traj);
    const auto dev = closure_deviation(res.history, traj);
    rep.summary["max_xbar_deviation"] = dev.xbar;
    rep.summary["max_delta_deviation"] = dev.delta;
    CsvWriter csv(dir / "compare.csv", "compare",
                  {"t", "xbar_pde", "xbar_ode", "xbar_diff", "delta_pde", "delta_ode", "delta_diff", "norm",
                   "excess_kurtosis"},
                  units_label(c.params));
    const std::size_t n = std::min(res.history.size(), traj.records.size());
    for (std::size_t i = 0; i < n; i += c.output.stride) {
        const auto& o = res.history[i];
        const auto& r = traj.records[i];
        csv.row({o.t, o.xbar, r.state.xbar, o.xbar - r.state.xbar, o.delta, r.delta, o.delta - r.delta, o.norm,
                 o.excess_kurtosis});
    }
}

inline void do_verify(const ScenarioConfig& c, const json& raw_init, RunReport& rep) {
    identities::SuiteInputs in;
    in.params = c.params;
    if (raw_init.is_null()) {
        in.slice = AnsatzSlice{0.5, 0.3, 1.0, 0.3, c.params.tau};
    } else {
        in.slice = AnsatzSlice{c.init.xbar0, c.init.xbardot0, c.init.delta(c.params), c.init.width_rate(c.params),
                               c.params.tau};
    }
    in.delta0 = in.slice.delta;
    for (auto& r : identities::run_suite(in)) {
        if (r.name == "coefficient.paper_literal") {
            const double expected = c.params.measurement_coefficient(CoeffVariant::DimensionallyConsistent) -
                                    c.params.measurement_coefficient(CoeffVariant::PaperLiteral);
            rep.checks.push_back(make_check("coefficient.paper_literal_discrepancy", std::abs(r.value - expected), 1e-10));
            rep.witness_reports.push_back(std::move(r));
        } else {
            rep.identity_reports.push_back(std::move(r));
        }
    }

    if (raw_init.is_null()) return;
    const auto traj = run_ode(c);
    summarise_ode(rep, traj);
    rep.checks.push_back(make_check("ode.rate_consistency", rep.summary["max_rate_mismatch"].get<double>(), 1e-4));
    if (is_state_dependent(c.drive))
        rep.checks.push_back(make_check("ode.conserving_drive", rep.summary["max_invariant_drift"].get<double>(), 1e-6));

    if (c.grid) {
        const auto res = run_pde(c, nullptr);
        summarise_pde(rep, res);
        const auto dev = closure_deviation(res.history, traj);
        rep.summary["max_xbar_deviation"] = dev.xbar;
        rep.summary["max_delta_deviation"] = dev.delta;
        rep.checks.push_back(make_check("pde.norm_neutrality", rep.summary["norm_drift"].get<double>(), 1e-6));
        rep.checks.push_back(make_check("pde.gaussian_closure", rep.summary["kurtosis_max"].get<double>(), 1e-3));
        rep.checks.push_back(make_check("pde.ode_closure", std::max(dev.xbar, dev.delta), 1e-3));
    }
}

inline std::filesystem::path output_directory(const ScenarioConfig& c) {
    if (const char* env = std::getenv(kOutputEnvVar); env && *env) return env;
    return c.output.directory;
}

} // namespace detail

/// Runs a parsed scenario into `dir`, writing CSVs and report.json. Throws
/// on configuration or numerical failure; returns the verification verdict.
inline int run_scenario(const ScenarioConfig& c, const json& raw_init, const std::filesystem::path& dir) {
    const auto start = std::chrono::steady_clock::now();
    std::filesystem::create_directories(dir);
    RunReport rep;
    ScenarioConfig echoed = c;
    echoed.output.directory = dir.string();
    rep.config = to_json(echoed);
    if (raw_init.is_null()) rep.config.erase("init");

    switch (c.mode) {
    case Mode::Ode: detail::do_ode(c, dir, rep); break;
    case Mode::Pde: detail::do_pde(c, dir, rep); break;
    case Mode::Compare: detail::do_compare(c, dir, rep); break;
    case Mode::Verify: detail::do_verify(c, raw_init, rep); break;
    }
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream(dir / "report.json") << rep.to_json().dump(2) << '\n';
    return (c.mode == Mode::Verify && !rep.pass()) ? kVerificationFailure : kSuccess;
}

/// Parses and runs a config document, mapping failures to exit codes.
/// `force_mode` implements the `verify` subcommand.
inline int run_json(const json& doc, std::ostream& log, std::optional<Mode> force_mode = {},
                    std::optional<std::filesystem::path> dir_override = {}) {
    try {
        json j = doc;
        if (force_mode) j["mode"] = to_string(*force_mode);
        const auto cfg = parse_config(j);
        const json raw_init = j.contains("init") ? j.at("init") : json();
        const auto dir = dir_override ? *dir_override : detail::output_directory(cfg);
        const bool uses_pde = cfg.mode == Mode::Pde || cfg.mode == Mode::Compare || (cfg.mode == Mode::Verify && cfg.grid);
        if (uses_pde && cfg.dt > pde::cfl_limit(cfg.resolved_grid(), cfg.params))
            log << "ermakov_lab: warning: dt = " << cfg.dt << " exceeds m dx^2/(pi hbar) = "
                << pde::cfl_limit(cfg.resolved_grid(), cfg.params) << " (split-step scheme stays stable)\n";
        const int code = run_scenario(cfg, raw_init, dir);
        log << "ermakov_lab: " << to_string(cfg.mode) << " run written to " << dir.string()
            << (code == kVerificationFailure ? " (verification FAILED)" : "") << '\n';
        return code;
    } catch (const ConfigurationError& e) {
        log << "ermakov_lab: configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const json::exception& e) {
        log << "ermakov_lab: configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::filesystem::filesystem_error& e) {
        log << "ermakov_lab: configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        log << "ermakov_lab: numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
}

inline std::optional<json> read_json_file(const std::string& path, std::ostream& log) {
    std::ifstream in(path);
    if (!in) {
        log << "ermakov_lab: configuration error: cannot open '" << path << "'\n";
        return std::nullopt;
    }
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::parse_error& e) {
        log << "ermakov_lab: configuration error: '" << path << "' is not valid JSON: " << e.what() << '\n';
        return std::nullopt;
    }
}

inline int run(const std::string& config_path, std::ostream& log, std::optional<Mode> force_mode = {}) {
    const auto doc = read_json_file(config_path, log);
    if (!doc) return kConfigError;
    return run_json(*doc, log, force_mode);
}

/// Locates a numeric field by dotted path ("params.tau") or by a leaf name
/// that occurs exactly once ("tau"). Returns the JSON pointer.
inline json::json_pointer resolve_parameter(const json& doc, const std::string& name) {
    if (name.find('.') != std::string::npos) {
        std::string ptr;
        std::stringstream ss(name);
        for (std::string part; std::getline(ss, part, '.');) ptr += "/" + part;
        json::json_pointer p(ptr);
        if (!doc.contains(p) || !doc.at(p).is_number())
            throw ConfigurationError("sweep parameter '" + name + "' does not name a numeric field");
        return p;
    }
    std::vector<json::json_pointer> hits;
    const json flat = doc.flatten();
    for (const auto& [key, value] : flat.items()) {
        const auto leaf = key.substr(key.rfind('/') + 1);
        if (leaf == name && value.is_number()) hits.emplace_back(key);
    }
    if (hits.size() != 1)
        throw ConfigurationError("sweep parameter '" + name + "' must name exactly one numeric field (found " +
                                 std::to_string(hits.size()) + ")");
    return hits.front();
}

inline std::vector<std::string> split_values(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    for (std::string tok; std::getline(ss, tok, ',');) {
        const auto b = tok.find_first_not_of(" \t");
        const auto e = tok.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(tok.substr(b, e - b + 1));
    }
    return out;
}

/// One independent run per value, each in `<base>/<leaf>_<value>`. Runs are
/// executed concurrently; the returned code is the worst of all runs.
inline int sweep(const std::string& config_path, const std::string& parameter, const std::string& values_csv,
                 std::ostream& log, std::optional<Mode> force_mode = {}) {
    const auto doc = read_json_file(config_path, log);
    if (!doc) return kConfigError;
    json::json_pointer ptr;
    std::vector<std::string> values;
    std::filesystem::path base;
    try {
        ptr = resolve_parameter(*doc, parameter);
        values = split_values(values_csv);
        if (values.empty()) throw ConfigurationError("sweep needs at least one value");
        json probe = *doc;
        if (force_mode) probe["mode"] = to_string(*force_mode);
        const auto cfg = parse_config(probe);
        base = detail::output_directory(cfg);
    } catch (const Error& e) {
        log << "ermakov_lab: configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const json::exception& e) {
        log << "ermakov_lab: configuration error: " << e.what() << '\n';
        return kConfigError;
    }

    const auto leaf = ptr.back();
    std::vector<json> docs;
    for (const auto& v : values) {
        json d = *doc;
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != v.size()) {
            log << "ermakov_lab: configuration error: sweep value '" << v << "' is not a number\n";
            return kConfigError;
        }
        d[ptr] = x;
        docs.push_back(std::move(d));
    }

    std::vector<std::future<std::pair<int, std::string>>> runs;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto dir = base / (leaf + "_" + values[i]);
        runs.push_back(std::async(std::launch::async, [&, i, dir] {
            std::ostringstream out;
            const int code = run_json(docs[i], out, force_mode, dir);
            return std::pair{code, out.str()};
        }));
    }
    int worst = kSuccess;
    for (auto& f : runs) {
        auto [code, text] = f.get();
        log << text;
        worst = std::max(worst, code);
    }
    return worst;
}

} // namespace ermakov::lab
