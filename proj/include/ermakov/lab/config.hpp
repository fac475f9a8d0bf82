#pragma once

// Scenario files: one JSON document per run. Unknown keys are rejected so a
// typo such as "tua" fails loudly instead of silently using a default.

#include "ermakov/drive.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/ode.hpp"
#include "ermakov/params.hpp"
#include "ermakov/pde.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace ermakov::lab {

using json = nlohmann::json;

enum class Mode { Ode, Pde, Compare, Verify };
enum class OdeSystem { Measurement, Classical };

inline std::string to_string(Mode m) {
    switch (m) {
    case Mode::Ode: return "ode";
    case Mode::Pde: return "pde";
    case Mode::Compare: return "compare";
    case Mode::Verify: return "verify";
    }
    return "?";
}

/// Initial data as written in the file. Exactly one of the width forms is
/// used; the original form is kept so re-running a resolved config is exact.
struct InitSpec {
    enum class Form { Alpha, Delta, Classical } form = Form::Delta;
    double alpha0 = 1.0, alphadot0 = 0.0;
    double delta0 = 1.0, width_rate0 = 0.0;
    double xbar0 = 0.0, xbardot0 = 0.0;
    double q0 = 0.0, qdot0 = 0.0;

    double alpha(const PhysParams& p) const { return form == Form::Delta ? alpha_from_delta(delta0, p) : alpha0; }
    double alphadot(const PhysParams& p) const { return form == Form::Delta ? width_rate0 / p.width_scale() : alphadot0; }
    double delta(const PhysParams& p) const { return form == Form::Delta ? delta0 : delta_from_alpha(alpha0, p); }
    double width_rate(const PhysParams& p) const { return form == Form::Delta ? width_rate0 : alphadot0 * p.width_scale(); }

    ErmakovState measurement_state(const PhysParams& p) const { return {0.0, alpha(p), alphadot(p), xbar0, xbardot0}; }
    ClassicalState classical_state() const { return {0.0, q0, qdot0, alpha0, alphadot0}; }
};

struct GridSpec {
    double x_min = 0.0, x_max = 0.0;
    std::size_t n = 1024;
};

struct OutputSpec {
    std::string directory = "out";
    std::size_t stride = 1;
    std::size_t snapshot_stride = 0;  // 0: no field snapshots
};

struct ScenarioConfig {
    Mode mode = Mode::Ode;
    OdeSystem system = OdeSystem::Measurement;
    PhysParams params;
    std::optional<OmegaSpec> omega_spec;  // classical system only
    DriveSpec drive = ZeroDrive{};
    InitSpec init;
    double dt = 1e-3;
    double t_end = 1.0;
    std::optional<GridSpec> grid;
    OutputSpec output;

    OmegaSpec omega() const { return omega_spec ? *omega_spec : OmegaSpec::constant(params.omega); }

    /// Explicit grid or the default x̄0 ± 16 δ0 with 1024 points.
    pde::Grid resolved_grid() const {
        if (grid) return pde::make_grid(grid->x_min, grid->x_max, grid->n);
        const double d0 = init.delta(params);
        return pde::make_grid(init.xbar0 - 16.0 * d0, init.xbar0 + 16.0 * d0, 1024);
    }

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }
};

namespace detail {

inline void expect_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigurationError(where + ": expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigurationError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
}

inline double number(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ConfigurationError("missing required field '" + where + "." + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigurationError("field '" + where + "." + key + "' must be a number");
    return v.get<double>();
}

inline double number_or(const json& j, const std::string& where, const char* key, double fallback) {
    return j.contains(key) ? number(j, where, key) : fallback;
}

inline std::string string_field(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ConfigurationError("missing required field '" + where + "." + key + "'");
    if (!j.at(key).is_string()) throw ConfigurationError("field '" + where + "." + key + "' must be a string");
    return j.at(key).get<std::string>();
}

inline std::size_t count_field(const json& j, const std::string& where, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigurationError("field '" + where + "." + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

inline double tau_field(const json& j) {
    if (!j.contains("tau")) throw ConfigurationError("missing required field 'params.tau'");
    const auto& v = j.at("tau");
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "infinity") return PhysParams::infinite_tau();
        throw ConfigurationError("field 'params.tau' must be a number or \"inf\"");
    }
    return number(j, "params", "tau");
}

inline PhysParams parse_params(const json& j) {
    expect_keys(j, "params", {"m", "hbar", "omega", "lambda", "tau", "coeff_variant"});
    PhysParams p;
    p.m = number_or(j, "params", "m", 1.0);
    p.hbar = number_or(j, "params", "hbar", 1.0);
    p.omega = number(j, "params", "omega");
    p.lambda = number(j, "params", "lambda");
    p.tau = tau_field(j);
    if (j.contains("coeff_variant")) p.coeff_variant = coeff_variant_from_string(string_field(j, "params", "coeff_variant"));
    validate(p);
    return p;
}

inline OmegaSpec parse_omega(const json& j) {
    const auto kind = string_field(j, "omega_spec", "kind");
    if (kind == "constant") {
        expect_keys(j, "omega_spec", {"kind", "omega0"});
        return OmegaSpec::constant(number(j, "omega_spec", "omega0"));
    }
    if (kind == "sinusoidal") {
        expect_keys(j, "omega_spec", {"kind", "omega0", "epsilon", "modulation"});
        return OmegaSpec::sinusoidal(number(j, "omega_spec", "omega0"), number(j, "omega_spec", "epsilon"),
                                     number(j, "omega_spec", "modulation"));
    }
    throw ConfigurationError("omega_spec.kind must be 'constant' or 'sinusoidal'");
}

inline DriveSpec parse_drive(const json& j) {
    const auto kind = string_field(j, "drive", "kind");
    if (kind == "zero") {
        expect_keys(j, "drive", {"kind"});
        return ZeroDrive{};
    }
    if (kind == "constant") {
        expect_keys(j, "drive", {"kind", "X0"});
        return ConstantDrive{number(j, "drive", "X0")};
    }
    if (kind == "sinusoid") {
        expect_keys(j, "drive", {"kind", "X0", "Omega", "phi"});
        return SinusoidDrive{number(j, "drive", "X0"), number(j, "drive", "Omega"), number_or(j, "drive", "phi", 0.0)};
    }
    if (kind == "conserving") {
        expect_keys(j, "drive", {"kind"});
        return ConservingDrive{};
    }
    if (kind == "tabulated") {
        expect_keys(j, "drive", {"kind", "points"});
        if (!j.contains("points") || !j.at("points").is_array())
            throw ConfigurationError("missing required field 'drive.points' (array of [t, X] pairs)");
        std::vector<std::pair<double, double>> pts;
        for (const auto& e : j.at("points")) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw ConfigurationError("drive.points entries must be [t, X] number pairs");
            pts.emplace_back(e[0].get<double>(), e[1].get<double>());
        }
        return TabulatedDrive(std::move(pts));
    }
    throw ConfigurationError("drive.kind must be one of zero, constant, sinusoid, conserving, tabulated");
}

inline InitSpec parse_init(const json& j, OdeSystem system) {
    InitSpec init;
    if (system == OdeSystem::Classical) {
        expect_keys(j, "init", {"q0", "qdot0", "alpha0", "alphadot0"});
        init.form = InitSpec::Form::Classical;
        init.q0 = number(j, "init", "q0");
        init.qdot0 = number(j, "init", "qdot0");
        init.alpha0 = number(j, "init", "alpha0");
        init.alphadot0 = number(j, "init", "alphadot0");
        return init;
    }
    const bool alpha_form = j.contains("alpha0") || j.contains("alphadot0");
    if (alpha_form) {
        expect_keys(j, "init", {"alpha0", "alphadot0", "xbar0", "xbardot0"});
        init.form = InitSpec::Form::Alpha;
        init.alpha0 = number(j, "init", "alpha0");
        init.alphadot0 = number_or(j, "init", "alphadot0", 0.0);
    } else {
        expect_keys(j, "init", {"delta0", "width_rate0", "xbar0", "xbardot0"});
        init.form = InitSpec::Form::Delta;
        init.delta0 = number(j, "init", "delta0");
        init.width_rate0 = number_or(j, "init", "width_rate0", 0.0);
    }
    init.xbar0 = number(j, "init", "xbar0");
    init.xbardot0 = number_or(j, "init", "xbardot0", 0.0);
    return init;
}

} // namespace detail

inline ScenarioConfig parse_config(const json& j) {
    using namespace detail;
    expect_keys(j, "", {"mode", "system", "params", "omega_spec", "drive", "init", "numerics", "output"});
    ScenarioConfig c;
    const auto mode = string_field(j, "config", "mode");
    if (mode == "ode") c.mode = Mode::Ode;
    else if (mode == "pde") c.mode = Mode::Pde;
    else if (mode == "compare") c.mode = Mode::Compare;
    else if (mode == "verify") c.mode = Mode::Verify;
    else throw ConfigurationError("mode must be one of ode, pde, compare, verify");

    if (j.contains("system")) {
        const auto s = string_field(j, "config", "system");
        if (s == "measurement") c.system = OdeSystem::Measurement;
        else if (s == "classical") c.system = OdeSystem::Classical;
        else throw ConfigurationError("system must be 'measurement' or 'classical'");
        if (c.system == OdeSystem::Classical && c.mode != Mode::Ode)
            throw ConfigurationError("system 'classical' is only available in mode 'ode'");
    }

    if (!j.contains("params")) throw ConfigurationError("missing required field 'params'");
    c.params = parse_params(j.at("params"));
    if (j.contains("omega_spec")) c.omega_spec = parse_omega(j.at("omega_spec"));
    if (j.contains("drive")) c.drive = parse_drive(j.at("drive"));
    if (is_state_dependent(c.drive) && c.params.lambda == 0.0)
        throw ConfigurationError("drive 'conserving' requires params.lambda != 0");

    if (j.contains("init")) c.init = parse_init(j.at("init"), c.system);
    else if (c.mode != Mode::Verify) throw ConfigurationError("missing required field 'init'");

    if (!j.contains("numerics")) throw ConfigurationError("missing required field 'numerics'");
    const auto& num = j.at("numerics");
    expect_keys(num, "numerics", {"dt", "t_end", "grid"});
    c.dt = number(num, "numerics", "dt");
    c.t_end = number(num, "numerics", "t_end");
    if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw ConfigurationError("numerics.dt must be > 0");
    if (!(c.t_end > 0.0) || !std::isfinite(c.t_end)) throw ConfigurationError("numerics.t_end must be > 0");
    if (num.contains("grid")) {
        const auto& g = num.at("grid");
        expect_keys(g, "numerics.grid", {"x_min", "x_max", "n"});
        c.grid = GridSpec{number(g, "numerics.grid", "x_min"), number(g, "numerics.grid", "x_max"),
                          count_field(g, "numerics.grid", "n", 1024)};
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        expect_keys(o, "output", {"directory", "stride", "snapshot_stride"});
        if (o.contains("directory")) c.output.directory = string_field(o, "output", "directory");
        c.output.stride = count_field(o, "output", "stride", 1);
        c.output.snapshot_stride = count_field(o, "output", "snapshot_stride", 0);
        if (c.output.stride < 1) throw ConfigurationError("output.stride must be >= 1");
    }
    if (c.mode == Mode::Pde || c.mode == Mode::Compare) (void)c.resolved_grid();
    return c;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigurationError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

inline json drive_to_json(const DriveSpec& d) {
    struct Visitor {
        json operator()(const ZeroDrive&) const { return {{"kind", "zero"}}; }
        json operator()(const ConstantDrive& c) const { return {{"kind", "constant"}, {"X0", c.value}}; }
        json operator()(const SinusoidDrive& s) const {
            return {{"kind", "sinusoid"}, {"X0", s.amplitude}, {"Omega", s.frequency}, {"phi", s.phase}};
        }
        json operator()(const ConservingDrive&) const { return {{"kind", "conserving"}}; }
        json operator()(const TabulatedDrive& t) const {
            json pts = json::array();
            for (const auto& [time, x] : t.samples()) pts.push_back({time, x});
            return {{"kind", "tabulated"}, {"points", pts}};
        }
    };
    return std::visit(Visitor{}, d);
}

/// Fully resolved config; parse_config(to_json(c)) reproduces c.
inline json to_json(const ScenarioConfig& c) {
    json j;
    j["mode"] = to_string(c.mode);
    j["system"] = c.system == OdeSystem::Classical ? "classical" : "measurement";
    json p{{"m", c.params.m},
           {"hbar", c.params.hbar},
           {"omega", c.params.omega},
           {"lambda", c.params.lambda},
           {"coeff_variant", std::string(to_string(c.params.coeff_variant))}};
    if (c.params.measurement_off()) p["tau"] = "inf";
    else p["tau"] = c.params.tau;
    j["params"] = p;
    if (c.omega_spec) {
        const auto& w = *c.omega_spec;
        if (w.is_constant()) j["omega_spec"] = {{"kind", "constant"}, {"omega0", w.omega0()}};
        else
            j["omega_spec"] = {{"kind", "sinusoidal"}, {"omega0", w.omega0()}, {"epsilon", w.epsilon()},
                               {"modulation", w.modulation()}};
    }
    j["drive"] = drive_to_json(c.drive);
    const auto& i = c.init;
    switch (i.form) {
    case InitSpec::Form::Alpha:
        j["init"] = {{"alpha0", i.alpha0}, {"alphadot0", i.alphadot0}, {"xbar0", i.xbar0}, {"xbardot0", i.xbardot0}};
        break;
    case InitSpec::Form::Delta:
        j["init"] = {{"delta0", i.delta0}, {"width_rate0", i.width_rate0}, {"xbar0", i.xbar0}, {"xbardot0", i.xbardot0}};
        break;
    case InitSpec::Form::Classical:
        j["init"] = {{"q0", i.q0}, {"qdot0", i.qdot0}, {"alpha0", i.alpha0}, {"alphadot0", i.alphadot0}};
        break;
    }
    j["numerics"] = {{"dt", c.dt}, {"t_end", c.t_end}};
    if (c.grid) j["numerics"]["grid"] = {{"x_min", c.grid->x_min}, {"x_max", c.grid->x_max}, {"n", c.grid->n}};
    j["output"] = {{"directory", c.output.directory}, {"stride", c.output.stride},
                   {"snapshot_stride", c.output.snapshot_stride}};
    return j;
}

} // namespace ermakov::lab
