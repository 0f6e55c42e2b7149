// config.hpp: run configuration: JSON parsing, validation, canonical echo and
// conversion to DeviceParams.
//
// Frequencies are given in Hz (keys ending in _hz) and become rad/s here;
// everything else is SI with the unit in the key name.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ionlc/device.hpp"

namespace ionlc {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DeviceKey {
    double DeviceParams::*field;
    double scale;  // config value * scale = SI value
};

inline const std::map<std::string, DeviceKey>& device_keys() {
    static const std::map<std::string, DeviceKey> keys = {
        {"L_h", {&DeviceParams::L, 1.0}},
        {"C0_f", {&DeviceParams::C0, 1.0}},
        {"eta", {&DeviceParams::eta, 1.0}},
        {"omega_lc_hz", {&DeviceParams::omega_lc, kTwoPi}},
        {"omega_i_hz", {&DeviceParams::omega_i, kTwoPi}},
        {"nu_hz", {&DeviceParams::nu, kTwoPi}},
        {"h_m", {&DeviceParams::h, 1.0}},
        {"zeta", {&DeviceParams::zeta, 1.0}},
        {"ion_mass_kg", {&DeviceParams::ion_mass, 1.0}},
        {"z0_m", {&DeviceParams::z0, 1.0}},
        {"q0_c", {&DeviceParams::q0, 1.0}},
        {"g0_hz", {&DeviceParams::g0, kTwoPi}},
        {"Z_ohm", {&DeviceParams::Z, 1.0}},
        {"kappa_lc_per_s", {&DeviceParams::kappa_lc, 1.0}},
        {"gamma_heat_per_s", {&DeviceParams::gamma_heat, 1.0}},
        {"Omega0_hz", {&DeviceParams::Omega0, kTwoPi}},
    };
    return keys;
}

struct RunConfig {
    std::string mode = "params";  // params | simulate | protocol | sweep
    std::string preset = "scaled";  // si | scaled
    double scaled_ratio = 1e-2;     // omega_i / omega_lc for the scaled preset
    std::map<std::string, double> device;  // overrides, config units

    std::size_t lc_dim = 4;
    std::size_t motion_dim = 4;
    double tolerance = 1e-10;

    bool solve_zeta = false;  // params mode

    std::string hamiltonian = "rwa";  // simulate: rwa | interaction | lab
    std::optional<double> t_final_s;  // default: one swap
    std::size_t samples = 201;
    double detuning_hz = 0.0;

    std::string protocol = "swap";  // swap | jc_cnot | ms_sequence | two_ion_gate | cat_metrology | full_budget
    double delta_hz = 5.0;
    int n = 1;
    double alpha = 0.62665706865775012;  // sqrt(pi/8)
    double alpha_cat = 2.0;
    std::string heating_model = "infinite_temperature";  // or absorption

    std::string sweep_axis = "delta_hz";  // delta_hz | gamma_heat_per_s
    std::vector<double> sweep_values;
    double sweep_gamma_per_s = 0.05;
    double sweep_delta_hz = 5.0;  // fixed delta for the gamma axis, and the alpha reference
    std::string sweep_hold = "alpha";  // alpha | duration
    int sweep_reference_n = 1;

    std::size_t workers = 1;
    std::uint64_t seed = 0;  // reserved; all runs are deterministic
    std::string out_dir;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& section) {
    if (!obj.is_object()) throw ConfigError("section '" + section + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in section '" + section + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + section + "." + key + "': " + e.what());
    }
}

inline void read_number(const json& obj, const char* key, double& out, const std::string& section) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_number()) throw ConfigError("'" + section + "." + key + "' must be a number");
    out = obj.at(key).get<double>();
    if (!std::isfinite(out)) throw ConfigError("'" + section + "." + key + "' must be finite");
}

inline void read_count(const json& obj, const char* key, std::size_t& out, const std::string& section) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_number_integer() || obj.at(key).get<long long>() < 0)
        throw ConfigError("'" + section + "." + key + "' must be a nonnegative integer");
    out = obj.at(key).get<std::size_t>();
}

}  // namespace detail

inline void validate(const RunConfig& c) {
    static const std::set<std::string> modes = {"params", "simulate", "protocol", "sweep"};
    static const std::set<std::string> hams = {"rwa", "interaction", "lab"};
    static const std::set<std::string> protos = {"swap", "jc_cnot", "ms_sequence", "two_ion_gate", "cat_metrology",
                                                 "full_budget"};
    if (!modes.count(c.mode)) throw ConfigError("mode must be one of params, simulate, protocol, sweep; got '" + c.mode + "'");
    if (c.preset != "si" && c.preset != "scaled") throw ConfigError("preset must be 'si' or 'scaled'");
    if (!(c.scaled_ratio > 0 && c.scaled_ratio < 1)) throw ConfigError("scaled_ratio must lie in (0, 1)");
    for (const auto& [k, v] : c.device) {
        if (!device_keys().count(k)) throw ConfigError("unknown key '" + k + "' in section 'device'");
        if (!std::isfinite(v)) throw ConfigError("device." + k + " must be finite");
    }
    if (c.lc_dim < 2 || c.motion_dim < 2) throw ConfigError("truncation dims must be >= 2");
    if (!(c.tolerance >= 1e-12 && c.tolerance <= 1e-4)) throw ConfigError("integrator.tolerance must lie in [1e-12, 1e-4]");
    if (!hams.count(c.hamiltonian)) throw ConfigError("simulate.hamiltonian must be rwa, interaction or lab");
    if (c.t_final_s && !(*c.t_final_s > 0)) throw ConfigError("simulate.t_final_s must be positive");
    if (c.samples < 2) throw ConfigError("simulate.samples must be >= 2");
    if (!protos.count(c.protocol)) throw ConfigError("protocol.name '" + c.protocol + "' is not a known protocol");
    if (c.n < 1) throw ConfigError("protocol.n must be >= 1");
    if (c.heating_model != "infinite_temperature" && c.heating_model != "absorption")
        throw ConfigError("protocol.heating_model must be infinite_temperature or absorption");
    if (c.sweep_axis != "delta_hz" && c.sweep_axis != "gamma_heat_per_s")
        throw ConfigError("sweep.axis must be delta_hz or gamma_heat_per_s");
    if (c.sweep_hold != "alpha" && c.sweep_hold != "duration") throw ConfigError("sweep.hold must be alpha or duration");
    if (c.sweep_reference_n < 1) throw ConfigError("sweep.reference_n must be >= 1");
    if (c.mode == "sweep" && c.sweep_values.empty()) throw ConfigError("sweep.values must not be empty");
    for (double v : c.sweep_values)
        if (!std::isfinite(v) || v <= 0) throw ConfigError("sweep.values must be finite and positive");
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
}

inline RunConfig parse_config(const json& j) {
    using detail::read;
    using detail::read_count;
    using detail::read_number;
    detail::reject_unknown(j, {"mode", "preset", "scaled_ratio", "device", "truncation", "integrator", "params",
                               "simulate", "protocol", "sweep", "output", "workers", "seed"},
                           "<root>");
    RunConfig c;
    if (!j.contains("mode")) throw ConfigError("missing required key 'mode'");
    read(j, "mode", c.mode, "<root>");
    read(j, "preset", c.preset, "<root>");
    read_number(j, "scaled_ratio", c.scaled_ratio, "<root>");
    if (j.contains("device")) {
        const json& d = j.at("device");
        if (!d.is_object()) throw ConfigError("section 'device' must be an object");
        for (auto it = d.begin(); it != d.end(); ++it) {
            if (!device_keys().count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in section 'device'");
            double v = 0;
            read_number(d, it.key().c_str(), v, "device");
            c.device[it.key()] = v;
        }
    }
    if (j.contains("truncation")) {
        const json& s = j.at("truncation");
        detail::reject_unknown(s, {"lc", "motion"}, "truncation");
        read_count(s, "lc", c.lc_dim, "truncation");
        read_count(s, "motion", c.motion_dim, "truncation");
    }
    if (j.contains("integrator")) {
        const json& s = j.at("integrator");
        detail::reject_unknown(s, {"tolerance"}, "integrator");
        read_number(s, "tolerance", c.tolerance, "integrator");
    }
    if (j.contains("params")) {
        const json& s = j.at("params");
        detail::reject_unknown(s, {"solve_zeta"}, "params");
        read(s, "solve_zeta", c.solve_zeta, "params");
    }
    if (j.contains("simulate")) {
        const json& s = j.at("simulate");
        detail::reject_unknown(s, {"hamiltonian", "t_final_s", "samples", "detuning_hz"}, "simulate");
        read(s, "hamiltonian", c.hamiltonian, "simulate");
        if (s.contains("t_final_s") && !s.at("t_final_s").is_null()) {
            double t = 0;
            read_number(s, "t_final_s", t, "simulate");
            c.t_final_s = t;
        }
        read_count(s, "samples", c.samples, "simulate");
        read_number(s, "detuning_hz", c.detuning_hz, "simulate");
    }
    if (j.contains("protocol")) {
        const json& s = j.at("protocol");
        detail::reject_unknown(s, {"name", "delta_hz", "n", "alpha", "alpha_cat", "heating_model"}, "protocol");
        read(s, "name", c.protocol, "protocol");
        read_number(s, "delta_hz", c.delta_hz, "protocol");
        read(s, "n", c.n, "protocol");
        read_number(s, "alpha", c.alpha, "protocol");
        read_number(s, "alpha_cat", c.alpha_cat, "protocol");
        read(s, "heating_model", c.heating_model, "protocol");
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        detail::reject_unknown(s, {"axis", "values", "gamma_heat_per_s", "delta_hz", "hold", "reference_n"}, "sweep");
        read(s, "axis", c.sweep_axis, "sweep");
        read(s, "values", c.sweep_values, "sweep");
        read_number(s, "gamma_heat_per_s", c.sweep_gamma_per_s, "sweep");
        read_number(s, "delta_hz", c.sweep_delta_hz, "sweep");
        read(s, "hold", c.sweep_hold, "sweep");
        read(s, "reference_n", c.sweep_reference_n, "sweep");
    }
    if (j.contains("output")) {
        const json& s = j.at("output");
        detail::reject_unknown(s, {"dir"}, "output");
        read(s, "dir", c.out_dir, "output");
    }
    read_count(j, "workers", c.workers, "<root>");
    read(j, "seed", c.seed, "<root>");
    validate(c);
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// Canonical, complete form of a config; parse_config(echo(c)) == c.
inline json echo(const RunConfig& c) {
    json j;
    j["mode"] = c.mode;
    j["preset"] = c.preset;
    j["scaled_ratio"] = c.scaled_ratio;
    j["device"] = json::object();
    for (const auto& [k, v] : c.device) j["device"][k] = v;
    j["truncation"] = {{"lc", c.lc_dim}, {"motion", c.motion_dim}};
    j["integrator"] = {{"tolerance", c.tolerance}};
    j["params"] = {{"solve_zeta", c.solve_zeta}};
    j["simulate"] = {{"hamiltonian", c.hamiltonian},
                     {"t_final_s", c.t_final_s ? json(*c.t_final_s) : json(nullptr)},
                     {"samples", c.samples},
                     {"detuning_hz", c.detuning_hz}};
    j["protocol"] = {{"name", c.protocol}, {"delta_hz", c.delta_hz}, {"n", c.n},
                     {"alpha", c.alpha}, {"alpha_cat", c.alpha_cat}, {"heating_model", c.heating_model}};
    j["sweep"] = {{"axis", c.sweep_axis}, {"values", c.sweep_values}, {"gamma_heat_per_s", c.sweep_gamma_per_s},
                  {"delta_hz", c.sweep_delta_hz}, {"hold", c.sweep_hold}, {"reference_n", c.sweep_reference_n}};
    j["output"] = {{"dir", c.out_dir}};
    j["workers"] = c.workers;
    j["seed"] = c.seed;
    return j;
}

// Device parameters for a config: preset, then overrides, then derived fields
// that were not overridden.
inline DeviceParams build_params(const RunConfig& c) {
    DeviceParams p = c.preset == "si" ? si_design() : scaled_hierarchy(c.scaled_ratio);
    for (const auto& [k, v] : c.device) {
        const DeviceKey& key = device_keys().at(k);
        p.*(key.field) = v * key.scale;
    }
    auto given = [&](const char* k) { return c.device.count(k) > 0; };
    if (c.preset == "si") {
        if ((given("L_h") || given("C0_f")) && !given("omega_lc_hz")) p.omega_lc = lc_frequency(p.L, p.C0);
        if (!given("z0_m")) p.z0 = zero_point_motion(p.ion_mass, p.omega_i);
        if (!given("q0_c")) p.q0 = zero_point_charge(p.Z);
        if (!given("g0_hz")) p.g0 = base_coupling(p);
    }
    if (!given("nu_hz")) p.nu = p.omega_lc - p.omega_i;
    const auto bad = p.validate();
    if (!bad.empty()) throw ConfigError("device parameters invalid: " + bad.front());
    return p;
}

}  // namespace ionlc
