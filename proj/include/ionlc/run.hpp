// run.hpp: run orchestration for the CLI: dispatch on mode, collect results,
// and write summary.json / series.csv / sweep.csv.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ionlc/config.hpp"
#include "ionlc/protocols.hpp"

namespace ionlc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr double kTruncationLimit = 1e-3;

struct SweepRow {
    double delta = 0.0;  // rad/s
    double gamma = 0.0;  // 1/s
    double infidelity = 0.0;
    int n = 0;
    double alpha = 0.0;
};

struct RunOutput {
    ProtocolResult result;
    std::optional<TimeSeries> series;
    std::vector<SweepRow> sweep;
    json extra = json::object();  // mode-specific structured data
};

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string series_csv(const TimeSeries& s) {
    std::ostringstream out;
    out << "time";
    for (const auto& c : s.order) out << ',' << c;
    out << '\n';
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        out << format_number(s.times[k]);
        for (const auto& c : s.order) out << ',' << format_number(s.columns.at(c)[k]);
        out << '\n';
    }
    return out.str();
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "delta,gamma,infidelity,n,alpha\n";
    for (const auto& r : rows)
        out << format_number(r.delta) << ',' << format_number(r.gamma) << ',' << format_number(r.infidelity) << ','
            << r.n << ',' << format_number(r.alpha) << '\n';
    return out.str();
}

inline HeatingModel heating_model(const std::string& name) {
    return name == "absorption" ? HeatingModel::absorption : HeatingModel::infinite_temperature;
}

inline json params_json(const DeviceParams& p) {
    return {{"L", p.L},           {"C0", p.C0},         {"eta", p.eta},
            {"omega_lc", p.omega_lc}, {"omega_i", p.omega_i}, {"nu", p.nu},
            {"h", p.h},           {"zeta", p.zeta},     {"ion_mass", p.ion_mass},
            {"z0", p.z0},         {"q0", p.q0},         {"g0", p.g0},
            {"Z", p.Z},           {"kappa_lc", p.kappa_lc}, {"gamma_heat", p.gamma_heat},
            {"Omega0", p.Omega0}, {"g", p.g()}};
}

namespace detail {

inline RunOutput run_params(const RunConfig& c, const DeviceParams& p) {
    RunOutput out;
    auto& r = out.result;
    r.name = "params";
    r.scalars["z0_nm"] = p.z0 * 1e9;
    r.scalars["q0_over_e"] = p.q0 / constants::e;
    r.scalars["g0_over_2pi_hz"] = p.g0 / kTwoPi;
    r.scalars["g_over_2pi_hz"] = p.g() / kTwoPi;
    r.scalars["omega_lc_over_2pi_hz"] = p.omega_lc / kTwoPi;
    r.scalars["impedance_sqrt_L_over_C"] = impedance(p.L, p.C0);
    r.scalars["heating_rate_at_h"] = heating_rate_scaled(0.5, 150e-6, p.h);  // 0.5/s measured at 150 um
    r.scalars["consistency_residual"] = consistency_residual(p);
    r.truncation_delta = 0.0;  // no Fock truncation involved
    if (c.solve_zeta) {
        const GeometricFactor z64 = geometric_factor({50e-6, 10e-6, p.h, 64});
        const GeometricFactor z128 = geometric_factor({50e-6, 10e-6, p.h, 128});
        r.scalars["zeta_solved"] = z128.zeta;
        r.scalars["zeta_grid_change"] = std::abs(z128.zeta - z64.zeta);
        r.checks["zeta grid convergent"] = std::abs(z128.zeta - z64.zeta) < 0.01;
    }
    r.checks["g0 in 2pi x (160-210) kHz"] = p.g0 / kTwoPi >= 160e3 && p.g0 / kTwoPi <= 210e3;
    out.extra["device"] = params_json(p);
    return out;
}

// |1,0> -> |0,1> under the chosen Hamiltonian, sampled over [0, t_final].
inline RunOutput run_simulate(const RunConfig& c, const DeviceParams& p) {
    const double g = p.g();
    const double t_final = c.t_final_s ? *c.t_final_s : swap_time(g);
    auto simulate = [&](std::size_t dl, std::size_t dm, bool sampled) {
        const ModeLayout layout = protocol_layout(dl, dm, false);
        EvolutionSpec spec;
        if (c.hamiltonian == "rwa")
            spec.hamiltonian = rwa_hamiltonian(g, kTwoPi * c.detuning_hz, layout, -kPi / 2.0);
        else if (c.hamiltonian == "interaction")
            spec.hamiltonian = interaction_frame_hamiltonian(p, layout);
        else
            spec.hamiltonian = lab_frame_hamiltonian(p, layout);
        spec.t_final = t_final;
        spec.tolerance = c.tolerance;
        if (sampled)
            for (std::size_t k = 0; k < c.samples; ++k)
                spec.sample_times.push_back(t_final * static_cast<double>(k) / static_cast<double>(c.samples - 1));
        spec.observables = {{"P_lc", number_op(layout, kLc)}, {"P_motion", number_op(layout, kMotion)}};
        const QState psi0 = QState::pure(layout, basis_vector(layout.total_dim(), index_of(layout, {{"lc", 1}})));
        return evolve_pure(spec, psi0);
    };
    RunOutput out;
    auto& r = out.result;
    r.name = "simulate:" + c.hamiltonian;
    const SimulationResult s = simulate(c.lc_dim, c.motion_dim, true);
    const SimulationResult big = simulate(2 * c.lc_dim, 2 * c.motion_dim, false);
    r.series = s.series;
    r.warnings = s.warnings;
    const QOperator nm = number_op(s.final_state.layout(), kMotion);
    const double pm = expectation(nm, s.final_state).real();
    const double pm_big = expectation(number_op(big.final_state.layout(), kMotion), big.final_state).real();
    r.scalars["t_final"] = t_final;
    r.scalars["g"] = g;
    r.scalars["P_motion_final"] = pm;
    r.scalars["norm_drift"] = s.norm_drift;
    r.scalars["steps"] = static_cast<double>(s.stats.accepted);
    r.truncation_delta = std::abs(pm_big - pm);
    out.series = s.series;
    return out;
}

inline RunOutput run_protocol(const RunConfig& c, const DeviceParams& p) {
    RunOutput out;
    auto& r = out.result;
    const double delta = kTwoPi * c.delta_hz;
    if (c.protocol == "swap") {
        r = run_swap(p.g(), c.lc_dim, c.motion_dim, c.samples, c.tolerance);
        out.series = r.series;
    } else if (c.protocol == "jc_cnot") {
        r = run_jc_cnot(p.Omega0, p.g(), c.lc_dim, c.motion_dim, c.tolerance);
    } else if (c.protocol == "ms_sequence") {
        const std::size_t levels = std::min<std::size_t>(6, c.lc_dim);
        const MsResult ms = ms_sequence(p, delta, c.n, c.lc_dim, c.motion_dim, c.tolerance, levels);
        const MsResult big = ms_sequence(p, delta, c.n, 2 * c.lc_dim, 2 * c.motion_dim, c.tolerance, levels);
        r = ms_protocol_result(ms, &big);
        r.scalars["delta"] = delta;
        r.scalars["n"] = c.n;
    } else if (c.protocol == "two_ion_gate") {
        const TwoIonGate gate = two_ion_phase_gate(cplx(c.alpha, 0.0), c.lc_dim);
        const TwoIonGate big = two_ion_phase_gate(cplx(c.alpha, 0.0), 2 * c.lc_dim);
        r.name = "two_ion_gate";
        r.scalars["phase"] = gate.phase;
        r.scalars["expected_phase"] = gate.expected_phase;
        r.scalars["phase_error"] = phase_distance(gate.phase, gate.expected_phase);
        r.scalars["lc_return_fidelity"] = gate.lc_return_fidelity;
        r.scalars["zz_commutator"] = gate.zz_commutator;
        r.warnings = gate.warnings;
        r.truncation_delta = std::abs(big.lc_return_fidelity - gate.lc_return_fidelity);
        r.checks["phase within 1e-3"] = r.scalar("phase_error") < 1e-3;
        r.checks["lc returns to vacuum"] = gate.lc_return_fidelity > 1.0 - 1e-6;
        r.checks["commutes with sz sz"] = gate.zz_commutator < 1e-8;
    } else if (c.protocol == "cat_metrology") {
        const CatMetrology m = cat_metrology(c.alpha_cat, c.lc_dim);
        const CatMetrology big = cat_metrology(c.alpha_cat, 2 * c.lc_dim);
        const CatVoltageEstimate v = cat_voltage_extrapolation(p, 100.0);
        r.name = "cat_metrology";
        r.scalars["alpha"] = m.alpha;
        r.scalars["first_zero"] = m.first_zero;
        r.scalars["period"] = m.period;
        r.scalars["sensitivity"] = m.sensitivity;
        r.scalars["v_zero_point"] = v.v_zero_point;
        r.scalars["v_resolution_nbar100"] = v.v_resolution;
        r.warnings = m.warnings;
        r.truncation_delta = std::isfinite(m.period) && std::isfinite(big.period) ? std::abs(big.period - m.period) : kNaN;
        TimeSeries s;
        s.add_column("parity");
        s.times = m.probe;
        s.columns["parity"] = m.parity;
        out.series = s;
    } else {
        BudgetOptions opt;
        opt.lc_dim = c.lc_dim;
        opt.motion_dim = c.motion_dim;
        opt.model = heating_model(c.heating_model);
        opt.tolerance = std::max(c.tolerance, 1e-12);
        opt.workers = c.workers;
        r = full_budget_run(p, opt);
    }
    return out;
}

inline RunOutput run_sweep(const RunConfig& c, const DeviceParams& p) {
    RunOutput out;
    auto& r = out.result;
    r.name = "sweep:" + c.sweep_axis;
    HeatingScanOptions opt;
    opt.lc_dim = c.lc_dim;
    opt.motion_dim = c.motion_dim;
    opt.tolerance = c.tolerance;
    opt.workers = c.workers;
    opt.model = heating_model(c.heating_model);
    const double d_ref = kTwoPi * c.sweep_delta_hz;
    std::vector<HeatingPoint> points;
    std::vector<double> gammas;
    if (c.sweep_axis == "delta_hz") {
        opt.hold = c.sweep_hold == "alpha" ? ScanHold::alpha : ScanHold::duration;
        opt.target_alpha = ms_alpha_magnitude(p, d_ref, c.sweep_reference_n);
        opt.target_time = ms_gate_time(d_ref, c.sweep_reference_n);
        std::vector<double> deltas;
        for (double v : c.sweep_values) deltas.push_back(kTwoPi * v);
        const HeatingScan scan = heating_resistance_scan(p, deltas, c.sweep_gamma_per_s, opt);
        points = scan.points;
        gammas.assign(points.size(), c.sweep_gamma_per_s);
        r.scalars["loglog_slope"] = scan.slope;
        r.warnings = scan.warnings;
    } else {
        points = parallel_map(c.sweep_values.size(), c.workers, [&](std::size_t i) {
            return ms_heating_point(p, d_ref, c.sweep_reference_n, c.sweep_values[i], opt);
        });
        gammas = c.sweep_values;
        std::vector<double> ys;
        for (const auto& pt : points) ys.push_back(pt.infidelity);
        r.scalars["loglog_slope"] = loglog_slope(gammas, ys);
    }
    for (std::size_t i = 0; i < points.size(); ++i)
        out.sweep.push_back({points[i].delta, gammas[i], points[i].infidelity, points[i].n, points[i].alpha});
    r.scalars["points"] = static_cast<double>(points.size());

    // Convergence on the first point only; the scan cost grows as dim^4.
    HeatingScanOptions big = opt;
    big.lc_dim *= 2;
    big.motion_dim *= 2;
    const HeatingPoint ref = ms_heating_point(p, points.front().delta, points.front().n, gammas.front(), big);
    r.truncation_delta = std::abs(ref.infidelity - points.front().infidelity);
    return out;
}

}  // namespace detail

inline RunOutput execute(const RunConfig& c) {
    const DeviceParams p = build_params(c);
    if (c.mode == "params") return detail::run_params(c, p);
    if (c.mode == "simulate") return detail::run_simulate(c, p);
    if (c.mode == "protocol") return detail::run_protocol(c, p);
    return detail::run_sweep(c, p);
}

inline json summary_json(const RunConfig& c, const RunOutput& out) {
    const ProtocolResult& r = out.result;
    json s;
    s["status"] = "ok";
    s["name"] = r.name;
    s["config"] = echo(c);
    s["scalars"] = json::object();
    for (const auto& [k, v] : r.scalars) s["scalars"][k] = std::isfinite(v) ? json(v) : json(nullptr);
    s["checks"] = json::object();
    for (const auto& [k, v] : r.checks) s["checks"][k] = v;
    s["warnings"] = r.warnings;
    s["truncation_delta"] = std::isfinite(r.truncation_delta) ? json(r.truncation_delta) : json(nullptr);
    s["truncation_converged"] = std::isfinite(r.truncation_delta) && r.truncation_delta <= kTruncationLimit;
    for (auto it = out.extra.begin(); it != out.extra.end(); ++it) s[it.key()] = it.value();
    return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

// Runs a validated config and writes artifacts under `dir`. Returns the exit
// code; numerical failures are recorded in summary.json.
inline int run_and_emit(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log) {
    std::filesystem::create_directories(dir);
    try {
        const RunOutput out = execute(c);
        write_text(dir / "summary.json", summary_json(c, out).dump(2) + "\n");
        if (out.series) write_text(dir / "series.csv", series_csv(*out.series));
        if (!out.sweep.empty()) write_text(dir / "sweep.csv", sweep_csv(out.sweep));
        for (const auto& w : out.result.warnings) log << "warning: " << w << '\n';
        return kExitOk;
    } catch (const NumericalFailure& e) {
        json s;
        s["status"] = "numerical_failure";
        s["config"] = echo(c);
        s["error"] = e.what();
        s["time"] = e.time();
        write_text(dir / "summary.json", s.dump(2) + "\n");
        log << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ConfigError& e) {
        log << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const InvalidArgument& e) {
        log << "validation error: " << e.what() << '\n';
        return kExitValidation;
    }
}

}  // namespace ionlc
