// checks.hpp: the invariant suite behind `ionlc check`.
//
// Each check reports a measured value against a pinned limit. Checks are
// independent and run on a bounded worker pool; results come back in a fixed
// order.

#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ionlc/config.hpp"
#include "ionlc/protocols.hpp"
#include "ionlc/run.hpp"
#include "ionlc/rwa_check.hpp"

namespace ionlc {

struct CheckOutcome {
    std::string module;
    std::string name;
    bool passed = false;
    double value = 0.0;
    double limit = 0.0;
    std::string detail;
};

struct CheckOptions {
    bool expensive = false;  // adds the omega_i/omega_lc = 1e-3 RWA spot check
    std::size_t workers = 1;
};

namespace checks {

inline CheckOutcome below(std::string module, std::string name, double value, double limit, std::string detail = {}) {
    return {std::move(module), std::move(name), value < limit, value, limit, std::move(detail)};
}
inline CheckOutcome above(std::string module, std::string name, double value, double limit, std::string detail = {}) {
    return {std::move(module), std::move(name), value >= limit, value, limit, std::move(detail)};
}

inline Vector random_state(std::size_t dim, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    Vector v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(nd(rng), nd(rng));
    return v.normalized();
}

// ----- qalgebra -----

inline std::vector<CheckOutcome> canonical_commutator() {
    double worst = 0.0;
    for (std::size_t n = 2; n <= 40; ++n) {
        const Matrix a = annihilation(n).matrix();
        const Matrix c = a * a.adjoint() - a.adjoint() * a;
        const auto m = static_cast<Eigen::Index>(n - 1);
        worst = std::max(worst, max_abs(c.topLeftCorner(m, m) - Matrix::Identity(m, m)));
    }
    // sqrt(n)^2 != n in floating point; allow a few ulps of the largest level.
    return {below("qalgebra", "[a, a+] = 1 below the cutoff, dims 2..40", worst, 1e-13)};
}

inline std::vector<CheckOutcome> embed_spectra() {
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    Matrix h(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) h(i, j) = cplx(nd(rng), nd(rng));
    h = 0.5 * (h + h.adjoint());
    const ModeLayout layout({{"spin", 2}, {"lc", 3}, {"motion", 4}});
    const QOperator big = embed(QOperator(ModeLayout::single(3, "lc"), h), layout, "lc");
    Eigen::SelfAdjointEigenSolver<Matrix> small_es(h), big_es(big.matrix());
    std::vector<double> expect;
    for (Eigen::Index i = 0; i < 3; ++i)
        for (int k = 0; k < 8; ++k) expect.push_back(small_es.eigenvalues()(i));
    std::sort(expect.begin(), expect.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < expect.size(); ++i)
        worst = std::max(worst, std::abs(big_es.eigenvalues()(static_cast<Eigen::Index>(i)) - expect[i]));
    return {below("qalgebra", "embed preserves spectrum with multiplicity", worst, 1e-12)};
}

inline std::vector<CheckOutcome> displacement_unitarity() {
    double worst = 0.0;
    for (std::size_t dim : {8u, 16u, 32u, 64u}) {
        const double r = std::sqrt(static_cast<double>(dim) / 8.0);
        for (double phi : {0.0, 0.7, 2.1}) {
            const Matrix d = displacement(std::polar(r, phi), dim).value.matrix();
            const auto h = static_cast<Eigen::Index>(dim / 2);
            const Matrix dd = (d.adjoint() * d).topLeftCorner(h, h);
            worst = std::max(worst, max_abs(dd - Matrix::Identity(h, h)));
        }
    }
    return {below("qalgebra", "D+D = 1 on the lower half for |alpha|^2 <= dim/8", worst, 1e-8)};
}

inline std::vector<CheckOutcome> constructor_determinism() {
    auto build = [] {
        Matrix out = displacement(cplx(1.1, -0.4), 24).value.matrix();
        out.col(0) += coherent_state(cplx(0.3, 0.9), 24).value.vector();
        out.col(1) += cat_state(1.3, 0.5, 24).value.vector();
        return out;
    };
    const Matrix a = build(), b = build();
    const bool same = a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
    return {{"qalgebra", "constructors are bit-identical on repeat", same, same ? 0.0 : 1.0, 0.0, {}}};
}

// ----- device -----

inline std::vector<CheckOutcome> device_scaling() {
    const DeviceParams p = si_design();
    const double lam = 3.7;
    const double z_exp = std::abs(zero_point_motion(p.ion_mass, lam * p.omega_i) / p.z0 - std::pow(lam, -0.5));
    DeviceParams q = p;
    q.h = lam * p.h;
    const double g_exp = std::abs(base_coupling(q) / p.g0 - 1.0 / lam);
    const double heat_exp = std::abs(heating_rate_scaled(1.0, 1.0, lam) - std::pow(lam, -4.0));
    return {below("device", "z0 ~ omega^-1/2", z_exp, 1e-14), below("device", "g0 ~ 1/h", g_exp, 1e-14),
            below("device", "heating ~ d^-4", heat_exp, 1e-14)};
}

inline std::vector<CheckOutcome> zeta_convergence() {
    const GeometricFactor a = geometric_factor({50e-6, 10e-6, 25e-6, 64});
    const GeometricFactor b = geometric_factor({50e-6, 10e-6, 25e-6, 128});
    return {below("device", "|zeta(64) - zeta(128)| at the device geometry", std::abs(a.zeta - b.zeta), 0.01)};
}

inline std::vector<CheckOutcome> laplace_boundaries() {
    const StripProblem prob{50e-6, 10e-6, 1.25e-6};
    LaplaceReport rep;
    const StripGrid g = solve_strips(prob, 1e-9, &rep);
    const auto lo = static_cast<std::size_t>(std::lround(0.5 * prob.gap / prob.spacing));
    const auto hi = static_cast<std::size_t>(std::lround((0.5 * prob.gap + prob.island_side) / prob.spacing));
    double bc = 0.0;
    for (std::size_t j = 0; j < g.ny(); ++j) {
        bc = std::max({bc, std::abs(g.at(0, j)), std::abs(g.at(g.nx() - 1, j))});
    }
    for (std::size_t i = 0; i < g.nx(); ++i) {
        bc = std::max(bc, std::abs(g.at(i, g.ny() - 1)));
        if (i >= lo && i <= hi) bc = std::max(bc, std::abs(g.at(i, 0) + 0.5));
    }
    return {below("device", "Laplace boundary values exact", bc, 1e-15),
            below("device", "Laplace interior residual", g.max_residual(), 1e-8)};
}

// ----- hamiltonians -----

inline std::vector<CheckOutcome> hamiltonian_hermiticity() {
    const DeviceParams p = scaled_hierarchy();
    const ModeLayout two = protocol_layout(4, 4, false);
    const ModeLayout three = protocol_layout(4, 4, true);
    const std::vector<TimeDependentHamiltonian> hs = {
        lab_frame_hamiltonian(p, two), interaction_frame_hamiltonian(p, two), interaction_frame_hamiltonian(p, two, false),
        rwa_hamiltonian(p.g(), 0.3, two), ms_hamiltonian(p, kTwoPi * 5.0, three), jc_hamiltonian(p.Omega0, three)};
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ud(0.0, 10.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double t = ud(rng);
        for (const auto& h : hs) {
            const Matrix m = h.at(t);
            worst = std::max(worst, max_abs(m - m.adjoint()) / std::max(1.0, max_abs(m)));
        }
    }
    return {below("hamiltonians", "Hermitian at 100 random times", worst, 1e-12)};
}

inline std::vector<CheckOutcome> rwa_validity(double ratio) {
    const std::string tag = ratio == 1e-2 ? "" : " (ratio " + format_number(ratio) + ")";
    DeviceParams p = scaled_hierarchy(ratio);
    const RwaComparison a = compare_rwa(p);
    p.eta = 0.15;
    const RwaComparison b = compare_rwa(p);
    const double rabi_err = std::abs(a.rabi_omega / a.rabi_expected - 1.0);
    const double ratio_infid = (1.0 - a.min_fidelity) / std::max(1.0 - b.min_fidelity, 1e-300);
    return {below("hamiltonians", "transfer frequency within 3% of 2g" + tag, rabi_err, 0.03),
            above("hamiltonians", "full vs RWA fidelity over one swap" + tag, a.min_fidelity, 0.99),
            above("hamiltonians", "halving eta cuts the RWA infidelity >= 3x" + tag, ratio_infid, 3.0)};
}

// ----- dynamics -----

inline std::vector<CheckOutcome> energy_and_number() {
    const ModeLayout layout = protocol_layout(4, 4, false);
    const double tol = 1e-10;
    EvolutionSpec spec;
    spec.hamiltonian = rwa_hamiltonian(kTwoPi * 0.4, 0.0, layout);
    spec.t_final = 3.0;
    spec.tolerance = tol;
    const Matrix hm = spec.hamiltonian.at(0.0);
    const QOperator n_tot = number_op(layout, kLc) + number_op(layout, kMotion);
    spec.observables = {{"H", QOperator(layout, hm)}, {"N", n_tot}};
    spec.sample_times = {0.0, 1.0, 2.0, 3.0};
    const SimulationResult r = evolve_pure(spec, QState::pure(layout, random_state(16, 3)));
    const auto& e = r.series.column("H");
    const auto& n = r.series.column("N");
    double de = 0.0, dn = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
        de = std::max(de, std::abs(e[k] - e[0]));
        dn = std::max(dn, std::abs(n[k] - n[0]));
    }
    const double scale = hm.cwiseAbs().rowwise().sum().maxCoeff();
    return {below("dynamics", "<H> conserved for static H (relative)", de / scale, 10.0 * tol),
            below("dynamics", "beam-splitter <a+a + b+b> drift", dn, 1e-8)};
}

inline std::vector<CheckOutcome> lindblad_cptp() {
    const ModeLayout layout = protocol_layout(4, 4, false);
    EvolutionSpec spec;
    spec.hamiltonian = rwa_hamiltonian(kTwoPi * 0.4, kTwoPi * 0.1, layout);
    spec.t_final = 2.0;
    spec.tolerance = 1e-10;
    spec.collapse_ops = heating_ops(layout, 0.3, HeatingModel::infinite_temperature);
    spec.collapse_ops.push_back({lowering(layout, kLc), 0.5, "lc loss"});
    const Vector v = random_state(16, 5);
    const Vector w = random_state(16, 6);
    const QState rho0 = QState::mixed(layout, 0.6 * v * v.adjoint() + 0.4 * w * w.adjoint());
    const SimulationResult r = evolve_lindblad(spec, rho0);
    return {below("dynamics", "Lindblad trace drift", r.norm_drift, 1e-9),
            below("dynamics", "Lindblad hermiticity residual", r.hermiticity, 1e-12),
            above("dynamics", "Lindblad min eigenvalue", r.min_eigenvalue, -1e-10)};
}

// Error against the exact solution should fall steadily as the tolerance
// halves. For H = g(a b+ e^{-i D t} + h.c.), U(t) = e^{-i D t n_b} e^{-i (H(0) - D n_b) t}.
inline std::vector<CheckOutcome> integrator_order() {
    const ModeLayout layout = protocol_layout(3, 3, false);
    const double detuning = kTwoPi * 0.7;
    const TimeDependentHamiltonian h = rwa_hamiltonian(kTwoPi * 0.4, detuning, layout);
    const double t1 = 2.0;
    const Matrix nb = number_op(layout, kMotion).matrix();
    const Matrix exact = expm(-kI * detuning * t1 * nb) * expm(-kI * t1 * (h.at(0.0) - detuning * nb));
    const auto n = static_cast<Eigen::Index>(layout.total_dim());
    std::vector<double> tols, errs;
    for (int k = 0; k < 7; ++k) {
        const double tol = 1e-6 * std::pow(0.5, k);
        tols.push_back(tol);
        errs.push_back(max_abs(evolve_columns(h, Matrix::Identity(n, n), 0.0, t1, tol) - exact));
    }
    double worst_step = 0.0;
    for (std::size_t k = 1; k < errs.size(); ++k) worst_step = std::max(worst_step, errs[k] / errs[k - 1]);
    return {below("dynamics", "error ratio per tolerance halving (worst)", worst_step, 1.0),
            above("dynamics", "log-log slope of error vs tolerance", detail::loglog_slope(tols, errs), 0.7)};
}

// ----- protocols -----

inline std::vector<CheckOutcome> schedule_unitarity() {
    const DeviceParams p = scaled_hierarchy();
    const ModeLayout layout = protocol_layout(4, 4);
    PulseSchedule chain(layout);
    for (int k = 0; k < 10; ++k) chain.append(swap_schedule(p.g(), layout));
    chain.append(jc_cnot_schedule(p.Omega0, p.g(), layout));
    chain.append(ms_echo_schedule(p, kTwoPi * 5.0, 1, layout));
    double worst = 0.0;
    for (const PulseSchedule* s : {&chain}) worst = std::max(worst, schedule_propagator(*s).unitarity_residual());
    return {below("protocols", "schedule propagator unitary (26 segments)", worst, 1e-7)};
}

// The swap maps a -> -i b and b -> -i a, so S U(b) S = U(i a) (-1)^N. On an
// LC-vacuum input the composite must act on the LC exactly as R U R+ P with
// R = exp(-i pi/2 a+a) and P the LC parity.
inline std::vector<CheckOutcome> swap_conjugation() {
    const DeviceParams p = scaled_hierarchy();
    const std::size_t d = 12;
    const ModeLayout layout = protocol_layout(d, d, false);
    const Matrix num = number(d).matrix();
    const std::vector<Matrix> family = {displacement(cplx(0.6, 0.2), d).value.matrix(), expm(-kI * 0.9 * num),
                                        displacement(cplx(-0.3, 0.5), d).value.matrix() * expm(-kI * 0.4 * num)};
    const Matrix r = expm(-kI * (kPi / 2.0) * num);
    const Matrix parity = expm(kI * kPi * num);
    Vector lc = Vector::Zero(static_cast<Eigen::Index>(d));
    lc(0) = lc(1) = 1.0 / std::sqrt(2.0);
    Vector vac = Vector::Zero(static_cast<Eigen::Index>(d));
    vac(0) = 1.0;
    const Vector psi = kron(lc, vac);
    const Quadratures qp = quadratures(d);
    const std::vector<Matrix> observables = {embed(qp.x, layout, kLc).matrix(), embed(qp.p, layout, kLc).matrix(),
                                             number_op(layout, kLc).matrix(), number_op(layout, kMotion).matrix()};
    double worst = 0.0;
    for (const Matrix& u : family) {
        const QOperator on_motion = embed(QOperator(ModeLayout::single(d, std::string(kMotion)), u), layout, kMotion);
        const Matrix lc_equiv = r * u * r.adjoint() * parity;
        const QOperator on_lc = embed(QOperator(ModeLayout::single(d, std::string(kLc)), lc_equiv), layout, kLc);
        const Vector a = conjugate_by_swaps(on_motion, p.g()).matrix() * psi;
        const Vector b = on_lc.matrix() * psi;
        for (const Matrix& o : observables) worst = std::max(worst, std::abs(a.dot(o * a) - b.dot(o * b)));
    }
    return {below("protocols", "conjugate_by_swaps reproduces the slot action", worst, 1e-6)};
}

inline std::vector<CheckOutcome> ms_echo() {
    const MsResult r = ms_sequence(scaled_hierarchy(), kTwoPi * 5.0, 1, 6, 6);
    return {above("protocols", "echo suppresses the q^2 phase spread", r.echo_suppression, 100.0)};
}

inline std::vector<CheckOutcome> two_ion_commutes() {
    const TwoIonGate g = two_ion_phase_gate(std::sqrt(kPi / 8.0));
    return {below("protocols", "two-ion gate commutes with sz sz", g.zz_commutator, 1e-8)};
}

// ----- cli -----

inline std::vector<CheckOutcome> config_round_trip() {
    RunConfig c;
    c.mode = "sweep";
    c.device = {{"eta", 0.25}, {"omega_i_hz", 12.5}, {"gamma_heat_per_s", 0.1}};
    c.sweep_values = {5.0, 10.0, 20.0};
    c.t_final_s = 0.3;
    c.workers = 3;
    const RunConfig back = parse_config(echo(c));
    const RunConfig again = parse_config_text(echo(back).dump());
    const bool ok = back == c && again == c;
    return {{"cli", "config parse -> echo -> parse is identity", ok, ok ? 0.0 : 1.0, 0.0, {}}};
}

inline std::vector<CheckOutcome> output_determinism() {
    RunConfig c;
    c.mode = "protocol";
    c.protocol = "swap";
    c.samples = 51;
    const std::string a = series_csv(*execute(c).series);
    const std::string b = series_csv(*execute(c).series);
    const bool ok = a == b;
    return {{"cli", "identical config gives byte-identical series.csv", ok, ok ? 0.0 : 1.0, 0.0, {}}};
}

inline std::vector<CheckOutcome> truncation_convergence() {
    const ProtocolResult swap = run_swap(scaled_hierarchy().g());
    BudgetOptions bo;
    const ProtocolResult budget = full_budget_run(si_design(), bo);
    return {below("cli", "swap truncation delta", swap.truncation_delta, kTruncationLimit),
            below("cli", "budget truncation delta", budget.truncation_delta, kTruncationLimit)};
}

}  // namespace checks

inline std::vector<CheckOutcome> run_invariant_checks(const CheckOptions& opt = {}) {
    using Fn = std::function<std::vector<CheckOutcome>()>;
    std::vector<Fn> suite = {
        checks::canonical_commutator, checks::embed_spectra,        checks::displacement_unitarity,
        checks::constructor_determinism, checks::device_scaling,    checks::zeta_convergence,
        checks::laplace_boundaries,   checks::hamiltonian_hermiticity, [] { return checks::rwa_validity(1e-2); },
        checks::energy_and_number,    checks::lindblad_cptp,        checks::integrator_order,
        checks::schedule_unitarity,   checks::swap_conjugation,     checks::ms_echo,
        checks::two_ion_commutes,     checks::config_round_trip,    checks::output_determinism,
        checks::truncation_convergence};
    if (opt.expensive) suite.push_back([] { return checks::rwa_validity(1e-3); });
    const auto groups = parallel_map(suite.size(), opt.workers, [&](std::size_t i) {
        try {
            return suite[i]();
        } catch (const std::exception& e) {
            return std::vector<CheckOutcome>{{"?", "check #" + std::to_string(i), false, 0.0, 0.0, e.what()}};
        }
    });
    std::vector<CheckOutcome> out;
    for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
    return out;
}

}  // namespace ionlc
