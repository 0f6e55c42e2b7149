// rwa_check.hpp: full interaction-frame dynamics against the parametric
// resonance (RWA) Hamiltonian for the |1,0> -> |0,1> swap.

#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ionlc/dynamics.hpp"
#include "ionlc/hamiltonians.hpp"

namespace ionlc {

struct RwaComparison {
    double min_fidelity = 0.0;       // over [0, T] on the sample grid
    double endpoint_fidelity = 0.0;  // at T
    double rabi_omega = 0.0;         // fitted angular frequency of <b†b>(t)
    double rabi_expected = 0.0;      // 2 g
    bool rabi_low_confidence = true;
    double transfer_at_T = 0.0;      // <b†b>(T) of the full dynamics
    double norm_drift = 0.0;
    std::size_t steps = 0;
};

struct RwaCompareOptions {
    std::size_t dim = 4;              // per-mode truncation
    double periods = 4.0;             // transfer periods (pi/g each) for the frequency fit
    std::size_t samples_per_swap = 400;
    double tolerance = 1e-10;
};

inline RwaComparison compare_rwa(const DeviceParams& p, const RwaCompareOptions& opt = {}) {
    const ModeLayout layout({{std::string(kLc), opt.dim}, {std::string(kMotion), opt.dim}});
    const double g = p.g();
    const double T = kPi / (2.0 * g);
    const double t_end = opt.periods * 2.0 * T;
    const auto n_samples = static_cast<std::size_t>(std::ceil(opt.periods * 2.0 * static_cast<double>(opt.samples_per_swap)));

    EvolutionSpec spec;
    spec.hamiltonian = interaction_frame_hamiltonian(p, layout);
    spec.t_final = t_end;
    spec.tolerance = opt.tolerance;
    for (std::size_t k = 0; k <= n_samples; ++k)
        spec.sample_times.push_back(t_end * static_cast<double>(k) / static_cast<double>(n_samples));
    spec.observables = {{"n_motion", number_op(layout, kMotion)}};

    Vector psi0 = basis_vector(layout.total_dim(), layout.flat_index({1, 0}));
    // Dense trajectory: record full states on the swap window.
    std::vector<Vector> states;
    std::vector<double> state_times;
    {
        const auto rhs = [&](double t, const Vector& y) -> Vector { return -kI * spec.hamiltonian.apply(t, y); };
        StepStats stats;
        std::size_t next = 0;
        const std::size_t n_swap = opt.samples_per_swap;
        integrate_dp5(rhs, psi0, 0.0, T, spec.integrator(), stats, [&](double t0, double t1, auto&& dense) {
            while (next <= n_swap) {
                const double ts = T * static_cast<double>(next) / static_cast<double>(n_swap);
                if (ts > t1) break;
                state_times.push_back(ts);
                states.push_back(ts <= t0 ? Vector(dense(t0)) : Vector(dense(ts)));
                ++next;
            }
        });
        if (states.empty() || state_times.front() > 0.0) {
            states.insert(states.begin(), psi0);
            state_times.insert(state_times.begin(), 0.0);
        }
    }
    const SimulationResult full = evolve_pure(spec, QState::pure(layout, psi0));

    const Matrix h_rwa = rwa_hamiltonian(g, 0.0, layout, -kPi / 2.0).at(0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h_rwa);
    const Vector c0 = es.eigenvectors().adjoint() * psi0;
    auto rwa_state = [&](double t) -> Vector {
        Vector c = c0;
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(-kI * es.eigenvalues()(i) * t);
        return es.eigenvectors() * c;
    };

    RwaComparison out;
    out.min_fidelity = 1.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        const double f = std::norm(rwa_state(state_times[k]).dot(states[k]));
        out.min_fidelity = std::min(out.min_fidelity, f);
    }
    out.endpoint_fidelity = std::norm(rwa_state(state_times.back()).dot(states.back()));
    out.transfer_at_T = states.back().dot(number_op(layout, kMotion).matrix() * states.back()).real();

    const RabiFit fit = extract_rabi_frequency(full.series.times, full.series.column("n_motion"));
    out.rabi_omega = fit.omega;
    out.rabi_low_confidence = fit.low_confidence;
    out.rabi_expected = 2.0 * g;
    out.norm_drift = full.norm_drift;
    out.steps = full.stats.accepted;
    return out;
}

}  // namespace ionlc
