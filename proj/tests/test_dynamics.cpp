#include <gtest/gtest.h>

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "ionlc/dynamics.hpp"
#include "ionlc/hamiltonians.hpp"

using namespace ionlc;

namespace {

ModeLayout two_modes(std::size_t d = 3) { return ModeLayout({{std::string(kLc), d}, {std::string(kMotion), d}}); }

QState fock2(const ModeLayout& l, std::size_t n, std::size_t m) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(l.total_dim()));
    v(static_cast<Eigen::Index>(l.flat_index({n, m}))) = 1.0;
    return QState::pure(l, v);
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
    return t;
}

Matrix random_hermitian(Eigen::Index n, std::mt19937& rng) {
    std::normal_distribution<double> nd;
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    return 0.5 * (m + m.adjoint());
}

// Beam splitter g (a b† + a† b) with the transfer probability recorded.
EvolutionSpec beam_splitter_spec(double g, double t_final, const ModeLayout& l) {
    EvolutionSpec s;
    s.hamiltonian = rwa_hamiltonian(g, 0.0, l, 0.0);
    s.t_final = t_final;
    s.tolerance = 1e-11;
    const QState target = fock2(l, 0, 1);
    s.observables.push_back({"P01", QOperator(l, target.vector() * target.vector().adjoint())});
    return s;
}

}  // namespace

TEST(EvolvePure, BeamSplitterRabiCurve) {
    const ModeLayout l = two_modes();
    const double g = 1.7;
    EvolutionSpec s = beam_splitter_spec(g, 2.0, l);
    s.sample_times = linspace(0.0, 2.0, 41);
    const SimulationResult r = evolve_pure(s, fock2(l, 1, 0));
    const auto& p = r.series.column("P01");
    ASSERT_EQ(p.size(), 41u);
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], std::pow(std::sin(g * r.series.times[k]), 2), 1e-8);
    EXPECT_LT(r.norm_drift, 1e-9);
}

TEST(EvolvePure, PerfectSwapAtQuarterPeriod) {
    const ModeLayout l = two_modes();
    const double g = 0.8;
    const SimulationResult r = evolve_pure(beam_splitter_spec(g, kPi / (2.0 * g), l), fock2(l, 1, 0));
    EXPECT_GT(fidelity(r.final_state, fock2(l, 0, 1)), 1.0 - 1e-6);
}

TEST(EvolvePure, ZeroHamiltonianLeavesStateAlone) {
    const ModeLayout l = two_modes();
    EvolutionSpec s;
    s.hamiltonian = TimeDependentHamiltonian::constant(QOperator::zero(l));
    s.t_final = 3.0;
    const QState psi = QState::pure(l, coherent_state(cplx(0.3, 0.1), 9).value.vector());
    EXPECT_LT((evolve_pure(s, psi).final_state.vector() - psi.vector()).norm(), 1e-14);
}

TEST(EvolvePure, MatchesMatrixExponentialOnRandomStaticH) {
    std::mt19937 rng(3);
    const ModeLayout l = ModeLayout::single(6);
    for (int trial = 0; trial < 3; ++trial) {
        const Matrix h = random_hermitian(6, rng);
        EvolutionSpec s;
        s.hamiltonian = TimeDependentHamiltonian::constant(QOperator(l, h));
        s.t_final = 1.3;
        s.tolerance = 1e-12;
        const QState psi = fock_state(2, 6);
        const Vector ref = (Matrix(-kI * 1.3 * h)).exp() * psi.vector();
        EXPECT_LT((evolve_pure(s, QState::pure(l, psi.vector())).final_state.vector() - ref).norm(), 1e-8) << trial;
    }
}

TEST(EvolvePure, RejectsCollapseOpsAndMixedInput) {
    const ModeLayout l = two_modes();
    EvolutionSpec s = beam_splitter_spec(1.0, 1.0, l);
    EXPECT_THROW(evolve_pure(s, fock2(l, 1, 0).as_mixed()), InvalidArgument);
    s.collapse_ops.push_back({lowering(l, kLc), 0.1, "a"});
    EXPECT_THROW(evolve_pure(s, fock2(l, 1, 0)), InvalidArgument);
}

TEST(EvolutionSpec, Validation) {
    const ModeLayout l = two_modes();
    EvolutionSpec s = beam_splitter_spec(1.0, 1.0, l);
    s.tolerance = 1e-13;
    EXPECT_THROW(s.validate(), InvalidArgument);
    s.tolerance = 1e-3;
    EXPECT_THROW(s.validate(), InvalidArgument);
    s.tolerance = 1e-8;
    s.t_final = 0.0;
    EXPECT_THROW(s.validate(), InvalidArgument);
    s.t_final = 1.0;
    s.collapse_ops.push_back({lowering(l, kLc), -1.0, "a"});
    EXPECT_THROW(s.validate(), InvalidArgument);
    s.collapse_ops.clear();
    s.collapse_ops.push_back({annihilation(3), 1.0, "a"});
    EXPECT_THROW(s.validate(), LayoutMismatch);
    s.collapse_ops.clear();
    s.sample_times = {2.0};
    EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(EvolvePure, StepBudgetExhaustionIsNumericalFailure) {
    const ModeLayout l = two_modes();
    const double g = 1.0;
    auto rhs = [&](double, const Vector& y) -> Vector { return -kI * g * y; };
    IntegratorOptions o;
    o.max_steps = 3;
    o.max_step = 1e-3;
    StepStats st;
    EXPECT_THROW(integrate_dp5(rhs, Vector(fock2(l, 1, 0).vector()), 0.0, 1.0, o, st), NumericalFailure);
}

TEST(EvolvePure, ConservesEnergyAndExcitationNumber) {
    const DeviceParams p = scaled_hierarchy();
    const ModeLayout l = two_modes(4);
    EvolutionSpec s;
    s.hamiltonian = rwa_hamiltonian(p.g(), 0.0, l);
    s.t_final = 25.0;
    s.tolerance = 1e-11;
    const QOperator n_tot = number_op(l, kLc) + number_op(l, kMotion);
    s.observables.push_back({"N", n_tot});
    s.observables.push_back({"E", s.hamiltonian(0.0)});
    s.sample_times = linspace(0.0, 25.0, 51);
    const QState psi = QState::pure(l, (fock2(l, 2, 0).vector() + fock2(l, 1, 1).vector()) / std::sqrt(2.0));
    const SimulationResult r = evolve_pure(s, psi);
    for (double v : r.series.column("N")) EXPECT_NEAR(v, 2.0, 1e-8);
    const double e0 = r.series.column("E").front();
    for (double v : r.series.column("E")) EXPECT_NEAR(v, e0, 1e-8 * p.g());
}

TEST(EvolveLindblad, ExponentialDecay) {
    const ModeLayout l = ModeLayout::single(6, std::string(kLc));
    const double kappa = 0.7;
    EvolutionSpec s;
    s.hamiltonian = TimeDependentHamiltonian::constant(QOperator::zero(l));
    s.t_final = 2.0;
    s.collapse_ops.push_back({lowering(l, kLc), kappa, "a"});
    s.observables.push_back({"n", number_op(l, kLc)});
    s.sample_times = linspace(0.0, 2.0, 11);
    const SimulationResult r = evolve_lindblad(s, QState::pure(l, fock_state(3, 6).vector()));
    for (std::size_t k = 0; k < r.series.times.size(); ++k)
        EXPECT_NEAR(r.series.column("n")[k], 3.0 * std::exp(-kappa * r.series.times[k]), 1e-6);
    EXPECT_LT(r.norm_drift, 1e-8);
    EXPECT_LT(r.hermiticity, 1e-8);
    EXPECT_GT(r.min_eigenvalue, -1e-8);
}

TEST(EvolveLindblad, LinearHeatingFromVacuum) {
    const ModeLayout l = ModeLayout::single(8, std::string(kMotion));
    const double gamma = 1e-3;
    EvolutionSpec s;
    s.hamiltonian = TimeDependentHamiltonian::constant(QOperator::zero(l));
    s.t_final = 1.0;
    s.collapse_ops.push_back({lowering(l, kMotion).adjoint(), gamma, "b+"});
    s.observables.push_back({"n", number_op(l, kMotion)});
    const SimulationResult r = evolve_lindblad(s, QState::pure(l, fock_state(0, 8).vector()));
    // <n> = e^{gamma t} - 1 in the untruncated space
    EXPECT_NEAR(expectation(number_op(l, kMotion), r.final_state).real(), std::expm1(gamma), 1e-8);
    EXPECT_NEAR(expectation(number_op(l, kMotion), r.final_state).real(), gamma, 1e-6);
}

TEST(EvolveLindblad, ZeroRatesMatchPureEvolution) {
    const ModeLayout l = two_modes();
    EvolutionSpec s = beam_splitter_spec(1.1, 0.9, l);
    const QState psi = QState::pure(l, (fock2(l, 1, 0).vector() + kI * fock2(l, 0, 2).vector()) / std::sqrt(2.0));
    const QState pure = evolve_pure(s, psi).final_state;
    s.collapse_ops.push_back({lowering(l, kLc), 0.0, "a"});
    const QState mixed = evolve_lindblad(s, psi).final_state;
    EXPECT_LT(max_abs(mixed.density_ref() - pure.density()), 1e-8);
}

TEST(EvolveLindblad, MapIsTracePreservingAndPositive) {
    // Choi matrix of the channel built from lindblad_map on |i><j|.
    const ModeLayout l = ModeLayout::single(3, std::string(kLc));
    const TimeDependentHamiltonian h = TimeDependentHamiltonian::constant(QOperator(l, number(3).matrix() * 0.4));
    const std::vector<CollapseOp> ops{{lowering(l, kLc), 0.3, "a"}, {lowering(l, kLc).adjoint(), 0.1, "a+"}};
    Matrix choi = Matrix::Zero(9, 9);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) {
            Matrix e = Matrix::Zero(3, 3);
            e(i, j) = 1.0;
            const Matrix out = lindblad_map(h, ops, e, 0.0, 1.5, 1e-11);
            EXPECT_NEAR(std::abs(out.trace()), i == j ? 1.0 : 0.0, 1e-9);
            choi.block(i * 3, j * 3, 3, 3) = out;
        }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (choi + choi.adjoint()));
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9);
}

TEST(Propagator, TrivialCases) {
    const ModeLayout l = two_modes();
    const auto zero = propagator(TimeDependentHamiltonian::constant(QOperator::zero(l)), 1.0, 4);
    EXPECT_EQ(max_abs(zero.unitary.matrix() - Matrix::Identity(9, 9)), 0.0);
    const TimeDependentHamiltonian h = rwa_hamiltonian(0.9, 0.0, l);
    const Matrix ref = Matrix(-kI * 2.0 * h.at(0.0)).exp();
    EXPECT_LT(max_abs(propagator(h, 2.0, 1).unitary.matrix() - ref), 1e-12);
}

TEST(Propagator, AgreesWithAdaptiveIntegratorOnDrivenSystems) {
    std::mt19937 rng(11);
    const ModeLayout l = ModeLayout::single(4);
    for (int trial = 0; trial < 3; ++trial) {
        const Matrix h0 = random_hermitian(4, rng), h1 = random_hermitian(4, rng);
        TimeDependentHamiltonian h(l, Frame::rotating);
        h.add(QOperator(l, h0));
        h.add(QOperator(l, h1), [](double t) { return cplx(std::cos(3.0 * t)); }, "drive");
        const PropagatorResult oracle = propagator(h, 1.0, 8, 1e-10);
        const Matrix& u = oracle.unitary.matrix();
        EXPECT_LT(max_abs(u.adjoint() * u - Matrix::Identity(4, 4)), 1e-8);
        const Matrix v = evolve_propagator(h, 0.0, 1.0, 1e-12).matrix();
        const Vector psi = Vector::Unit(4, 0);
        const double f = std::norm((u * psi).dot(v * psi));
        EXPECT_GT(f, 1.0 - 1e-7) << trial;
        EXPECT_GT(gate_fidelity(u, v), 1.0 - 1e-9) << trial;
    }
}

TEST(Propagator, NonConvergenceIsNumericalFailure) {
    const ModeLayout l = ModeLayout::single(2);
    TimeDependentHamiltonian h(l, Frame::rotating);
    h.add(pauli(Axis::x), [](double t) { return cplx(std::cos(50.0 * t)); }, "fast");
    EXPECT_THROW(propagator(h, 10.0, 1, 1e-12, 8), NumericalFailure);
}

TEST(Fidelity, PureStateCases) {
    const ModeLayout l = ModeLayout::single(30);
    const QState vac = fock_state(0, 30);
    EXPECT_NEAR(fidelity(vac, vac), 1.0, 1e-15);
    EXPECT_EQ(fidelity(fock_state(1, 30), fock_state(2, 30)), 0.0);
    const cplx alpha(0.8, 0.5);
    const QState coh = coherent_state(alpha, 30).value;
    EXPECT_NEAR(fidelity(vac, coh), std::exp(-std::norm(alpha)), 1e-8);
    EXPECT_NEAR(fidelity(coh, vac), fidelity(vac, coh), 1e-15);
    EXPECT_THROW(fidelity(vac, fock_state(0, 4)), LayoutMismatch);
}

TEST(Fidelity, MixedStatesUhlmann) {
    const ModeLayout l = ModeLayout::single(2);
    Matrix r1(2, 2), r2(2, 2);
    r1 << 0.7, 0.0, 0.0, 0.3;
    r2 << 0.4, 0.0, 0.0, 0.6;
    const double ref = std::pow(std::sqrt(0.7 * 0.4) + std::sqrt(0.3 * 0.6), 2);
    EXPECT_NEAR(fidelity(QState::mixed(l, r1), QState::mixed(l, r2)), ref, 1e-12);
    EXPECT_NEAR(fidelity(QState::mixed(l, r1), QState::mixed(l, r1)), 1.0, 1e-12);
}

TEST(Concurrence, BellAndProduct) {
    Vector bell = Vector::Zero(4);
    bell(1) = bell(2) = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(concurrence(bell * bell.adjoint()), 1.0, 1e-12);
    Vector prod = Vector::Zero(4);
    prod(0) = 1.0;
    EXPECT_NEAR(concurrence(prod * prod.adjoint()), 0.0, 1e-12);
    EXPECT_NEAR(concurrence(Matrix::Identity(4, 4) / 4.0), 0.0, 1e-12);
}

TEST(RabiFit, CleanSignal) {
    const double g = 2.3;
    const auto t = linspace(0.0, 4.0 * kPi / g, 200);  // four periods of sin^2
    std::vector<double> y;
    for (double s : t) y.push_back(std::pow(std::sin(g * s), 2));
    const RabiFit f = extract_rabi_frequency(t, y);
    EXPECT_FALSE(f.low_confidence);
    EXPECT_NEAR(f.omega / (2.0 * g), 1.0, 1e-3);
}

TEST(RabiFit, ConstantSeriesFlagged) {
    const auto t = linspace(0.0, 10.0, 100);
    const RabiFit f = extract_rabi_frequency(t, std::vector<double>(100, 0.4));
    EXPECT_TRUE(f.low_confidence);
}

TEST(RabiFit, NoisySignal) {
    const double g = 1.1;
    const auto t = linspace(0.0, 5.0 * kPi / g, 400);
    std::mt19937 rng(5);
    std::normal_distribution<double> nd(0.0, 0.01);
    std::vector<double> y;
    for (double s : t) y.push_back(std::pow(std::sin(g * s), 2) * (1.0 + nd(rng)));
    const RabiFit f = extract_rabi_frequency(t, y);
    EXPECT_NEAR(f.omega / (2.0 * g), 1.0, 1e-2);
}
