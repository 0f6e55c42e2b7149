#include <gtest/gtest.h>

#include "ionlc/protocols.hpp"

using namespace ionlc;

namespace {

Vector lc_motion_fock(const ModeLayout& l, std::size_t n, std::size_t m) {
    return basis_vector(l.total_dim(), index_of(l, {{"lc", n}, {"motion", m}}));
}

}  // namespace

TEST(Swap, DurationFormula) {
    EXPECT_NEAR(swap_time(kTwoPi * 40e3) * 1e6, 6.25, 1e-12);
    EXPECT_THROW(swap_time(0.0), InvalidArgument);
}

TEST(Swap, MapsOneZeroToMinusIZeroOne) {
    const DeviceParams p = scaled_hierarchy();
    const ModeLayout l = protocol_layout(4, 4, false);
    const Matrix s = schedule_propagator(swap_schedule(p.g(), l)).matrix();
    const Vector out = s * lc_motion_fock(l, 1, 0);
    EXPECT_GT(std::norm(out.dot(-kI * lc_motion_fock(l, 0, 1))), 1.0 - 1e-8);
    // twice: -|1,0>
    const Vector back = s * out;
    EXPECT_LT((back + lc_motion_fock(l, 1, 0)).norm(), 1e-8);
}

TEST(Swap, RunSwapTransfer) {
    const ProtocolResult r = run_swap(scaled_hierarchy().g());
    EXPECT_GT(r.scalar("transfer_probability"), 1.0 - 1e-6);
    EXPECT_LT(r.truncation_delta, 1e-8);
    EXPECT_TRUE(r.checks.at("transfer > 1 - 1e-6"));
    const auto& pm = r.series.column("P_motion");
    EXPECT_NEAR(pm.front(), 0.0, 1e-12);
    EXPECT_NEAR(pm.back(), 1.0, 1e-6);
}

TEST(Schedule, ManySegmentsStayUnitary) {
    const DeviceParams p = scaled_hierarchy();
    const ModeLayout l = protocol_layout(3, 4);
    PulseSchedule chain(l);
    for (int k = 0; k < 12; ++k) chain.append(swap_schedule(p.g(), l));
    chain.append(jc_cnot_schedule(p.Omega0, p.g(), l));
    chain.gate(QOperator(l, spin_pi_pulse_z(l)), "Z");
    EXPECT_EQ(chain.segments().size(), 16u);
    EXPECT_LT(schedule_propagator(chain).unitarity_residual(), 1e-7);
}

TEST(Schedule, RejectsNonUnitaryGateAndForeignLayouts) {
    const ModeLayout l = protocol_layout(3, 3);
    PulseSchedule s(l);
    EXPECT_THROW(s.gate(QOperator::identity(l) * 2.0, "x2"), InvalidArgument);
    EXPECT_THROW(s.gate(QOperator::identity(protocol_layout(2, 3))), LayoutMismatch);
    EXPECT_THROW(s.evolve(rwa_hamiltonian(1.0, 0.0, l), -1.0), InvalidArgument);
}

TEST(ConjugateBySwaps, IdentityGivesSwapSquared) {
    const DeviceParams p = scaled_hierarchy();
    const ModeLayout l = protocol_layout(4, 4, false);
    const QOperator s = schedule_propagator(swap_schedule(p.g(), l));
    EXPECT_LT(max_abs(conjugate_by_swaps(QOperator::identity(l), p.g()).matrix() - (s * s).matrix()), 1e-12);
    EXPECT_THROW(conjugate_by_swaps(annihilation(3), p.g()), LayoutMismatch);
}

TEST(ConjugateBySwaps, MotionDisplacementMovesToLc) {
    const DeviceParams p = scaled_hierarchy();
    const std::size_t d = 16;
    const ModeLayout l = protocol_layout(d, d, false);
    const cplx beta(0.7, -0.3);
    const QOperator db = embed(displacement(beta, d).value, l, kMotion);
    const Vector out = conjugate_by_swaps(db, p.g()).matrix() * lc_motion_fock(l, 0, 0);
    const QState psi = QState::pure(l, out);
    EXPECT_NEAR(std::abs(expectation(lowering(l, kLc), psi)), std::abs(beta), 1e-6);
    EXPECT_LT(std::abs(expectation(lowering(l, kMotion), psi)), 1e-6);
}

TEST(ConjugateBySwaps, SpinOnlyOperatorUnchanged) {
    const DeviceParams p = scaled_hierarchy();
    const ModeLayout l = protocol_layout(3, 3);
    const QOperator sx = pauli_op(Axis::x, l);
    const QOperator c = conjugate_by_swaps(sx, p.g());
    // swap^2 is diagonal in excitation sectors, so sx S^2 is all that is left
    const QOperator s = schedule_propagator(swap_schedule(p.g(), l));
    EXPECT_LT(max_abs(c.matrix() - (sx * s * s).matrix()), 1e-9);
    EXPECT_LT(max_abs(commutator(c, sx).matrix()), 1e-9);
}

TEST(Jc, VacuumDarkFlipAndEntangling) {
    const DeviceParams p = scaled_hierarchy();
    const ProtocolResult r = run_jc_cnot(p.Omega0, p.g(), 3, 3);
    EXPECT_NEAR(r.scalar("P_0down_unchanged"), 1.0, 1e-6);
    EXPECT_NEAR(r.scalar("P_1down_spin_flip"), r.scalar("P_1down_spin_flip_expected"), 1e-6);
    EXPECT_NEAR(r.scalar("P_1down_spin_flip_expected"), 0.5, 1e-12);
    EXPECT_GT(r.scalar("concurrence"), 0.1);
    EXPECT_LT(r.scalar("unitarity_residual"), 1e-7);
}

TEST(SpinDependentDisplacement, ZeroIsIdentity) {
    const auto d = spin_dependent_displacement(0.0, 8);
    EXPECT_LT(max_abs(d.value.matrix() - Matrix::Identity(16, 16)), 1e-15);
}

TEST(SpinDependentDisplacement, XEigenstateGetsCoherentState) {
    const std::size_t d = 32;
    const cplx alpha(1.2, 0.9);  // |alpha| <= 2
    const auto disp = spin_dependent_displacement(alpha, d);
    EXPECT_TRUE(disp.warnings.empty());
    const Vector plus = Vector::Constant(2, 1.0 / std::sqrt(2.0));
    const Vector in = kron(plus, fock_state(0, d).vector());
    const Vector ref = kron(plus, coherent_state(alpha, d).value.vector());
    EXPECT_GT(std::norm(ref.dot(disp.value.matrix() * in)), 1.0 - 1e-6);
}

TEST(SpinDependentDisplacement, UpStateGivesZeroMeanField) {
    const std::size_t d = 32;
    const auto disp = spin_dependent_displacement(cplx(1.5, 0.0), d);
    const ModeLayout l = disp.value.layout();
    const QState out = QState::pure(l, disp.value.matrix() * kron(Vector(Vector::Unit(2, 0)), fock_state(0, d).vector()));
    EXPECT_LT(std::abs(expectation(lowering(l, kLc), out)), 1e-10);
}

TEST(Ms, VanishingCrossTermGivesZeroAlpha) {
    DeviceParams p = scaled_hierarchy();
    p.eta = 0.0;
    EXPECT_LT(std::abs(ms_sequence(p, kTwoPi * 5.0, 1, 4, 4).alpha_fit), 1e-8);
    p = scaled_hierarchy();
    p.Omega0 = 0.0;
    EXPECT_LT(std::abs(ms_sequence(p, kTwoPi * 5.0, 1, 4, 4).alpha_fit), 1e-8);
}

TEST(Ms, AlphaClosureAndEcho) {
    const DeviceParams p = scaled_hierarchy();
    const double delta = kTwoPi * 5.0;
    const MsResult r = ms_sequence(p, delta, 1, 6, 6);
    EXPECT_NEAR(r.alpha_predicted, 4.0 * kPi * p.g0 * p.Omega0 * p.eta / (3.0 * delta * delta), 1e-15);
    EXPECT_NEAR(std::abs(r.alpha_fit) / r.alpha_predicted, 1.0, 0.05);
    EXPECT_TRUE(r.closed);
    EXPECT_GE(r.purity_final, 0.999);
    EXPECT_GE(r.echo_suppression, 100.0);
    EXPECT_NEAR(r.gate_time, 2.0 * ms_gate_time(delta, 1), 1e-15);
    // delta = omega_i / 2 sits outside the comfortable regime and says so
    EXPECT_FALSE(r.warnings.empty());
}

TEST(Heating, ZeroRateLeavesGateIntact) {
    const DeviceParams p = scaled_hierarchy();
    HeatingScanOptions o;
    const HeatingPoint pt = ms_heating_point(p, kTwoPi * 5.0, 1, 0.0, o);
    EXPECT_LT(pt.infidelity, 1e-3);
    EXPECT_LT(pt.trace_drift, 1e-8);
}

TEST(Heating, LinearInRate) {
    const DeviceParams p = scaled_hierarchy();
    HeatingScanOptions o;
    const double f1 = ms_heating_point(p, kTwoPi * 5.0, 1, 0.05, o).infidelity;
    const double f2 = ms_heating_point(p, kTwoPi * 5.0, 1, 0.10, o).infidelity;
    const double f0 = ms_heating_point(p, kTwoPi * 5.0, 1, 0.0, o).infidelity;
    EXPECT_NEAR((f2 - f0) / (f1 - f0), 2.0, 0.2);
}

TEST(Heating, LoglogSlopeOfPowerLaw) {
    EXPECT_NEAR(detail::loglog_slope({1, 2, 4}, {1, 0.25, 0.0625}), -2.0, 1e-12);
}

TEST(TwoIon, ZeroIsIdentity) {
    const TwoIonGate g = two_ion_phase_gate(0.0, 8);
    EXPECT_LT(max_abs(g.unitary.matrix() - Matrix::Identity(32, 32)), 1e-15);
}

TEST(TwoIon, PhasePiReturnAndCommutator) {
    const TwoIonGate g = two_ion_phase_gate(std::sqrt(kPi / 8.0), 32);
    EXPECT_LT(phase_distance(g.phase, kPi), 1e-3);
    EXPECT_NEAR(g.expected_phase, kPi, 1e-12);
    EXPECT_GT(g.lc_return_fidelity, 1.0 - 1e-6);
    EXPECT_LT(g.zz_commutator, 1e-8);
    EXPECT_TRUE(g.warnings.empty());
}

TEST(Cat, VacuumHasNoFringe) {
    const CatMetrology m = cat_metrology(0.0, 64);
    EXPECT_TRUE(std::isnan(m.first_zero));
    EXPECT_EQ(m.sensitivity, 0.5);
}

TEST(Cat, DoublingAlphaHalvesPeriod) {
    const CatMetrology m2 = cat_metrology(2.0, 64), m4 = cat_metrology(4.0, 64);
    ASSERT_FALSE(std::isnan(m2.period));
    ASSERT_FALSE(std::isnan(m4.period));
    EXPECT_NEAR(m4.period / m2.period, 0.5, 0.025);
    // parity of an even cat starts at +1
    EXPECT_NEAR(m2.parity.front(), 1.0, 1e-10);
}

TEST(Cat, VoltageExtrapolationOrderOfMagnitude) {
    const CatVoltageEstimate v = cat_voltage_extrapolation(si_design(), 100.0);
    EXPECT_GT(v.v_rms, 0.03e-3);
    EXPECT_LT(v.v_rms, 0.3e-3);
    EXPECT_NEAR(v.v_resolution, v.v_zero_point / 20.0, 1e-15);
}

TEST(Budget, ZeroRates) {
    DeviceParams p = si_design();
    p.kappa_lc = 0.0;
    p.gamma_heat = 0.0;
    BudgetOptions o;
    o.convergence = false;
    o.workers = 4;
    const ProtocolResult r = full_budget_run(p, o);
    EXPECT_LT(r.scalar("process_infidelity"), 1e-3);
}

TEST(Budget, ApproximatelyLinearInTotalRate) {
    const DeviceParams base = si_design();
    BudgetOptions o;
    o.convergence = false;
    o.workers = 4;
    std::vector<double> f;
    for (double s : {0.5, 1.0, 1.5}) {
        DeviceParams p = base;
        p.kappa_lc *= s;
        p.gamma_heat *= s;
        f.push_back(full_budget_run(p, o).scalar("process_infidelity"));
    }
    EXPECT_NEAR(f[0] / f[1], 0.5, 0.05);
    EXPECT_NEAR(f[2] / f[1], 1.5, 0.075);
}
