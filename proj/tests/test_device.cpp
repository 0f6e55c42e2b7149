#include <gtest/gtest.h>

#include "ionlc/device.hpp"

using namespace ionlc;

TEST(Formulas, LcFrequencyAndImpedance) {
    EXPECT_NEAR(lc_frequency(440e-9, 46e-15), 1.0 / std::sqrt(440e-9 * 46e-15), 1e-3);
    EXPECT_NEAR(lc_frequency(440e-9, 46e-15) / kTwoPi, 1.1187e9, 1e6);
    EXPECT_DOUBLE_EQ(lc_frequency(1.0, 1.0), 1.0);
    EXPECT_NEAR(lc_frequency(1.0, 4.0), 0.5, 1e-15);
    EXPECT_NEAR(impedance(440e-9, 46e-15), 3092.8, 0.1);
    EXPECT_DOUBLE_EQ(impedance(1.0, 1.0), 1.0);
    EXPECT_THROW(lc_frequency(-1.0, 1.0), InvalidArgument);
    EXPECT_THROW(impedance(1.0, 0.0), InvalidArgument);
}

TEST(Formulas, ZeroPointCharge) {
    const double q0 = zero_point_charge(2.7e3);
    EXPECT_NEAR(q0, std::sqrt(constants::hbar / (2.0 * 2.7e3)), 1e-30);
    EXPECT_NEAR(q0 / constants::e, 0.872, 0.002);
}

TEST(Formulas, ZeroPointMotion) {
    EXPECT_NEAR(zero_point_motion(constants::mass_be9, kTwoPi * 1e6) * 1e9, 23.7, 0.05);
    const double z = zero_point_motion(2.0, 3.0);
    EXPECT_NEAR(zero_point_motion(8.0, 3.0), z / 2.0, 1e-15);
    EXPECT_NEAR(zero_point_motion(1.0, constants::hbar / 2.0), 1.0, 1e-15);
    EXPECT_THROW(zero_point_motion(0.0, 1.0), InvalidArgument);
}

TEST(Formulas, BaseCouplingDesignValues) {
    DeviceParams p = si_design();
    EXPECT_NEAR(p.g0 / kTwoPi / 1e3, 174.0, 1.0);
    DeviceParams q = p;
    q.zeta = 0.0;
    EXPECT_EQ(base_coupling(q), 0.0);
    q = p;
    q.h *= 2.0;
    EXPECT_NEAR(base_coupling(q), p.g0 / 2.0, 1e-9 * p.g0);
}

TEST(Formulas, EffectiveCoupling) {
    EXPECT_NEAR(effective_coupling(kTwoPi * 200e3, 0.3), kTwoPi * 40e3, 1e-6);
    EXPECT_EQ(effective_coupling(1.0, 0.0), 0.0);
    EXPECT_NEAR(effective_coupling(1.0, 0.2) * 2.0, effective_coupling(1.0, 0.4), 1e-16);
}

TEST(Formulas, ShieldCapacitance) {
    EXPECT_NEAR(shield_capacitance(650e-6, 5e-3, 1e-3) * 1e15, 22.5, 0.05);
    EXPECT_NEAR(shield_capacitance(1.0, std::exp(1.0), 1.0), kTwoPi * constants::eps0, 1e-24);
    EXPECT_NEAR(shield_capacitance(2.0, 3.0, 1.0), 2.0 * shield_capacitance(1.0, 3.0, 1.0), 1e-24);
    EXPECT_THROW(shield_capacitance(1.0, 1.0, 2.0), InvalidArgument);
}

TEST(Formulas, HeatingScaling) {
    EXPECT_NEAR(heating_rate_scaled(0.5, 150e-6, 25e-6), 648.0, 1e-9);
    EXPECT_DOUBLE_EQ(heating_rate_scaled(0.7, 1e-4, 1e-4), 0.7);
    EXPECT_NEAR(heating_rate_scaled(1.0, 2.0, 1.0), 16.0, 1e-12);
}

TEST(Formulas, BawBackaction) {
    const auto b = baw_backaction(1e-16, 100e-9, 100, kTwoPi * 1e9, kTwoPi * (1e9 - 1e6), kTwoPi * 100e3);
    EXPECT_NEAR(b.magnitude, 1e-4, 2e-6);
    EXPECT_LT(b.magnitude, 1e-3);
    EXPECT_EQ(baw_backaction(1e-16, 100e-9, 0, kTwoPi * 1e9, kTwoPi * 0.999e9, 1e5).magnitude, 0.0);
    const double m1 = baw_backaction(1e-16, 1e-7, 10, 1e9, 0.9e9, 1e5).magnitude;
    const double m3 = baw_backaction(1e-16, 1e-7, 30, 1e9, 0.9e9, 1e5).magnitude;
    EXPECT_NEAR(m3, 3.0 * m1, 1e-12 * m3);
}

TEST(Formulas, DecoherenceBudget) {
    EXPECT_NEAR(decoherence_budget(2e3, 5e2, 0.0, 10e-6), 0.025, 1e-15);
    EXPECT_EQ(decoherence_budget(0, 0, 0, 1.0), 0.0);
    EXPECT_NEAR(decoherence_budget(1, 2, 3, 2.0), 2.0 * decoherence_budget(1, 2, 3, 1.0), 1e-15);
}

TEST(Params, SiDesignValidAndConsistent) {
    const DeviceParams p = si_design();
    EXPECT_TRUE(p.validate().empty());
    EXPECT_LT(consistency_residual(p), 1e-12);
    EXPECT_NEAR(p.delta_parametric(), 0.0, 1e-6);
    EXPECT_GT(p.omega_lc / kTwoPi, 1.0e9);
    EXPECT_LT(p.omega_lc / kTwoPi, 1.15e9);
}

TEST(Params, ScaledHierarchyRatios) {
    const DeviceParams p = scaled_hierarchy(1e-2);
    EXPECT_NEAR(p.g0 / p.omega_i, 0.2, 1e-15);
    EXPECT_NEAR(p.omega_i / p.omega_lc, 1e-2, 1e-15);
    EXPECT_NEAR(p.delta_parametric(), 0.0, 1e-9);
}

TEST(Params, ValidateFlagsBadFields) {
    DeviceParams p = si_design();
    p.eta = 1.0;
    p.L = -1.0;
    EXPECT_EQ(p.validate().size(), 2u);
}

TEST(Geometry, ResolutionFloor) {
    EXPECT_THROW(geometric_factor({50e-6, 10e-6, 25e-6, 32}), InvalidArgument);
    EXPECT_THROW(geometric_factor({0.0, 10e-6, 25e-6, 64}), InvalidArgument);
}

TEST(Laplace, BoundaryValuesExactAndResidualSmall) {
    const StripProblem prob{50e-6, 10e-6, 2.5e-6};
    LaplaceReport rep;
    const StripGrid g = solve_strips(prob, 1e-9, &rep);
    EXPECT_LT(rep.residual, 1e-8);
    for (std::size_t j = 0; j < g.ny(); ++j) {
        EXPECT_EQ(g.at(0, j), 0.0);  // odd symmetry plane
        EXPECT_EQ(g.at(g.nx() - 1, j), 0.0);
    }
    for (std::size_t i = 0; i < g.nx(); ++i) EXPECT_EQ(g.at(i, g.ny() - 1), 0.0);
    const auto lo = static_cast<std::size_t>(std::lround(5e-6 / prob.spacing));
    const auto hi = static_cast<std::size_t>(std::lround(55e-6 / prob.spacing));
    for (std::size_t i = lo; i <= hi; ++i) EXPECT_EQ(g.at(i, 0), -0.5);
}

TEST(Laplace, TooFewSweepsIsNumericalFailure) {
    EXPECT_THROW(solve_strips({50e-6, 10e-6, 2.5e-6}, 1e-12, nullptr, 40), NumericalFailure);
}

// One fixture for the solver runs; each solve takes seconds.
class Zeta : public ::testing::Test {
protected:
    static double zeta(double R, double s, double h, int res = 64) { return geometric_factor({R, s, h, res}).zeta; }
};

TEST_F(Zeta, DesignGeometry) {
    const GeometricFactor z = geometric_factor({50e-6, 10e-6, 25e-6, 64});
    EXPECT_NEAR(z.zeta, 0.25, 0.05);
    EXPECT_LT(std::abs(z.zeta_fine - z.zeta_coarse), 0.01);
    EXPECT_LT(z.residual, 1e-8);
}

TEST_F(Zeta, GridConvergent) {
    EXPECT_LT(std::abs(zeta(50e-6, 10e-6, 25e-6, 64) - zeta(50e-6, 10e-6, 25e-6, 128)), 0.01);
}

TEST_F(Zeta, DoublingHeightWithinTwentyPercent) {
    const double a = zeta(50e-6, 10e-6, 25e-6), b = zeta(50e-6, 10e-6, 50e-6);
    EXPECT_LE(std::abs(b / a - 1.0), 0.20);
}

// With the outer strip edges fixed, narrowing the gap widens the islands and
// the field at the ion grows monotonically.
TEST_F(Zeta, IncreasesAsGapShrinksAtFixedPitch) {
    const double pitch = 55e-6;  // s/2 + R
    const double z10 = zeta(pitch - 5e-6, 10e-6, 25e-6);
    const double z5 = zeta(pitch - 2.5e-6, 5e-6, 25e-6);
    const double z25 = zeta(pitch - 1.25e-6, 2.5e-6, 25e-6);
    EXPECT_LT(z10, z5);
    EXPECT_LT(z5, z25);
}

// At fixed island size the outer edges move in as s shrinks, so zeta first
// rises and then saturates.
TEST_F(Zeta, SaturatesAsGapShrinksAtFixedIslandSize) {
    const double z10 = zeta(50e-6, 10e-6, 25e-6);
    const double z5 = zeta(50e-6, 5e-6, 25e-6);
    const double z25 = zeta(50e-6, 2.5e-6, 25e-6);
    EXPECT_LT(z10, z5);
    EXPECT_LT(std::abs(z25 / z5 - 1.0), 2e-3);
}
