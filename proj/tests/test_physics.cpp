#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "thermobox/physics.hpp"

using namespace thermobox;
using namespace thermobox::testing;

TEST(Fermi, SymmetricPointAndLimits) {
    EXPECT_DOUBLE_EQ(fermi(1.0, 0.0, 0.0), 0.5);
    EXPECT_EQ(fermi(1.0, 0.0, kInf), 0.0);
    EXPECT_EQ(fermi(1.0, 0.0, -kInf), 1.0);
    EXPECT_NEAR(fermi(1.0, 0.0, std::log(3.0)), 0.25, 1e-15);
}

TEST(Fermi, NoOverflowFarFromMu) {
    EXPECT_GE(fermi(1.0, 0.0, 700.0), 0.0);
    EXPECT_LT(fermi(1.0, 0.0, 700.0), 1e-300);
    EXPECT_EQ(fermi(1.0, 0.0, -700.0), 1.0);
    EXPECT_FALSE(std::isnan(fermi(1.0, 0.0, 1e308)));
}

TEST(Fermi, RejectsNonPositiveBeta) {
    EXPECT_THROW(fermi(0.0, 0.0, 1.0), DomainError);
    EXPECT_THROW(fermi(-1.0, 0.0, 1.0), DomainError);
    EXPECT_THROW(ReservoirPair(1.0, 0.0, 0.0, 0.0), DomainError);
    EXPECT_THROW(ReservoirPair::from_temperatures(-1.0, 1.0, 0.0, 0.0), DomainError);
}

TEST(Fermi, BoundedAndDecreasing) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> beta(0.1, 10.0), x(-50.0, 50.0);
    for (int i = 0; i < 200; ++i) {
        const double b = beta(rng), e1 = x(rng), e2 = e1 + std::abs(x(rng)) * 1e-2 + 1e-6;
        const double f1 = fermi(b, 0.3, e1), f2 = fermi(b, 0.3, e2);
        EXPECT_GE(f1, 0.0);
        EXPECT_LE(f1, 1.0);
        EXPECT_GE(f1, f2);
    }
}

TEST(Fermi, AntiderivativeMatchesFiniteDifference) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> beta(0.2, 5.0), mu(-2.0, 2.0), x(-6.0, 6.0);
    for (int i = 0; i < 100; ++i) {
        const double b = beta(rng), m = mu(rng), e = m + x(rng) / b;
        const double h = 1e-5 / b;
        const double fd =
            (fermi_antiderivative(b, m, e + h) - fermi_antiderivative(b, m, e - h)) / (2 * h);
        EXPECT_LE(rel_diff(fd, fermi(b, m, e)), 1e-6) << "beta=" << b << " eps=" << e;
    }
}

TEST(ReservoirPair, DerivedAffinitiesConsistent) {
    const auto r = fig2();
    EXPECT_DOUBLE_EQ(r.beta_l(), 1.0);
    EXPECT_DOUBLE_EQ(r.beta_r(), 5.0);
    EXPECT_EQ(r.delta_beta() + r.beta_r(), r.beta_l());
    EXPECT_DOUBLE_EQ(r.delta_beta_mu(), -3.5);
    EXPECT_DOUBLE_EQ(r.delta_mu(), -1.5);
}

TEST(DeltaF, IdenticalReservoirsVanish) {
    const ReservoirPair r(1.3, 1.3, 0.2, 0.2);
    for (double e : {-5.0, 0.0, 0.2, 3.0}) EXPECT_EQ(delta_f(r, e), 0.0);
}

TEST(DeltaF, VanishesAtEpsilonZero) {
    const auto r = fig2();
    ASSERT_TRUE(epsilon_zero(r).has_value());
    EXPECT_DOUBLE_EQ(*epsilon_zero(r), 0.875);
    EXPECT_NEAR(delta_f(r, 0.875), 0.0, 1e-15);
}

TEST(DeltaF, ClosedFormAtEqualTemperatures) {
    const auto r = bias_only();
    const double e = std::exp(1.0);
    EXPECT_NEAR(delta_f(r, 0.0), 1.0 / (e + 1.0) - e / (e + 1.0), 1e-15);
    EXPECT_NEAR(delta_f(r, 0.0), -0.46211715726000974, 1e-15);
}

TEST(DeltaF, SingleSignChangeAtEpsilonZero) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        const auto r = random_reservoirs(rng);
        const auto e0 = epsilon_zero(r);
        ASSERT_TRUE(e0.has_value());
        auto [lo, hi] = r.window(30.0);
        lo = std::min(lo, *e0 - 1.0);
        hi = std::max(hi, *e0 + 1.0);
        const int n = 4000;
        int changes = 0;
        double where = 0.0;
        // Δf/g keeps the sign of Δf where Δf itself underflows.
        double prev = inverse_g_ratio(r, lo);
        for (int k = 1; k <= n; ++k) {
            const double e = lo + (hi - lo) * k / n;
            const double v = inverse_g_ratio(r, e);
            if ((v > 0) != (prev > 0) && v != 0.0 && prev != 0.0) {
                ++changes;
                where = e;
            }
            if (v != 0.0) prev = v;
        }
        EXPECT_EQ(changes, 1);
        EXPECT_LE(std::abs(where - *e0), 2.0 * (hi - lo) / n);
    }
}

TEST(EpsilonZero, Examples) {
    EXPECT_DOUBLE_EQ(*epsilon_zero(fig2()), 0.875);
    EXPECT_DOUBLE_EQ(*epsilon_zero(thermal_only()), 0.0);
    EXPECT_FALSE(epsilon_zero(bias_only()).has_value());
}

TEST(GNoise, ValuesAndRange) {
    const ReservoirPair r(1.0, 1.0, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(g_noise(r, 0.0), 0.5);
    EXPECT_EQ(g_noise(fig2(), kInf), 0.0);
    EXPECT_EQ(g_noise(fig2(), -kInf), 0.0);
}

TEST(GNoise, AlgebraicIdentity) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> x(-8.0, 8.0);
    for (int i = 0; i < 200; ++i) {
        const auto r = random_reservoirs(rng);
        const double e = x(rng);
        const double fl = fermi(r.beta_l(), r.mu_l(), e), fr = fermi(r.beta_r(), r.mu_r(), e);
        const double df = delta_f(r, e);
        const double g = g_noise(r, e);
        EXPECT_NEAR(g, fl + fr - 2 * fl * fr - df * df, 1e-12);
        EXPECT_GT(g, 0.0);
        EXPECT_LE(g, 0.5);
    }
}

TEST(Integrals, DeltaFIntegralMatchesQuadratureFreeLimits) {
    // Full line at equal temperatures telescopes to μ_L - μ_R.
    EXPECT_NEAR(delta_f_integral(bias_only(), -kInf, kInf), -2.0, 1e-15);
    const auto r = fig2();
    EXPECT_NEAR(delta_f_integral(r, -kInf, kInf), r.delta_mu(), 1e-14);
    // Additivity across a split point.
    const double e0 = *epsilon_zero(r);
    EXPECT_NEAR(delta_f_integral(r, -kInf, e0) + delta_f_integral(r, e0, kInf), r.delta_mu(),
                1e-14);
}

TEST(Integrals, GIntegralFullLine) {
    // ∫ f(1-f) dε = 1/β per bath.
    const auto r = fig2();
    EXPECT_NEAR(g_integral(r, -kInf, kInf), 1.0 + 0.2, 1e-15);
    const ReservoirPair eq(1.0, 1.0, 0.0, 0.0);
    EXPECT_NEAR(g_integral(eq, -kInf, kInf), 2.0, 1e-15);
}

TEST(GRatio, SingularAtEpsilonZeroAndForIdentical) {
    EXPECT_THROW(g_ratio(fig2(), 0.875), SingularityError);
    EXPECT_THROW(g_ratio(ReservoirPair(1.0, 1.0, 0.0, 0.0), 0.3), SingularityError);
    EXPECT_THROW(g_ratio_limits(ReservoirPair(1.0, 1.0, 0.0, 0.0)), SingularityError);
}

TEST(GRatio, OppositeSignsAroundEpsilonZero) {
    const auto r = fig2();
    const double near_above = g_ratio(r, 0.875 + 1e-6), near_below = g_ratio(r, 0.875 - 1e-6);
    EXPECT_LT(near_above * near_below, 0.0);
    EXPECT_GT(std::abs(near_above), std::abs(g_ratio(r, 0.875 + 1e-3)));
    EXPECT_GT(std::abs(near_below), std::abs(g_ratio(r, 0.875 - 1e-3)));
}

TEST(GRatio, LimitsMatchNumericRatioFarInTails) {
    for (const auto& r : {fig2(), thermal_only(), mixed(), bias_only(),
                          ReservoirPair::from_temperatures(0.5, 1.5, 0.3, -0.2)}) {
        const auto [lim_lo, lim_hi] = g_ratio_limits(r);
        EXPECT_TRUE(std::isfinite(lim_lo));
        EXPECT_TRUE(std::isfinite(lim_hi));
        // β(ε-μ) = ±40 for the slower-decaying bath, plus a margin for the other.
        const double far = 40.0 / r.beta_min() + std::abs(r.mu_l()) + std::abs(r.mu_r());
        const double tol = r.delta_beta() == 0.0 ? 1e-12 : 1e-6;
        EXPECT_NEAR(g_ratio(r, far * 3), lim_hi, tol);
        EXPECT_NEAR(g_ratio(r, -far * 3), lim_lo, tol);
        // Direct (non log-domain) ratio where g is still representable.
        const double e = far;
        EXPECT_LE(rel_diff(g_ratio(r, e), g_noise(r, e) / delta_f(r, e)), 1e-10);
    }
}

TEST(GRatio, FiniteFarBeyondUnderflow) {
    const auto r = fig2();
    EXPECT_NEAR(g_ratio(r, 5000.0), 1.0, 1e-12);
    EXPECT_NEAR(g_ratio(r, -5000.0), -1.0, 1e-12);
    EXPECT_EQ(g_noise(r, 5000.0), 0.0);  // the direct form underflows here
}

TEST(RatioState, DerivativeMatchesFiniteDifference) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> x(-6.0, 6.0);
    for (int i = 0; i < 100; ++i) {
        const auto r = random_reservoirs(rng);
        const double e = x(rng), h = 1e-6;
        const double fd = (inverse_g_ratio(r, e + h) - inverse_g_ratio(r, e - h)) / (2 * h);
        const double an = ratio_state(r, e).dh(r);
        EXPECT_NEAR(an, fd, 1e-6 * std::max(1.0, std::abs(an)));
        EXPECT_NEAR(std::exp(ratio_state(r, e).log_g), g_noise(r, e), 1e-14);
    }
}
