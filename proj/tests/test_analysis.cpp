#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "thermobox/analysis.hpp"

using namespace thermobox;
using namespace thermobox::testing;

TEST(DoubleDot, PeaksApproachOneForWeakCoupling) {
    const auto T = dqd_transmission(0.01, 0.5, 0.2);
    double peak = 0.0;
    for (int k = 0; k <= 200000; ++k) {
        const double e = -1.0 + 2.0 * k / 200000.0;
        peak = std::max(peak, T(e));
        ASSERT_LE(T(e), 1.0);
    }
    EXPECT_GT(peak, 1.0 - 1e-6);
}

TEST(DoubleDot, QuarticTails) {
    const double w = -0.1;
    const auto T = dqd_transmission(0.3, 0.4, w);
    const double r = T(w + 1e3) / T(w + 2e3);
    EXPECT_NEAR(r, 16.0, 1e-3);
    EXPECT_EQ(T(kInf), 0.0);
}

TEST(DoubleDot, EvenAboutLevel) {
    const double w = 0.37;
    const auto T = dqd_transmission(0.2, 0.15, w);
    for (double x : {0.01, 0.1, 0.3, 1.0, 7.0})
        EXPECT_NEAR(T(w + x), T(w - x), 1e-14);
}

TEST(DoubleDot, ValuesInUnitInterval) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> g(1e-3, 1.0), o(-1.0, 1.0);
    for (int set = 0; set < 20; ++set) {
        const auto T = dqd_transmission(g(rng), o(rng), o(rng));
        for (int k = 0; k < 100000; ++k) {
            const double v = T(-5.0 + 10.0 * k / 99999.0);
            ASSERT_GT(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
    }
    EXPECT_THROW(dqd_transmission(0.0, 0.1, 0.0), DomainError);
}

class FanoSweep : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        rows_ = new std::vector<FanoRow>(fano_sweep(0.1, 0.05, 0.0, 1.0, default_dmu_grid()));
    }
    static void TearDownTestSuite() {
        delete rows_;
        rows_ = nullptr;
    }
    static std::vector<FanoRow>* rows_;
};
std::vector<FanoRow>* FanoSweep::rows_ = nullptr;

TEST_F(FanoSweep, LinearResponseLimitIsTwo) {
    const auto& first = rows_->front();
    EXPECT_DOUBLE_EQ(first.dmu, 0.05);
    EXPECT_NEAR(first.fano_model_scaled, 2.0, 1e-3);
    EXPECT_NEAR(first.fano_opt_scaled, 2.0, 1e-3);
}

TEST_F(FanoSweep, ModelMinimumInExpectedBand) {
    double mn = kInf;
    for (const auto& r : *rows_) mn = std::min(mn, r.fano_model_scaled);
    EXPECT_GT(mn, 1.76);
    EXPECT_LT(mn, 1.96);
}

TEST_F(FanoSweep, OptimalDecreasesAndDominates) {
    for (std::size_t i = 0; i < rows_->size(); ++i) {
        const auto& r = (*rows_)[i];
        EXPECT_LE(r.var_opt, r.var_model * (1.0 + 1e-9)) << r.dmu;
        if (i > 0) EXPECT_LT(r.fano_opt_scaled, (*rows_)[i - 1].fano_opt_scaled) << r.dmu;
    }
    EXPECT_LT(rows_->back().fano_opt_scaled, 1e-3);
}

TEST_F(FanoSweep, OptimumIsTheSymmetricBoxcar) {
    for (const auto& r : *rows_) {
        if (r.dmu > 20.0) continue;  // var_opt underflows the relative comparison
        const double a = symmetric_boxcar_width(1.0, r.dmu, r.I);
        const auto s = fano_opt_symmetric(1.0, r.dmu, a);
        EXPECT_NEAR(s.F_opt * r.dmu, r.fano_opt_scaled, 1e-6 * r.fano_opt_scaled) << r.dmu;
    }
}

TEST(FanoSweepInput, ZeroBiasRowsAreOmittedAndOrderKept) {
    const std::vector<double> grid{0.5, 0.0, 0.2};
    const auto rows = fano_sweep(0.1, 0.05, 0.0, 1.0, grid);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].dmu, 0.5);
    EXPECT_EQ(rows[1].dmu, 0.2);
    EXPECT_THROW(fano_sweep(0.1, 0.05, 0.0, -1.0, grid), DomainError);
}

TEST(SymmetricWidth, Limits) {
    EXPECT_EQ(symmetric_boxcar_width(1.0, 2.0, 0.0), 0.0);
    EXPECT_EQ(symmetric_boxcar_width(1.0, 2.0, -2.0), kInf);
    EXPECT_THROW(symmetric_boxcar_width(1.0, 2.0, -2.5), FeasibilityError);
    EXPECT_THROW(symmetric_boxcar_width(1.0, 2.0, 0.5), FeasibilityError);
}

TEST(SymmetricWidth, RoundTrip) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> b(0.3, 3.0), d(0.05, 10.0), u(0.01, 0.99);
    for (int k = 0; k < 30; ++k) {
        const double beta = b(rng), dmu = d(rng), I = -u(rng) * dmu;
        const double a = symmetric_boxcar_width(beta, dmu, I);
        const auto res = symmetric_bias(beta, dmu);
        EXPECT_NEAR(delta_f_integral(res, -0.5 * a, 0.5 * a), I, 1e-12 * dmu);
    }
}

TEST(SymmetricFanoTest, QuotientReadingMatchesDirectIntegrals) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> b(0.3, 3.0), d(0.05, 10.0), w(0.01, 8.0);
    for (int k = 0; k < 20; ++k) {
        const double beta = b(rng), dmu = d(rng), a = w(rng);
        const auto s = fano_opt_symmetric(beta, dmu, a);
        EXPECT_TRUE(s.matched) << beta << " " << dmu << " " << a << " " << s.mismatch;
        EXPECT_EQ(s.reading, "quotient");
        const auto bi = boxcar_integrals(symmetric_bias(beta, dmu), BoxcarSet({{-0.5 * a, 0.5 * a}}));
        EXPECT_NEAR(s.F_opt, bi.var / std::abs(bi.I), 1e-6 * s.F_opt);
    }
}

TEST(SymmetricFanoTest, NarrowBoxAtSmallBiasGivesTwo) {
    const double beta = 1.0, dmu = 1e-3;
    const auto s = fano_opt_symmetric(beta, dmu, 1e-3);
    EXPECT_NEAR(s.F_opt * beta * dmu, 2.0, 1e-4);
    const auto lim = fano_opt_symmetric(beta, dmu, 0.0);
    EXPECT_NEAR(lim.F_opt * beta * dmu, 2.0, 1e-4);
}

TEST(SymmetricFanoTest, WideBoxAtLargeBiasViolatesTur) {
    const double beta = 1.0, dmu = 20.0;
    const auto s = fano_opt_symmetric(beta, dmu, 15.0);
    EXPECT_TRUE(s.matched);
    EXPECT_LT(s.F_opt * beta * dmu, 2.0);
}

TEST(Theta, SymmetricBoxHasNoFirstMoment) {
    const LinearResponseFrame fr{1.3, 0.0, 0.0, 0.01};
    const auto t = theta_moments(fr, BoxcarSet({{-1.7, 1.7}}));
    EXPECT_NEAR(t.theta1, 0.0, 1e-14);
    EXPECT_GT(t.theta0, 0.0);
}

TEST(Theta, FullLineZerothMoment) {
    const LinearResponseFrame fr{1.0, 0.0, 0.0, 0.0};
    const auto t = theta_moments(fr, BoxcarSet::full_line());
    EXPECT_NEAR(t.theta0, 1.0, 1e-14);
    EXPECT_NEAR(t.theta1, 0.0, 1e-12);
    EXPECT_NEAR(t.theta2, M_PI * M_PI / 3.0, 1e-10);  // ∫x² f(1-f) = π²/3
}

TEST(Theta, JensenOnRandomBoxcars) {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> e(-6.0, 6.0), b(0.3, 3.0), m(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const LinearResponseFrame fr{b(rng), m(rng), 0.01, 0.01};
        std::vector<double> pts{e(rng), e(rng), e(rng), e(rng)};
        std::sort(pts.begin(), pts.end());
        const BoxcarSet box({{pts[0], pts[1]}, {pts[2], pts[3]}});
        const auto t = theta_moments(fr, box);
        EXPECT_GE(t.theta0 * t.theta2 - t.theta1 * t.theta1, -1e-14);
    }
}

TEST(LinearTur, EqualTemperaturesGiveExactlyTwo) {
    const LinearResponseFrame fr{1.0, 0.2, 0.0, 0.01};
    const auto b = linear_tur_bound(fr, BoxcarSet({{-0.5, 1.5}}));
    EXPECT_DOUBLE_EQ(b.ratio, 2.0);
    EXPECT_GT(b.sigma, 0.0);
}

TEST(LinearTur, ThermalGradientExceedsTwo) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> e(-4.0, 4.0), d(-0.05, 0.05);
    for (int k = 0; k < 30; ++k) {
        const LinearResponseFrame fr{1.0, 0.0, d(rng), d(rng)};
        double a = e(rng), c = e(rng);
        if (a > c) std::swap(a, c);
        const auto b = linear_tur_bound(fr, BoxcarSet({{a, c + 0.1}}));
        EXPECT_GT(b.ratio, 2.0);
        EXPECT_GE(b.sigma, 0.0);
        EXPECT_NEAR(b.var, 2.0 * b.theta.theta0, 0.0);
    }
}

TEST(LinearTur, MatchesNonlinearTransport) {
    const LinearResponseFrame fr{1.0, 0.0, 1e-2, 1e-2};
    const BoxcarSet box({{-1.0, 2.0}});
    const auto lin = linear_tur_bound(fr, box);
    const auto s = summary(Transmission(box), fr.reservoirs());
    ASSERT_TRUE(s.tur_ratio.has_value());
    EXPECT_NEAR(*s.tur_ratio, lin.ratio, 1e-2 * lin.ratio);
    EXPECT_NEAR(s.I, lin.I, 1e-2 * std::abs(lin.I));
    EXPECT_NEAR(s.sigma, lin.sigma, 2e-2 * lin.sigma);
}

TEST(LinearTur, Errors) {
    const LinearResponseFrame still{1.0, 0.0, 0.0, 0.0};
    EXPECT_THROW(linear_tur_bound(still, BoxcarSet({{-1.0, 1.0}})), SingularityError);
    const LinearResponseFrame bad{1.0, 0.0, 2.5, 0.0};
    EXPECT_THROW(bad.reservoirs(), DomainError);
    EXPECT_THROW(theta_moments(bad, BoxcarSet({{0.0, 1.0}})), DomainError);
}
