#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "nmsim/errors.hpp"
#include "nmsim/rates.hpp"

using namespace nmsim;

namespace {

// Composite Simpson rule; deliberately independent of the library's quadrature.
double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double sum = f(a) + f(b);
    for (int i = 1; i < panels; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

}  // namespace

TEST(Rates, OhmicZeroTempVanishesAtOrigin) {
    for (double s : {0.5, 1.0, 2.47, 3.0}) EXPECT_EQ(gamma_ohmic_t0(0.0, s), 0.0);
}

TEST(Rates, OhmicS1ReducesToRational) {
    for (double t : {0.1, 0.7, 1.0, 3.0, 12.5, 80.0}) {
        EXPECT_NEAR(gamma_ohmic_t0(t, 1.0), t / (1.0 + t * t), 1e-14) << t;
    }
}

TEST(Rates, OhmicS3NegativeBeyondSqrt3) {
    EXPECT_GT(gamma_ohmic_t0(std::sqrt(3.0) - 1e-3, 3.0), 0.0);
    for (double t = std::sqrt(3.0) + 1e-3; t < 60.0; t += 0.37) {
        EXPECT_LT(gamma_ohmic_t0(t, 3.0), 0.0) << t;
    }
}

TEST(Rates, CutoffScaling) {
    // gamma(t; s, wc) = wc * gamma(wc t; s, 1)
    EXPECT_NEAR(gamma_ohmic_t0(1.3, 2.47, 2.0), 2.0 * gamma_ohmic_t0(2.6, 2.47, 1.0), 1e-14);
}

TEST(Rates, FiniteTempZeroThetaMatchesClosedForm) {
    for (double s : {1.0, 2.47, 3.0}) {
        for (double t : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0}) {
            EXPECT_NEAR(gamma_ohmic_finite_t(t, s, 1.0, 0.0), gamma_ohmic_t0(t, s), 1e-6)
                << "s=" << s << " t=" << t;
        }
    }
    const double v = gamma_ohmic_finite_t(3.0, 3.0, 1.0, 0.0);
    EXPECT_LT(v, 0.0);
    EXPECT_NEAR(v, gamma_ohmic_t0(3.0, 3.0), 1e-6);
}

TEST(Rates, FiniteTempVanishesAtOrigin) {
    for (double theta : {0.0, 0.1, 1.0}) EXPECT_EQ(gamma_ohmic_finite_t(0.0, 2.0, 1.0, theta), 0.0);
}

TEST(Rates, FiniteTempAgainstSimpsonSpectralIntegral) {
    // Oracle: the spectral integral on a truncated frequency range by Simpson.
    const double s = 2.0, theta = 0.5, t = 1.5;
    auto integrand = [&](double w) {
        if (w == 0.0) return 0.0;
        const double coth = 1.0 / std::tanh(w / (2.0 * theta));
        return std::pow(w, s) * std::exp(-w) * coth * std::sin(w * t) / w;
    };
    const double expected = simpson(integrand, 0.0, 60.0, 200000);
    EXPECT_NEAR(gamma_ohmic_finite_t(t, s, 1.0, theta), expected, 1e-8);
}

TEST(Rates, IntegratedClosedForms) {
    const DecayRateModel ohm1(OhmicZeroTemp{1.0});
    const DecayRateModel sine(Sinusoidal{1.0});
    const DecayRateModel constant(Constant{0.3});
    for (double t : {0.0, 0.5, 2.0, 7.0, 30.0}) {
        EXPECT_NEAR(integrated_rate(ohm1, t), 0.5 * std::log1p(t * t), 1e-12);
        EXPECT_NEAR(integrated_rate(sine, t), 1.0 - std::cos(t), 1e-14);
        EXPECT_NEAR(integrated_rate(constant, t), 0.3 * t, 1e-14);
    }
}

TEST(Rates, IntegratedOhmicMatchesSimpson) {
    for (double s : {0.5, 1.0, 2.0, 2.47, 3.0}) {
        const DecayRateModel m(OhmicZeroTemp{s, 1.0});
        for (double t : {0.3, 2.0, 10.0, 30.0}) {
            const double expected =
                simpson([&](double u) { return gamma_ohmic_t0(u, s); }, 0.0, t, 20000);
            EXPECT_NEAR(integrated_rate(m, t), expected, 1e-9) << "s=" << s << " t=" << t;
        }
    }
}

TEST(Rates, IntegratedFiniteTempMatchesSimpson) {
    const DecayRateModel m(OhmicFiniteTemp{2.0, 1.0, 0.3});
    const double expected =
        simpson([](double u) { return gamma_ohmic_finite_t(u, 2.0, 1.0, 0.3); }, 0.0, 4.0, 400);
    EXPECT_NEAR(integrated_rate(m, 4.0), expected, 1e-7);
}

TEST(Rates, AsymptoticIntegratedRate) {
    // Substituting t = tan(x): Gamma_inf = Gamma(s) int_0^{pi/2} cos^{s-2}(x) sin(s x) dx.
    for (double s : {2.47, 3.0, 4.0}) {
        const double expected =
            std::tgamma(s) * simpson([&](double x) { return std::pow(std::cos(x), s - 2.0) *
                                                            std::sin(s * x); },
                                     0.0, std::numbers::pi / 2.0, 2000000);
        EXPECT_NEAR(asymptotic_integrated_rate(DecayRateModel(OhmicZeroTemp{s})), expected, 1e-7)
            << s;
    }
    EXPECT_TRUE(std::isinf(asymptotic_integrated_rate(DecayRateModel(OhmicZeroTemp{1.0}))));
    EXPECT_TRUE(std::isinf(asymptotic_integrated_rate(DecayRateModel(Constant{0.2}))));
    EXPECT_EQ(asymptotic_integrated_rate(DecayRateModel(Constant{0.0})), 0.0);
    EXPECT_THROW(asymptotic_integrated_rate(DecayRateModel(Sinusoidal{1.0})), InvalidArgument);
}

TEST(Rates, DephasingFactor) {
    EXPECT_EQ(dephasing_factor(DecayRateModel(Constant{0.5}), 0.0), 0.0);
    EXPECT_NEAR(dephasing_factor(DecayRateModel(Constant{0.5}), 1.0), 1.0 - std::exp(-1.0), 1e-15);
    const DecayRateModel m(OhmicZeroTemp{2.47});
    const double limit = 1.0 - std::exp(-2.0 * asymptotic_integrated_rate(m));
    EXPECT_LT(limit, 1.0);
    EXPECT_NEAR(dephasing_factor(m, 1e4), limit, 1e-5);
    EXPECT_LT(dephasing_factor(m, 100.0), 1.0 - 1e-3);
}

TEST(Rates, ParameterValidation) {
    EXPECT_THROW(DecayRateModel(OhmicZeroTemp{0.0}), InvalidArgument);
    EXPECT_THROW(DecayRateModel(OhmicZeroTemp{1.0, -1.0}), InvalidArgument);
    EXPECT_THROW(DecayRateModel(OhmicFiniteTemp{1.0, 1.0, -0.1}), InvalidArgument);
    EXPECT_THROW(DecayRateModel(Constant{-0.1}), InvalidArgument);
    EXPECT_NO_THROW(DecayRateModel(Sinusoidal{-2.0}));
    EXPECT_TRUE(DecayRateModel::zero().is_identically_zero());
    EXPECT_FALSE(DecayRateModel(Constant{0.1}).is_identically_zero());
    EXPECT_EQ(DecayRateModel(OhmicZeroTemp{2.0}).kind(), "ohmic_t0");
}

TEST(Rates, DivisibilityVerdicts) {
    const auto grid = uniform_grid(20.0, 0.01);
    const DecayRateModel c01(Constant{0.1}), c15(Constant{1.5}), sine(Sinusoidal{1.0});

    EXPECT_EQ(classify_divisibility(c01, c01, c01, grid).verdict, Divisibility::CPDivisible);

    const auto sine_z = classify_divisibility(c01, c01, sine, grid);
    EXPECT_EQ(sine_z.verdict, Divisibility::NonPDivisible);
    ASSERT_FALSE(sine_z.violation_windows.empty());
    // 0.1 + sin t < 0 for t in (pi + asin 0.1, 2 pi - asin 0.1).
    const double lo = std::numbers::pi + std::asin(0.1), hi = 2 * std::numbers::pi - std::asin(0.1);
    EXPECT_GT(sine_z.violation_windows.front().start, std::numbers::pi);
    EXPECT_LT(sine_z.violation_windows.front().end, 2 * std::numbers::pi);
    EXPECT_NEAR(sine_z.violation_windows.front().start, lo, 0.011);
    EXPECT_NEAR(sine_z.violation_windows.front().end, hi, 0.011);
    EXPECT_NEAR(sine_z.min_margin, -0.9, 1e-3);

    const auto ponly = classify_divisibility(c15, c15, sine, grid);
    EXPECT_EQ(ponly.verdict, Divisibility::PDivisibleOnly);
    EXPECT_NEAR(ponly.min_margin, -1.0, 1e-3);

    EXPECT_THROW(classify_divisibility(c01, c01, c01, std::vector<double>{}), InvalidArgument);
}

TEST(Rates, UniformGrid) {
    const auto g = uniform_grid(1.0, 0.25);
    ASSERT_EQ(g.size(), 5u);
    EXPECT_EQ(g.back(), 1.0);
    EXPECT_THROW(uniform_grid(1.0, 0.3), InvalidArgument);
}
