#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mmdhd/stat.hpp"
#include "mmdhd/theory.hpp"

using namespace mmdhd;
using namespace mmdhd::theory;

namespace {

// Mean of h and Var h over `rows` Monte Carlo rows of a Gaussian mean shift.
std::pair<double, double> mc_h_moments(const Vector& delta, double gamma, std::size_t rows, Seed seed) {
    const auto s = sample_pair(ModelSpec::with_delta(delta, CoordinateLaw::normal()), rows, seed);
    const auto lin = mmd2_linear(KernelSpec::gaussian(gamma), s.x, s.y);
    const double v = empirical_variance_v(lin.h) / 2.0;
    return {lin.mmd2_l, v};
}

double mixture_pdf(double x) {
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    return 0.8 * c * std::exp(-0.5 * (x + 0.5) * (x + 0.5)) + 0.2 * c * std::exp(-0.5 * (x - 2.0) * (x - 2.0));
}

}  // namespace

TEST(PopulationMmd2, Examples) {
    auto in = TheoryInputs::with_delta_norm(10, 4, 1.0, 0.0, std::sqrt(200.0), 0.05);
    EXPECT_DOUBLE_EQ(population_mmd2_approx(in), 0.0);
    in = TheoryInputs::with_delta_norm(10, 4, 1.0, 2.0, std::sqrt(200.0), 0.05);
    EXPECT_NEAR(population_mmd2_approx(in), 0.04, 1e-15);
}

TEST(PopulationMmd2, ApproximationErrorAtLargeBandwidth) {
    // the ratio exact / approx tends to 1 at rate d sigma^2 / gamma^2
    const std::vector<double> delta(100, 0.2);
    for (double g2 : {1e5, 1e6, 1e7}) {
        auto in = TheoryInputs::with_delta_norm(10, 100, 1.0, 2.0, std::sqrt(g2), 0.05);
        const double exact = gaussian_exact_mmd2(1.0, delta, std::sqrt(g2));
        EXPECT_NEAR(exact / population_mmd2_approx(in), 1.0, 4.0 * 104.0 / g2) << g2;
    }
}

TEST(GaussianExactMmd2, NullIsZero) {
    const std::vector<double> delta(50, 0.0);
    EXPECT_EQ(gaussian_exact_mmd2(1.0, delta, 3.0), 0.0);
}

TEST(GaussianExactMmd2, MatchesQuadratureInOneDimension) {
    // MMD^2 = 2 E k(v, v') - 2 E k(delta + a, v) for one coordinate
    for (double delta : {0.3, 1.0, 2.5}) {
        const double g = 1.7, s2 = 0.8;
        const auto law = CoordinateLaw::normal(std::sqrt(s2));
        const double kpp = quadrature_oracle_double(law, law, 0.0, g, Integrand::kernel).value;
        const double kpq = quadrature_oracle_double(law, law, delta, g, Integrand::kernel).value;
        const std::vector<double> dv{delta};
        EXPECT_NEAR(gaussian_exact_mmd2(s2, dv, g), 2.0 * kpp - 2.0 * kpq, 1e-9);
    }
}

TEST(GaussianExactMmd2, MatchesMonteCarlo) {
    Vector delta(3);
    delta << 0.5, -0.3, 0.8;
    const std::vector<double> dv(delta.data(), delta.data() + 3);
    const double g = 1.5;
    const std::size_t rows = 200000;
    const auto [mean_h, var_h] = mc_h_moments(delta, g, rows, 31);
    EXPECT_NEAR(mean_h, gaussian_exact_mmd2(1.0, dv, g), 4.0 * std::sqrt(var_h / (rows / 2)));
}

TEST(GaussianExactVariance, MatchesMonteCarlo) {
    for (const double shift : {0.0, 0.7}) {
        Vector delta = Vector::Constant(2, shift);
        const std::vector<double> dv(2, shift);
        const double g = 1.2;
        const auto [mean_h, var_h] = mc_h_moments(delta, g, 400000, 32);
        (void)mean_h;
        // Var of a sample variance of bounded h (|h| < 2) over 2e5 values is tiny
        EXPECT_NEAR(var_h, gaussian_exact_variance(1.0, dv, g), 0.03 * var_h) << shift;
    }
}

TEST(VarianceV, Examples) {
    auto in = TheoryInputs::with_delta_norm(10, 100, 1.0, 0.0, 10.0, 0.05);
    EXPECT_NEAR(variance_V_approx(in), 0.16, 1e-15);
    in = TheoryInputs::with_delta_norm(10, 100, 1e-12, 1.0, 10.0, 0.05);
    EXPECT_NEAR(variance_V_approx(in), 0.0, 1e-14);
}

TEST(VarianceV, AgreesWithExactAtLargeBandwidth) {
    const std::vector<double> delta(100, 0.2);
    for (double g2 : {1e4, 1e5, 1e6}) {
        auto in = TheoryInputs::with_delta_norm(10, 100, 1.0, 2.0, std::sqrt(g2), 0.05);
        const double exact = gaussian_exact_variance(1.0, delta, std::sqrt(g2));
        EXPECT_NEAR(variance_V_approx(in) / exact, 1.0, 16.0 * 100.0 / g2) << g2;
    }
}

TEST(PowerPrediction, NullRecoversSize) {
    for (double alpha : {0.01, 0.05, 0.1}) {
        auto in = TheoryInputs::with_delta_norm(100, 30, 1.0, 0.0, 5.0, alpha);
        EXPECT_NEAR(power_prediction(in).beta, alpha, 1e-12);
    }
}

TEST(PowerPrediction, WorkedExample) {
    auto in = TheoryInputs::with_delta_norm(50, 100, 1.0, 2.5, 100.0, 0.05);
    const auto p = power_prediction(in);
    const double arg = std::sqrt(50.0) * 6.25 / std::sqrt(850.0) - 1.6448536269514722;
    EXPECT_NEAR(arg, -0.1291, 1e-4);
    EXPECT_NEAR(p.beta, normal_cdf(arg), 1e-12);
    EXPECT_NEAR(p.beta, 0.4486, 1e-4);
    EXPECT_NEAR(p.finite_sample_lower, 0.0, 0.0);
    EXPECT_EQ(p.regime, Regime::validated);
}

TEST(PowerPrediction, FreeOfBandwidth) {
    auto a = TheoryInputs::with_delta_norm(80, 40, 1.3, 1.7, 3.0, 0.05);
    auto b = a;
    b.gamma = 3000.0;
    EXPECT_EQ(power_prediction(a).beta, power_prediction(b).beta);
    EXPECT_EQ(power_prediction(a).regime, Regime::out_of_regime);
    EXPECT_EQ(power_prediction(b).regime, Regime::validated);
}

TEST(PowerPrediction, MonotoneInNAndDelta) {
    double prev = 0.0;
    for (std::size_t n : {10u, 50u, 200u, 1000u}) {
        const double beta = power_prediction(TheoryInputs::with_delta_norm(n, 100, 1.0, 2.0, 10.0, 0.05)).beta;
        EXPECT_GT(beta, prev);
        prev = beta;
    }
    prev = 0.0;
    for (double norm : {0.5, 1.0, 2.0, 4.0}) {
        const double beta = power_prediction(TheoryInputs::with_delta_norm(50, 100, 1.0, norm, 10.0, 0.05)).beta;
        EXPECT_GT(beta, prev);
        prev = beta;
    }
}

TEST(PowerPrediction, RejectsBadInputs) {
    auto in = TheoryInputs::with_delta_norm(50, 10, 1.0, 1.0, 1.0, 0.05);
    in.alpha = 0.0;
    EXPECT_THROW((void)power_prediction(in), DomainError);
    in = TheoryInputs::with_delta_norm(50, 10, 1.0, 1.0, 1.0, 0.05);
    in.delta = Vector::Zero(3);
    EXPECT_THROW((void)power_prediction(in), DimensionMismatch);
}

TEST(CorollaryRate, Examples) {
    EXPECT_DOUBLE_EQ(corollary_rate(SnrRegime::low_snr, 50, 100, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(corollary_rate(SnrRegime::high_snr, 50, 100, 0.0), 0.5);
    EXPECT_NEAR(corollary_rate(SnrRegime::high_snr, 100, 7, 0.5), 0.9999997, 1e-7);
    const double first = corollary_rate(SnrRegime::low_snr, 40, 40, 1.3);
    for (std::size_t d : {80u, 400u, 4000u}) EXPECT_NEAR(corollary_rate(SnrRegime::low_snr, d, d, 1.3), first, 1e-12);
    EXPECT_THROW((void)corollary_rate(SnrRegime::low_snr, 1, 1, -1.0), PreconditionError);
}

TEST(CqPowerPrediction, Examples) {
    EXPECT_DOUBLE_EQ(cq_power_prediction(SnrRegime::low_snr, 50, 100, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(cq_power_prediction(SnrRegime::high_snr, 50, 100, 0.0), 0.5);
    // high-SNR rate carries sqrt(n), the same as the linear-time rate
    EXPECT_DOUBLE_EQ(cq_power_prediction(SnrRegime::high_snr, 100, 9, 0.3),
                     corollary_rate(SnrRegime::high_snr, 100, 9, 0.3));
    EXPECT_NEAR(cq_power_prediction(SnrRegime::low_snr, 20, 400, 1.0), normal_cdf(1.0), 1e-15);
    EXPECT_NEAR(cq_power_prediction(SnrRegime::low_snr, 20, 400, 1.0, true, 0.05), normal_cdf(1.0 - 1.6448536269514722),
                1e-12);
}

TEST(BerryEsseen, Examples) {
    EXPECT_DOUBLE_EQ(berry_esseen_bound(400), 1.0);
    EXPECT_DOUBLE_EQ(berry_esseen_bound(1600), 0.5);
    EXPECT_LT(berry_esseen_bound(4000000000ULL), 1e-3);
    EXPECT_THROW((void)berry_esseen_bound(0), PreconditionError);
}

TEST(Tau4Bound, Examples) {
    EXPECT_DOUBLE_EQ(tau4_bound(0.0), 0.0);
    EXPECT_NEAR(tau4_bound(0.16), 0.1024, 1e-15);
    EXPECT_THROW((void)tau4_bound(-1.0), PreconditionError);
}

TEST(DoubleIntegral, GaussianExample) {
    const double approx = double_integral_expansion(1.0, 0.0, 3.0, 0.0, 10.0);
    EXPECT_NEAR(approx, 0.9806, 1e-12);
    const double exact = 1.0 / std::sqrt(1.04);
    EXPECT_NEAR(exact, 0.9805807, 1e-7);
    EXPECT_NEAR(approx - exact, 1.93e-5, 1e-7);
    EXPECT_NEAR(quadrature_oracle_double(CoordinateLaw::normal(), CoordinateLaw::normal(), 0.0, 10.0, Integrand::kernel).value,
                exact, 1e-12);
}

TEST(DoubleIntegral, DegenerateLaws) {
    EXPECT_DOUBLE_EQ(double_integral_expansion(0.0, 0.0, 0.0, 0.0, 3.0), 1.0);
    // near-point masses: exact Gaussian value and the point-mass limit
    const double s = 1e-2, g = 2.0;
    const auto point = CoordinateLaw::normal(s);
    for (double delta : {0.0, 0.5, 2.0}) {
        const double q = quadrature_oracle_double(point, point, delta, g, Integrand::kernel).value;
        const double r = 1.0 + 4.0 * s * s / (g * g);
        EXPECT_NEAR(q, std::exp(-delta * delta / (g * g * r)) / std::sqrt(r), 1e-9);
        EXPECT_NEAR(q, std::exp(-delta * delta / (g * g)), 1e-4);
    }
}

TEST(DoubleIntegral, ExpansionTracksQuadratureForT6) {
    const auto law = CoordinateLaw::student_t(6.0, std::sqrt(4.0 / 6.0));
    const auto m = central_moments(law, 4);
    const double quad = quadrature_oracle_double(law, law, 0.5, 20.0, Integrand::kernel).value;
    EXPECT_NEAR(double_integral_expansion(m.sigma2, m.mu3, m.mu4, 0.5, 20.0), quad, 1e-4);
}

TEST(TripleIntegral, GaussianExample) {
    EXPECT_NEAR(triple_integral_expansion(1.0, 0.0, 3.0, 0.0, 10.0), 0.9618, 1e-12);
    const double quad = quadrature_oracle_triple(CoordinateLaw::normal(), CoordinateLaw::normal(), 0.0, 10.0).value;
    EXPECT_NEAR(triple_integral_expansion(1.0, 0.0, 3.0, 0.0, 10.0), quad, 2e-4);
}

TEST(TripleIntegral, DegenerateLaws) {
    for (double delta : {0.0, 0.4, 1.5}) {
        const double g = 2.0;
        EXPECT_NEAR(triple_integral_expansion(0.0, 0.0, 0.0, delta, g),
                    1.0 - delta * delta / (g * g) + std::pow(delta, 4) / (2.0 * std::pow(g, 4)), 1e-15);
    }
}

TEST(TripleIntegral, SkewnessTermHasNegativeSign) {
    // skewed zero-mean mixture 0.8 N(-0.5, 1) + 0.2 N(2, 1), mu3 = 1.5;
    // (T(1) - T(-1)) * gamma^4 / 2 approaches -2 mu3 = -3
    const std::pair<double, double> sup{-15.0, 15.0};
    const std::vector<std::pair<double, double>> frozen{{1e2, -2.28}, {1e3, -2.92}, {1e4, -2.99}};
    for (const auto& [g2, expected] : frozen) {
        const double g = std::sqrt(g2);
        const double plus = triple_kernel_integral(mixture_pdf, sup, mixture_pdf, sup, 1.0, g, 1e-9).value;
        const double minus = triple_kernel_integral(mixture_pdf, sup, mixture_pdf, sup, -1.0, g, 1e-9).value;
        EXPECT_NEAR((plus - minus) * g2 * g2 / 2.0, expected, 0.01) << g2;
    }
}

TEST(ThirdMomentIntegral, Examples) {
    EXPECT_DOUBLE_EQ(third_moment_integral(1.0, 0.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(third_moment_integral(1.0, 0.0, 1.0), 7.0);
    const auto law = CoordinateLaw::student_t(8.0);
    const double s2 = central_moments(law, 2).sigma2;
    EXPECT_NEAR(quadrature_oracle_double(law, law, 0.7, 1.0, Integrand::cube, 1e-7).value,
                third_moment_integral(s2, 0.0, 0.7), 1e-6);
}

TEST(QuadratureOracle, MomentIdentities) {
    for (const auto& law : {CoordinateLaw::normal(0.7), CoordinateLaw::uniform(2.0), CoordinateLaw::student_t(6.0)}) {
        const double s2 = central_moments(law, 2).sigma2;
        // t_6 loses ~1e-7 of its second moment to the truncated support
        const double tol = law.family == LawFamily::student_t ? 2e-7 : 1e-8;
        for (double delta : {0.0, 0.8})
            EXPECT_NEAR(quadrature_oracle_double(law, law, delta, 1.0, Integrand::sq, 1e-7).value, 2.0 * s2 + delta * delta,
                        tol)
                << law.name();
    }
    EXPECT_NEAR(quadrature_oracle_double(CoordinateLaw::normal(), CoordinateLaw::normal(), 0.0, 1.0, Integrand::quartic, 1e-6)
                    .value,
                12.0, 1e-8);
}

TEST(QuadratureOracle, RejectsBadGamma) {
    EXPECT_THROW((void)quadrature_oracle_double(CoordinateLaw::normal(), CoordinateLaw::normal(), 0.0, 0.0, Integrand::kernel),
                 PreconditionError);
}
