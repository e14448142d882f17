#pragma once

// Closed-form high-dimensional predictions for the linear-time Gaussian-kernel
// MMD test under a mean-shift alternative, plus exact and numerical oracles
// used to check them.
//
// Conventions: k(x, y) = exp(-||x - y||^2 / gamma^2); delta = mu_P - mu_Q;
// V = Var h(z, z'); the test statistic is sqrt(n) MMD^2_l / sqrt(v) with
// v estimating 2V.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <span>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mmdhd/errors.hpp"
#include "mmdhd/model.hpp"
#include "mmdhd/normal.hpp"

namespace mmdhd::theory {

enum class Regime { validated, out_of_regime };

[[nodiscard]] inline std::string to_string(Regime r) {
    return r == Regime::validated ? "validated" : "out-of-regime";
}

struct TheoryInputs {
    std::size_t n = 0;
    std::size_t d = 0;
    double sigma2 = 1.0;
    double mu3 = 0.0;
    double mu4 = 3.0;
    Vector delta;  // length d
    double gamma = 1.0;
    double alpha = 0.05;
    /// gamma >= regime_constant * sqrt(d) counts as the validated regime.
    double regime_constant = 1.0;

    /// Inputs with ||delta|| spread equally over the d coordinates.
    [[nodiscard]] static TheoryInputs with_delta_norm(std::size_t n, std::size_t d, double sigma2, double delta_norm,
                                                      double gamma, double alpha) {
        TheoryInputs in;
        in.n = n;
        in.d = d;
        in.sigma2 = sigma2;
        in.mu4 = 3.0 * sigma2 * sigma2;
        in.delta = Vector::Constant(static_cast<Eigen::Index>(d), delta_norm / std::sqrt(static_cast<double>(d)));
        in.gamma = gamma;
        in.alpha = alpha;
        return in;
    }

    void validate() const {
        if (n == 0 || d == 0) throw PreconditionError("theory: n and d must be positive");
        if (static_cast<std::size_t>(delta.size()) != d) throw DimensionMismatch("theory: delta must have length d");
        if (!(sigma2 > 0.0)) throw PreconditionError("theory: sigma2 must be positive");
        if (!(gamma > 0.0)) throw PreconditionError("theory: gamma must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("theory: alpha must lie in (0, 1)");
    }

    [[nodiscard]] double delta_norm2() const { return delta.squaredNorm(); }

    [[nodiscard]] Regime regime() const {
        return gamma >= regime_constant * std::sqrt(static_cast<double>(d)) ? Regime::validated
                                                                            : Regime::out_of_regime;
    }
};

/// Population MMD^2 ~ 2 ||delta||^2 / gamma^2.
[[nodiscard]] inline double population_mmd2_approx(const TheoryInputs& in) {
    in.validate();
    return 2.0 * in.delta_norm2() / (in.gamma * in.gamma);
}

/// V = Var h ~ (16 d sigma^4 + 16 sigma^2 ||delta||^2) / gamma^4.
[[nodiscard]] inline double variance_V_approx(const TheoryInputs& in) {
    in.validate();
    const double g4 = std::pow(in.gamma, 4);
    return (16.0 * static_cast<double>(in.d) * in.sigma2 * in.sigma2 + 16.0 * in.sigma2 * in.delta_norm2()) / g4;
}

namespace detail {

/// E exp(-c w^2) for w ~ N(m, var).
inline double gauss_exp_moment(double c, double m, double var) {
    const double s = 1.0 + 2.0 * c * var;
    return std::exp(-c * m * m / s) / std::sqrt(s);
}

/// E exp(-c [(u - s)^2 + (w - s)^2]) for independent u ~ N(a, v), w ~ N(b, v),
/// s ~ N(mu_s, v).
inline double gauss_shared_moment(double c, double a, double b, double mu_s, double var) {
    const double s1 = 1.0 + 2.0 * c * var;
    const double cp = c / s1;
    const double mid = 0.5 * (a + b);
    return std::exp(-0.5 * cp * (a - b) * (a - b)) / s1 * gauss_exp_moment(2.0 * cp, mu_s - mid, var);
}

}  // namespace detail

/// Exact population MMD^2 for Gaussian coordinates:
/// 2 r^d (1 - exp(-||delta||^2 / (gamma^2 + 4 sigma^2))), r = (1 + 4 sigma^2 / gamma^2)^(-1/2).
[[nodiscard]] inline double gaussian_exact_mmd2(double sigma2, std::span<const double> delta, double gamma) {
    if (!(gamma > 0.0) || !(sigma2 >= 0.0)) throw PreconditionError("gaussian_exact_mmd2: bad parameters");
    const double g2 = gamma * gamma;
    const double d = static_cast<double>(delta.size());
    const double log_rd = -0.5 * d * std::log1p(4.0 * sigma2 / g2);
    double norm2 = 0.0;
    for (const double v : delta) norm2 += v * v;
    return -2.0 * std::exp(log_rd) * std::expm1(-norm2 / (g2 + 4.0 * sigma2));
}

/// Exact Var h for Gaussian coordinates (P centred at delta, Q at 0), from the
/// seven second-moment terms of h evaluated in closed form per coordinate.
[[nodiscard]] inline double gaussian_exact_variance(double sigma2, std::span<const double> delta, double gamma) {
    if (!(gamma > 0.0) || !(sigma2 >= 0.0)) throw PreconditionError("gaussian_exact_variance: bad parameters");
    using detail::gauss_exp_moment;
    using detail::gauss_shared_moment;
    const double c = 1.0 / (gamma * gamma);
    const double v2 = 2.0 * sigma2;
    double l_kk_pp = 0.0, l_kk_pq = 0.0, l_k_pp = 0.0, l_k_pq = 0.0, l_t5p = 0.0, l_t5q = 0.0;
    for (const double di : delta) {
        l_kk_pp += std::log(gauss_exp_moment(2.0 * c, 0.0, v2));
        l_kk_pq += std::log(gauss_exp_moment(2.0 * c, di, v2));
        l_k_pp += std::log(gauss_exp_moment(c, 0.0, v2));
        l_k_pq += std::log(gauss_exp_moment(c, di, v2));
        // shared P point with neighbours from P and Q; shared Q point likewise
        l_t5p += std::log(gauss_shared_moment(c, di, 0.0, di, sigma2));
        l_t5q += std::log(gauss_shared_moment(c, 0.0, di, 0.0, sigma2));
    }
    const double mmd2 = 2.0 * std::exp(l_k_pp) - 2.0 * std::exp(l_k_pq);
    const double eh2 = 2.0 * std::exp(l_kk_pp) + 2.0 * std::exp(l_kk_pq) + 2.0 * std::exp(2.0 * l_k_pp) +
                       2.0 * std::exp(2.0 * l_k_pq) - 4.0 * std::exp(l_t5p) - 4.0 * std::exp(l_t5q);
    return eh2 - mmd2 * mmd2;
}

struct PowerPrediction {
    double beta = 0.0;
    double finite_sample_lower = 0.0;  // max(0, beta - 20 / sqrt(n))
    Regime regime = Regime::validated;
};

/// Asymptotic power Phi( sqrt(n) ||delta||^2 / sqrt(8 d sigma^4 + 8 sigma^2 ||delta||^2) - z_alpha ).
[[nodiscard]] inline PowerPrediction power_prediction(const TheoryInputs& in) {
    in.validate();
    const double n2 = in.delta_norm2();
    const double s4 = in.sigma2 * in.sigma2;
    const double denom = std::sqrt(8.0 * static_cast<double>(in.d) * s4 + 8.0 * in.sigma2 * n2);
    const double arg = std::sqrt(static_cast<double>(in.n)) * n2 / denom - upper_critical_value(in.alpha);
    PowerPrediction out;
    out.beta = normal_cdf(arg);
    out.finite_sample_lower = std::max(0.0, out.beta - 20.0 / std::sqrt(static_cast<double>(in.n)));
    out.regime = in.regime();
    return out;
}

enum class SnrRegime { low_snr, high_snr };

/// low-snr: Phi(sqrt(n) psi^2 / sqrt(d)); high-snr: Phi(sqrt(n) psi).
[[nodiscard]] inline double corollary_rate(SnrRegime regime, std::size_t n, std::size_t d, double psi) {
    if (!(psi >= 0.0)) throw PreconditionError("corollary_rate: psi must be >= 0");
    const double rn = std::sqrt(static_cast<double>(n));
    return regime == SnrRegime::low_snr ? normal_cdf(rn * psi * psi / std::sqrt(static_cast<double>(d)))
                                        : normal_cdf(rn * psi);
}

/// Chen-Qin power rates: low-snr Phi(n psi^2 / sqrt(d)); high-snr (corrected)
/// Phi(sqrt(n) psi). With `subtract_z` the argument is shifted by -z_alpha.
[[nodiscard]] inline double cq_power_prediction(SnrRegime regime, std::size_t n, std::size_t d, double psi,
                                                bool subtract_z = false, double alpha = 0.05) {
    if (!(psi >= 0.0)) throw PreconditionError("cq_power_prediction: psi must be >= 0");
    const double nn = static_cast<double>(n);
    double arg = regime == SnrRegime::low_snr ? nn * psi * psi / std::sqrt(static_cast<double>(d))
                                              : std::sqrt(nn) * psi;
    if (subtract_z) arg -= upper_critical_value(alpha);
    return normal_cdf(arg);
}

/// Dimension-free Berry-Esseen bound 20 / sqrt(n).
[[nodiscard]] inline double berry_esseen_bound(std::size_t n) {
    if (n == 0) throw PreconditionError("berry_esseen_bound: n must be >= 1");
    return 20.0 / std::sqrt(static_cast<double>(n));
}

/// tau_4 <= 4 V^2.
[[nodiscard]] inline double tau4_bound(double v) {
    if (!(v >= 0.0)) throw PreconditionError("tau4_bound: V must be >= 0");
    return 4.0 * v * v;
}

// Per-coordinate integrals. u has mean delta, v and y have mean 0; all three
// share the central moments (sigma2, mu3, mu4).

/// Second-order expansion of E exp(-(u - v)^2 / gamma^2).
[[nodiscard]] inline double double_integral_expansion(double sigma2, double /*mu3*/, double mu4, double delta,
                                                      double gamma) {
    if (!(gamma > 0.0)) throw PreconditionError("double_integral_expansion: gamma must be positive");
    const double g2 = gamma * gamma;
    const double g4 = g2 * g2;
    const double d2 = delta * delta;
    return 1.0 - 2.0 * sigma2 / g2 - d2 / g2 + mu4 / g4 + 6.0 * sigma2 * d2 / g4 + 3.0 * sigma2 * sigma2 / g4 +
           d2 * d2 / (2.0 * g4);
}

/// Second-order expansion of E exp(-(u - v)^2 / gamma^2) exp(-(v - y)^2 / gamma^2),
/// v shared. The skewness term enters as -2 mu3 delta / gamma^4.
[[nodiscard]] inline double triple_integral_expansion(double sigma2, double mu3, double mu4, double delta,
                                                      double gamma) {
    if (!(gamma > 0.0)) throw PreconditionError("triple_integral_expansion: gamma must be positive");
    const double g2 = gamma * gamma;
    const double g4 = g2 * g2;
    const double d2 = delta * delta;
    return 1.0 - 4.0 * sigma2 / g2 - d2 / g2 + 3.0 * mu4 / g4 + 8.0 * sigma2 * d2 / g4 +
           9.0 * sigma2 * sigma2 / g4 + d2 * d2 / (2.0 * g4) - 2.0 * mu3 * delta / g4;
}

/// E (u - v)^3 = delta^3 + 6 sigma^2 delta.
[[nodiscard]] inline double third_moment_integral(double sigma2, double /*mu3*/, double delta) {
    return delta * delta * delta + 6.0 * sigma2 * delta;
}

enum class Integrand { kernel, sq, cube, quartic };

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
};

/// E phi(u - v) for u = delta + a, a ~ law_f, v ~ law_g, by nested adaptive
/// Gauss-Kronrod quadrature over each law's support (see CoordinateLaw::support).
/// Throws QuadratureNonConvergence when the error estimate exceeds `abs_tol`.
[[nodiscard]] inline QuadratureResult quadrature_oracle_double(const CoordinateLaw& law_f, const CoordinateLaw& law_g,
                                                               double delta, double gamma, Integrand integrand,
                                                               double abs_tol = 1e-9) {
    law_f.validate();
    law_g.validate();
    if (integrand == Integrand::kernel && !(gamma > 0.0)) {
        throw PreconditionError("quadrature_oracle_double: gamma must be positive");
    }
    const double inv_g2 = integrand == Integrand::kernel ? 1.0 / (gamma * gamma) : 0.0;
    auto phi = [integrand, inv_g2](double w) {
        switch (integrand) {
            case Integrand::kernel: return std::exp(-w * w * inv_g2);
            case Integrand::sq: return w * w;
            case Integrand::cube: return w * w * w;
            case Integrand::quartic: return w * w * w * w;
        }
        return 0.0;
    };
    using Gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    constexpr unsigned max_depth = 20;
    constexpr double rel_tol = 1e-13;
    const auto [fa, fb] = law_f.support();
    const auto [ga, gb] = law_g.support();

    double worst_inner = 0.0;
    auto inner = [&](double v) {
        double err = 0.0;
        const double val = Gk::integrate([&](double a) { return phi(delta + a - v) * law_f.pdf(a); }, fa, fb,
                                         max_depth, rel_tol, &err);
        worst_inner = std::max(worst_inner, err);
        return val * law_g.pdf(v);
    };
    double outer_err = 0.0;
    QuadratureResult out;
    out.value = Gk::integrate(inner, ga, gb, max_depth, rel_tol, &outer_err);
    out.error_estimate = outer_err + worst_inner;
    if (!std::isfinite(out.value) || out.error_estimate > abs_tol) {
        throw QuadratureNonConvergence("quadrature_oracle_double: error estimate " +
                                       std::to_string(out.error_estimate) + " exceeds target");
    }
    return out;
}

/// E exp(-(u - v)^2 / gamma^2) exp(-(v - y)^2 / gamma^2) with u = delta + a,
/// a ~ f, and v, y ~ g, for arbitrary densities on the given ranges:
/// integral of g(v) * [E_a k(delta + a, v)] * [E_y k(v, y)] over v.
template <class PdfF, class PdfG>
[[nodiscard]] QuadratureResult triple_kernel_integral(PdfF&& pdf_f, std::pair<double, double> support_f, PdfG&& pdf_g,
                                                      std::pair<double, double> support_g, double delta, double gamma,
                                                      double abs_tol = 1e-9) {
    if (!(gamma > 0.0)) throw PreconditionError("triple_kernel_integral: gamma must be positive");
    const double inv_g2 = 1.0 / (gamma * gamma);
    using Gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    constexpr unsigned max_depth = 20;
    constexpr double rel_tol = 1e-13;
    double worst_inner = 0.0;
    auto outer = [&](double v) {
        double e1 = 0.0, e2 = 0.0;
        const double a = Gk::integrate(
            [&](double s) { return std::exp(-(delta + s - v) * (delta + s - v) * inv_g2) * pdf_f(s); },
            support_f.first, support_f.second, max_depth, rel_tol, &e1);
        const double b = Gk::integrate([&](double y) { return std::exp(-(v - y) * (v - y) * inv_g2) * pdf_g(y); },
                                       support_g.first, support_g.second, max_depth, rel_tol, &e2);
        worst_inner = std::max({worst_inner, e1, e2});
        return a * b * pdf_g(v);
    };
    double outer_err = 0.0;
    QuadratureResult out;
    out.value = Gk::integrate(outer, support_g.first, support_g.second, max_depth, rel_tol, &outer_err);
    out.error_estimate = outer_err + 2.0 * worst_inner;
    if (!std::isfinite(out.value) || out.error_estimate > abs_tol) {
        throw QuadratureNonConvergence("triple_kernel_integral: error estimate " + std::to_string(out.error_estimate) +
                                       " exceeds target");
    }
    return out;
}

[[nodiscard]] inline QuadratureResult quadrature_oracle_triple(const CoordinateLaw& law_f, const CoordinateLaw& law_g,
                                                               double delta, double gamma, double abs_tol = 1e-9) {
    law_f.validate();
    law_g.validate();
    return triple_kernel_integral([&](double x) { return law_f.pdf(x); }, law_f.support(),
                                  [&](double x) { return law_g.pdf(x); }, law_g.support(), delta, gamma, abs_tol);
}

}  // namespace mmdhd::theory
