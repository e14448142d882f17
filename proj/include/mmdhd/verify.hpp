#pragma once

// Oracle suites behind `mmdhd verify`. Each check compares a closed form or
// fast implementation against an independent computation. `perturbation`
// scales every value under test by (1 + perturbation), which lets callers
// confirm that a wrong formula is caught.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mmdhd/kernel.hpp"
#include "mmdhd/model.hpp"
#include "mmdhd/seed.hpp"
#include "mmdhd/stat.hpp"
#include "mmdhd/theory.hpp"

namespace mmdhd::verify {

struct Check {
    std::string name;
    double value = 0.0;     // quantity under test
    double reference = 0.0;
    double error = 0.0;     // absolute or relative, see `relative`
    double tolerance = 0.0;
    bool relative = false;
    bool pass = false;
};

struct SuiteReport {
    std::string suite;
    std::vector<Check> checks;

    [[nodiscard]] bool passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return !checks.empty();
    }
};

struct Options {
    Seed seed = 0;
    double perturbation = 0.0;
};

[[nodiscard]] inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {"integral-expansions", "mmd2-closed-form", "variance-closed-form",
                                                   "cq-identity", "rotation-invariance"};
    return names;
}

/// Primary suite name for an accepted alias; other names pass through.
[[nodiscard]] inline std::string canonical_suite(const std::string& name) {
    if (name == "appendix-integrals") return "integral-expansions";
    if (name == "lemma1") return "mmd2-closed-form";
    if (name == "lemma2") return "variance-closed-form";
    return name;
}

namespace detail {

inline Check absolute(std::string name, double value, double reference, double tol) {
    Check c{std::move(name), value, reference, std::abs(value - reference), tol, false, false};
    c.pass = c.error <= tol;
    return c;
}

inline Check relative(std::string name, double value, double reference, double tol) {
    const double scale = std::max(std::abs(reference), std::numeric_limits<double>::min());
    Check c{std::move(name), value, reference, std::abs(value - reference) / scale, tol, true, false};
    c.pass = c.error <= tol;
    return c;
}

inline std::string fmt(double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

}  // namespace detail

/// Double and triple integral expansions against nested quadrature on
/// gamma^2 in {400, 1600}, sigma^2 in {0.5, 1, 2}, delta in {0, 0.5, 1}, for
/// normal and t_6 coordinates; moment identities for the polynomial integrands.
[[nodiscard]] inline SuiteReport integral_expansions(const Options& opt) {
    SuiteReport r{"integral-expansions", {}};
    const double f = 1.0 + opt.perturbation;
    for (const double g2 : {400.0, 1600.0}) {
        for (const double s2 : {0.5, 1.0, 2.0}) {
            const CoordinateLaw laws[] = {CoordinateLaw::normal(std::sqrt(s2)),
                                          CoordinateLaw::student_t(6.0, std::sqrt(s2 * 4.0 / 6.0))};
            for (const auto& law : laws) {
                const auto m = central_moments(law, 4);
                for (const double delta : {0.0, 0.5, 1.0}) {
                    const double g = std::sqrt(g2);
                    const std::string tag = law.name() + " g2=" + detail::fmt(g2) + " s2=" + detail::fmt(s2) +
                                            " delta=" + detail::fmt(delta);
                    r.checks.push_back(detail::absolute(
                        "double " + tag, f * theory::double_integral_expansion(m.sigma2, m.mu3, m.mu4, delta, g),
                        theory::quadrature_oracle_double(law, law, delta, g, theory::Integrand::kernel).value, 1e-4));
                    r.checks.push_back(detail::absolute(
                        "triple " + tag, f * theory::triple_integral_expansion(m.sigma2, m.mu3, m.mu4, delta, g),
                        theory::quadrature_oracle_triple(law, law, delta, g).value, 1e-4));
                }
            }
        }
    }
    for (const double s2 : {0.5, 2.0}) {
        const auto law = CoordinateLaw::normal(std::sqrt(s2));
        const double delta = 0.5;
        r.checks.push_back(detail::absolute(
            "sq normal s2=" + detail::fmt(s2), f * (2.0 * s2 + delta * delta),
            theory::quadrature_oracle_double(law, law, delta, 1.0, theory::Integrand::sq, 1e-8).value, 1e-8));
        r.checks.push_back(detail::absolute(
            "cube normal s2=" + detail::fmt(s2), f * theory::third_moment_integral(s2, 0.0, delta),
            theory::quadrature_oracle_double(law, law, delta, 1.0, theory::Integrand::cube, 1e-8).value, 1e-6));
    }
    const auto unit = CoordinateLaw::normal();
    const auto mu = central_moments(unit, 4);
    r.checks.push_back(detail::absolute(
        "quartic normal s2=1 delta=0", f * (2.0 * mu.mu4 + 6.0 * mu.sigma2 * mu.sigma2),
        theory::quadrature_oracle_double(unit, unit, 0.0, 1.0, theory::Integrand::quartic, 1e-8).value, 1e-8));
    return r;
}

/// 2 ||delta||^2 / gamma^2 against the exact Gaussian MMD^2, with the
/// relative error held under the Taylor remainder 4 (sigma^2 d + ||delta||^2)^2
/// / (gamma^2 ||delta||^2).
[[nodiscard]] inline SuiteReport mmd2_closed_form(const Options& opt) {
    SuiteReport r{"mmd2-closed-form", {}};
    const std::size_t d = 100;
    const double s2 = 1.0;
    const Vector delta = Vector::Constant(static_cast<Eigen::Index>(d), 0.2);
    const double n2 = delta.squaredNorm();
    for (const double g2 : {1e4, 1e5, 1e6, 1e7}) {
        auto in = theory::TheoryInputs::with_delta_norm(2, d, s2, std::sqrt(n2), std::sqrt(g2), 0.05);
        const double approx = (1.0 + opt.perturbation) * theory::population_mmd2_approx(in);
        const double exact = theory::gaussian_exact_mmd2(s2, {delta.data(), d}, std::sqrt(g2));
        const double bound = 4.0 * (s2 * static_cast<double>(d) + n2) * (s2 * static_cast<double>(d) + n2) / (g2 * n2);
        r.checks.push_back(detail::relative("mmd2 d=100 g2=" + detail::fmt(g2), approx, exact, bound));
    }
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(d));
    r.checks.push_back(detail::absolute("mmd2 delta=0", theory::gaussian_exact_mmd2(s2, {zero.data(), d}, 10.0), 0.0, 0.0));
    return r;
}

/// (16 d sigma^4 + 16 sigma^2 ||delta||^2) / gamma^4 against the exact Gaussian
/// Var h for gamma^2 >> d sigma^2; the exact variance against a Monte Carlo
/// variance of h at gamma^2 = 200.
[[nodiscard]] inline SuiteReport variance_closed_form(const Options& opt) {
    SuiteReport r{"variance-closed-form", {}};
    const std::size_t d = 100;
    const double s2 = 1.0;
    const Vector delta = Vector::Constant(static_cast<Eigen::Index>(d), 0.2);
    for (const double g2 : {1e4, 1e5, 1e6}) {
        auto in = theory::TheoryInputs::with_delta_norm(2, d, s2, delta.norm(), std::sqrt(g2), 0.05);
        const double approx = (1.0 + opt.perturbation) * theory::variance_V_approx(in);
        const double exact = theory::gaussian_exact_variance(s2, {delta.data(), d}, std::sqrt(g2));
        // leading neglected factor is exp(-O(d sigma^2 / gamma^2)); beyond gamma^2 = 1e6
        // the exact variance loses digits to cancellation in E h^2 - (E h)^2
        r.checks.push_back(detail::relative("V d=100 g2=" + detail::fmt(g2), approx, exact,
                                            16.0 * static_cast<double>(d) * s2 / g2));
    }
    const double g = std::sqrt(200.0);
    const auto model = ModelSpec::with_delta(delta, CoordinateLaw::normal());
    const auto sample = sample_pair(model, 200000, derive_seed(opt.seed, StreamTag::pilot, 2));
    const auto lin = mmd2_linear(KernelSpec::gaussian(g), sample.x, sample.y);
    const double var_h = empirical_variance_v(lin.h) / 2.0;
    const double exact = (1.0 + opt.perturbation) * theory::gaussian_exact_variance(s2, {delta.data(), d}, g);
    r.checks.push_back(detail::relative("exact Var h vs Monte Carlo d=100 g2=200", exact, var_h, 0.05));
    return r;
}

/// cq_statistic against brute-force MMD^2_u with the linear kernel.
[[nodiscard]] inline SuiteReport cq_identity(const Options& opt) {
    SuiteReport r{"cq-identity", {}};
    for (std::uint64_t i = 0; i < 100; ++i) {
        const std::size_t n = 2 + i % 9;
        const std::size_t d = 1 + (i * 7) % 12;
        const auto model = ModelSpec::mean_shift(d, 0.5 * static_cast<double>(i % 4), CoordinateLaw::normal());
        const auto s = sample_pair(model, n, derive_seed(opt.seed, StreamTag::pilot, 100 + i));
        const double cq = (1.0 + opt.perturbation) * cq_statistic(s.x, s.y);
        const double brute = mmd2_u(KernelSpec::linear(), s.x, s.y);
        auto c = detail::relative("instance " + std::to_string(i), cq, brute, 1e-10);
        // relative error is meaningless for a statistic that is zero to rounding
        if (!c.pass && std::abs(cq - brute) <= 1e-12) c.pass = true;
        r.checks.push_back(std::move(c));
    }
    return r;
}

/// Gaussian-kernel statistics are unchanged by one common orthogonal map.
[[nodiscard]] inline SuiteReport rotation_invariance(const Options& opt) {
    SuiteReport r{"rotation-invariance", {}};
    for (const std::size_t d : {3, 20, 60}) {
        const auto model = ModelSpec::mean_shift(d, 1.5, CoordinateLaw::student_t(6.0));
        const auto s = sample_pair(model, 40, derive_seed(opt.seed, StreamTag::pilot, 300 + d));
        const Matrix u = random_rotation(d, derive_seed(opt.seed, StreamTag::rotation, d));
        const Matrix ux = s.x * u.transpose();
        const Matrix uy = s.y * u.transpose();
        const auto k = KernelSpec::gaussian(std::sqrt(static_cast<double>(d)));
        const double f = 1.0 + opt.perturbation;
        r.checks.push_back(detail::absolute("mmd2_linear d=" + std::to_string(d), f * mmd2_linear(k, ux, uy).mmd2_l,
                                            mmd2_linear(k, s.x, s.y).mmd2_l, 1e-9));
        r.checks.push_back(
            detail::absolute("mmd2_u d=" + std::to_string(d), f * mmd2_u(k, ux, uy), mmd2_u(k, s.x, s.y), 1e-9));
        // identity-rotation draws versus the same draws generated with a random U
        auto rotated = model;
        rotated.rotation = Rotation::random_with_seed(derive_seed(opt.seed, StreamTag::rotation, 1000 + d));
        const auto sr = sample_pair(rotated, 40, derive_seed(opt.seed, StreamTag::pilot, 300 + d));
        const Matrix ur = random_rotation(d, rotated.rotation.seed);
        const Matrix back_x = (sr.x.rowwise() - rotated.mu_p.transpose()) * ur;
        const Matrix ref_x = s.x.rowwise() - model.mu_p.transpose();
        r.checks.push_back(detail::absolute("rotated draws d=" + std::to_string(d), (back_x - ref_x).cwiseAbs().maxCoeff(),
                                            0.0, 1e-9));
    }
    return r;
}

/// Runs one suite by name or alias; std::nullopt for an unknown name.
[[nodiscard]] inline std::optional<SuiteReport> run_suite(const std::string& suite, const Options& opt) {
    const std::string name = canonical_suite(suite);
    if (name == "integral-expansions") return integral_expansions(opt);
    if (name == "mmd2-closed-form") return mmd2_closed_form(opt);
    if (name == "variance-closed-form") return variance_closed_form(opt);
    if (name == "cq-identity") return cq_identity(opt);
    if (name == "rotation-invariance") return rotation_invariance(opt);
    return std::nullopt;
}

}  // namespace mmdhd::verify
