#pragma once

// Generative model: x = U s + mu_P, y = U t + mu_Q where s, t have i.i.d.
// zero-mean coordinates drawn from a CoordinateLaw and U is orthogonal.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "mmdhd/errors.hpp"
#include "mmdhd/seed.hpp"

namespace mmdhd {

/// Observations in rows, coordinates in columns.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class LawFamily { standard_normal, student_t, uniform_centered };

/// Law of a single centered coordinate. The raw draw (N(0,1), t_dof, or
/// U(-1,1)) is multiplied by `scale`; student-t is not standardized.
struct CoordinateLaw {
    LawFamily family = LawFamily::standard_normal;
    double scale = 1.0;
    double dof = 0.0;  // student-t only

    [[nodiscard]] static CoordinateLaw normal(double scale = 1.0) {
        return {LawFamily::standard_normal, scale, 0.0};
    }
    [[nodiscard]] static CoordinateLaw student_t(double dof, double scale = 1.0) {
        return {LawFamily::student_t, scale, dof};
    }
    [[nodiscard]] static CoordinateLaw uniform(double scale = 1.0) {
        return {LawFamily::uniform_centered, scale, 0.0};
    }

    void validate() const {
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            throw PreconditionError("coordinate law: scale must be positive and finite");
        }
        if (family == LawFamily::student_t && !(dof > 0.0)) {
            throw PreconditionError("coordinate law: student-t requires dof > 0");
        }
    }

    [[nodiscard]] bool has_variance() const {
        return family != LawFamily::student_t || dof > 2.0;
    }

    [[nodiscard]] std::string name() const {
        switch (family) {
            case LawFamily::standard_normal: return "normal";
            case LawFamily::student_t: return "student-t";
            case LawFamily::uniform_centered: return "uniform";
        }
        return "unknown";
    }

    /// Density of the scaled law.
    [[nodiscard]] double pdf(double x) const {
        const double z = x / scale;
        switch (family) {
            case LawFamily::standard_normal:
                return std::exp(-0.5 * z * z) / (scale * std::sqrt(2.0 * std::numbers::pi));
            case LawFamily::student_t: {
                const double log_c = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                                     0.5 * std::log(dof * std::numbers::pi);
                return std::exp(log_c - 0.5 * (dof + 1.0) * std::log1p(z * z / dof)) / scale;
            }
            case LawFamily::uniform_centered:
                return std::abs(z) <= 1.0 ? 0.5 / scale : 0.0;
        }
        return 0.0;
    }

    /// Integration range for quadrature: +-10 sd for the normal, the exact
    /// support for the uniform. Student-t is cut where the two-sided tail mass
    /// falls below roughly 1e-14 (|t| ~ 10^(14/dof)), which is far cheaper for
    /// adaptive quadrature than mapping the whole line.
    [[nodiscard]] std::pair<double, double> support() const {
        constexpr double inf = std::numeric_limits<double>::infinity();
        switch (family) {
            case LawFamily::standard_normal: return {-10.0 * scale, 10.0 * scale};
            case LawFamily::student_t: {
                const double cut = scale * std::max(50.0, std::pow(10.0, 14.0 / dof));
                return {-cut, cut};
            }
            case LawFamily::uniform_centered: return {-scale, scale};
        }
        return {-inf, inf};
    }
};

/// Central moments of one coordinate. Moments that do not exist are +inf.
struct MomentSet {
    double sigma2 = 1.0;
    double mu3 = 0.0;
    double mu4 = 3.0;
    std::optional<double> mu6;
};

/// Exact central moments of `law` up to `max_order` (2, 3, 4 or 6).
/// Throws MomentUndefined if the law has no finite moment of that order.
[[nodiscard]] inline MomentSet central_moments(const CoordinateLaw& law, int max_order = 4) {
    law.validate();
    if (max_order != 2 && max_order != 3 && max_order != 4 && max_order != 6) {
        throw PreconditionError("central_moments: max_order must be one of 2, 3, 4, 6");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double s2 = law.scale * law.scale;
    MomentSet m;
    switch (law.family) {
        case LawFamily::standard_normal:
            m.sigma2 = s2;
            m.mu4 = 3.0 * s2 * s2;
            if (max_order >= 6) m.mu6 = 15.0 * s2 * s2 * s2;
            break;
        case LawFamily::uniform_centered:
            m.sigma2 = s2 / 3.0;
            m.mu4 = s2 * s2 / 5.0;
            if (max_order >= 6) m.mu6 = s2 * s2 * s2 / 7.0;
            break;
        case LawFamily::student_t: {
            const double nu = law.dof;
            if (!(nu > max_order)) {
                throw MomentUndefined("student-t with dof " + std::to_string(nu) +
                                      " has no finite moment of order " + std::to_string(max_order));
            }
            m.sigma2 = s2 * nu / (nu - 2.0);
            m.mu4 = nu > 4.0 ? s2 * s2 * 3.0 * nu * nu / ((nu - 2.0) * (nu - 4.0)) : inf;
            if (max_order >= 6) {
                m.mu6 = s2 * s2 * s2 * 15.0 * nu * nu * nu / ((nu - 2.0) * (nu - 4.0) * (nu - 6.0));
            }
            break;
        }
    }
    return m;
}

/// Draws raw coordinates of a law; one instance per engine, not shared.
class CoordinateSampler {
public:
    explicit CoordinateSampler(const CoordinateLaw& law)
        : law_(law), t_(law.family == LawFamily::student_t ? law.dof : 1.0) {}

    template <class Eng>
    double operator()(Eng& eng) {
        switch (law_.family) {
            case LawFamily::standard_normal: return law_.scale * normal_(eng);
            case LawFamily::student_t: return law_.scale * t_(eng);
            case LawFamily::uniform_centered: return law_.scale * uniform_(eng);
        }
        return 0.0;
    }

    template <class Eng>
    void fill(Eng& eng, double* out, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) out[i] = (*this)(eng);
    }

private:
    CoordinateLaw law_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
    boost::random::student_t_distribution<double> t_;
    boost::random::uniform_real_distribution<double> uniform_{-1.0, 1.0};
};

/// Haar-distributed orthogonal matrix: QR of a seeded standard-normal matrix,
/// with columns of Q flipped so that diag(R) > 0.
[[nodiscard]] inline Matrix random_rotation(std::size_t d, Seed seed) {
    if (d == 0) throw PreconditionError("random_rotation: d must be >= 1");
    auto eng = make_engine(seed, StreamTag::rotation);
    boost::random::normal_distribution<double> normal;
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = normal(eng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return q;
}

struct Rotation {
    bool random = false;
    Seed seed = 0;

    [[nodiscard]] static Rotation identity() { return {}; }
    [[nodiscard]] static Rotation random_with_seed(Seed s) { return {true, s}; }
};

struct ModelSpec {
    std::size_t d = 1;
    Vector mu_p;
    Vector mu_q;
    Rotation rotation;
    CoordinateLaw law;

    /// P and Q centred at `delta` and 0.
    [[nodiscard]] static ModelSpec with_delta(Vector delta, CoordinateLaw law,
                                              Rotation rotation = Rotation::identity()) {
        ModelSpec m;
        m.d = static_cast<std::size_t>(delta.size());
        m.mu_q = Vector::Zero(delta.size());
        m.mu_p = std::move(delta);
        m.rotation = rotation;
        m.law = law;
        return m;
    }

    /// Mean shift of SNR `psi` spread equally: delta_i = psi * sigma / sqrt(d).
    [[nodiscard]] static ModelSpec mean_shift(std::size_t d, double psi, CoordinateLaw law,
                                              Rotation rotation = Rotation::identity()) {
        const double sigma = std::sqrt(central_moments(law, 2).sigma2);
        const double per_coord = psi * sigma / std::sqrt(static_cast<double>(d));
        return with_delta(Vector::Constant(static_cast<Eigen::Index>(d), per_coord), law, rotation);
    }

    void validate() const {
        if (d == 0) throw PreconditionError("model: d must be >= 1");
        if (static_cast<std::size_t>(mu_p.size()) != d || static_cast<std::size_t>(mu_q.size()) != d) {
            throw DimensionMismatch("model: mu_p and mu_q must have length d");
        }
        law.validate();
    }

    [[nodiscard]] Vector delta() const { return mu_p - mu_q; }
    [[nodiscard]] double delta_norm() const { return delta().norm(); }
    [[nodiscard]] double sigma2() const { return central_moments(law, 2).sigma2; }
    /// Psi = ||delta|| / sigma.
    [[nodiscard]] double snr() const { return delta_norm() / std::sqrt(sigma2()); }
};

struct SamplePair {
    Matrix x;
    Matrix y;
};

/// n i.i.d. rows from P and from Q. X and Y use separate substreams of
/// `seed`; the underlying s, t draws do not depend on the rotation.
[[nodiscard]] inline SamplePair sample_pair(const ModelSpec& model, std::size_t n, Seed seed) {
    model.validate();
    if (n == 0) throw PreconditionError("sample_pair: n must be >= 1");
    if (!model.law.has_variance()) {
        throw PreconditionError("sample_pair: coordinate law has undefined variance");
    }
    const auto rows = static_cast<Eigen::Index>(n);
    const auto d = static_cast<Eigen::Index>(model.d);

    auto draw = [&](StreamTag tag, const Vector& mean) {
        Matrix out(rows, d);
        auto eng = make_engine(seed, tag);
        CoordinateSampler sampler(model.law);
        sampler.fill(eng, out.data(), static_cast<std::size_t>(out.size()));
        if (model.rotation.random) {
            const Matrix u = random_rotation(model.d, model.rotation.seed);
            out = (out * u.transpose()).eval();
        }
        out.rowwise() += mean.transpose();
        return out;
    };
    return {draw(StreamTag::sample_x, model.mu_p), draw(StreamTag::sample_y, model.mu_q)};
}

}  // namespace mmdhd
