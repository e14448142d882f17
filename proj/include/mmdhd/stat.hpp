#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mmdhd/errors.hpp"
#include "mmdhd/kernel.hpp"
#include "mmdhd/model.hpp"
#include "mmdhd/normal.hpp"
#include "mmdhd/seed.hpp"

namespace mmdhd {

/// h(z, z') = k(x,x') + k(y,y') - k(x,y') - k(x',y), with z = (x, y).
[[nodiscard]] inline double h_value(const KernelSpec& k, std::span<const double> x, std::span<const double> xp,
                                    std::span<const double> y, std::span<const double> yp) {
    const auto d = x.size();
    if (xp.size() != d || y.size() != d || yp.size() != d) {
        throw DimensionMismatch("h_value: all four points must share the same dimension");
    }
    k.validate();
    return detail::eval_unchecked(k, x, xp) + detail::eval_unchecked(k, y, yp) -
           detail::eval_unchecked(k, x, yp) - detail::eval_unchecked(k, xp, y);
}

/// One h value per disjoint pair of consecutive observations.
struct HSample {
    std::vector<double> values;
};

struct LinearMmd {
    double mmd2_l = 0.0;
    HSample h;
    /// The last observation of each sample was dropped because n was odd.
    bool trimmed = false;
};

/// Linear-time MMD^2: mean of h over the pairs (z1,z2), (z3,z4), ... in
/// input order. An odd n drops the last row of X and Y.
[[nodiscard]] inline LinearMmd mmd2_linear(const KernelSpec& k, const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw DimensionMismatch("mmd2_linear: X and Y must have the same shape");
    }
    if (x.rows() < 2) throw PreconditionError("mmd2_linear: need n >= 2");
    k.validate();
    LinearMmd out;
    out.trimmed = (x.rows() % 2) != 0;
    const Eigen::Index pairs = x.rows() / 2;
    out.h.values.resize(static_cast<std::size_t>(pairs));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pairs; ++i) {
        const auto a = 2 * i;
        const auto b = 2 * i + 1;
        const double h = detail::eval_unchecked(k, row_span(x, a), row_span(x, b)) +
                         detail::eval_unchecked(k, row_span(y, a), row_span(y, b)) -
                         detail::eval_unchecked(k, row_span(x, a), row_span(y, b)) -
                         detail::eval_unchecked(k, row_span(x, b), row_span(y, a));
        out.h.values[static_cast<std::size_t>(i)] = h;
        sum += h;
    }
    out.mmd2_l = sum / static_cast<double>(pairs);
    return out;
}

/// v = 2 * unbiased sample variance of the h values.
[[nodiscard]] inline double empirical_variance_v(const HSample& h) {
    const auto m = h.values.size();
    if (m < 2) throw TooFewPairs("empirical_variance_v: need at least two h values (n >= 4)");
    const double mean = std::accumulate(h.values.begin(), h.values.end(), 0.0) / static_cast<double>(m);
    double ss = 0.0;
    for (const double v : h.values) ss += (v - mean) * (v - mean);
    return 2.0 * ss / static_cast<double>(m - 1);
}

struct TestOutcome {
    double mmd2_l = 0.0;
    double v = 0.0;
    double statistic = 0.0;  // sqrt(n) * mmd2_l / sqrt(v)
    double z_alpha = 0.0;
    bool reject = false;
    double p_value = 1.0;
    std::size_t n = 0;  // observations per sample actually used
    double gamma_used = 0.0;
    KernelFamily kernel = KernelFamily::gaussian;
    bool trimmed = false;
    /// v == 0: the decision falls back to reject iff mmd2_l > 0.
    bool degenerate = false;
};

/// Rejects when sqrt(n) * MMD^2_l / sqrt(v) > z_alpha (one-sided).
[[nodiscard]] inline TestOutcome linear_test(const Matrix& x, const Matrix& y, const KernelSpec& k, double alpha) {
    TestOutcome out;
    out.z_alpha = upper_critical_value(alpha);
    const auto lin = mmd2_linear(k, x, y);
    out.mmd2_l = lin.mmd2_l;
    out.trimmed = lin.trimmed;
    out.n = 2 * lin.h.values.size();
    out.gamma_used = k.family == KernelFamily::linear ? 0.0 : k.gamma;
    out.kernel = k.family;
    out.v = empirical_variance_v(lin.h);
    if (out.v > 0.0) {
        out.statistic = std::sqrt(static_cast<double>(out.n)) * out.mmd2_l / std::sqrt(out.v);
        out.reject = out.statistic > out.z_alpha;
        out.p_value = normal_sf(out.statistic);
    } else {
        out.degenerate = true;
        out.reject = out.mmd2_l > 0.0;
        out.statistic = out.mmd2_l > 0.0 ? std::numeric_limits<double>::infinity()
                        : out.mmd2_l < 0.0 ? -std::numeric_limits<double>::infinity()
                                           : 0.0;
        out.p_value = out.reject ? 0.0 : 1.0;
    }
    return out;
}

/// Gaussian-kernel test with the bandwidth resolved from `rule` (the median
/// heuristic pools all rows of X and Y).
[[nodiscard]] inline TestOutcome linear_test(const Matrix& x, const Matrix& y, const BandwidthRule& rule,
                                             double alpha) {
    double gamma = 0.0;
    if (rule.needs_data()) {
        const Matrix pooled = pool_rows(x, y);
        gamma = resolve_bandwidth(rule, static_cast<std::size_t>(x.cols()), &pooled);
    } else {
        gamma = resolve_bandwidth(rule, static_cast<std::size_t>(x.cols()));
    }
    return linear_test(x, y, KernelSpec::gaussian(gamma), alpha);
}

namespace detail {

inline double mean_offdiag(const KernelSpec& k, const Matrix& a) {
    const auto n = a.rows();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) s += eval_unchecked(k, row_span(a, i), row_span(a, j));
    return 2.0 * s / static_cast<double>(n * (n - 1));
}

}  // namespace detail

/// Unbiased quadratic-time MMD^2_u (brute force over all kernel pairs).
[[nodiscard]] inline double mmd2_u(const KernelSpec& k, const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) throw DimensionMismatch("mmd2_u: X and Y differ in dimension");
    if (x.rows() < 2 || y.rows() < 2) throw PreconditionError("mmd2_u: need n >= 2");
    k.validate();
    double cross = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < y.rows(); ++j) cross += detail::eval_unchecked(k, row_span(x, i), row_span(y, j));
    cross /= static_cast<double>(x.rows() * y.rows());
    return detail::mean_offdiag(k, x) + detail::mean_offdiag(k, y) - 2.0 * cross;
}

/// Chen-Qin statistic, evaluated through column sums in O(n d):
/// sum_{i != j} x_i'x_j = ||sum x||^2 - sum ||x_i||^2.
[[nodiscard]] inline double cq_statistic(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) throw DimensionMismatch("cq_statistic: X and Y differ in dimension");
    if (x.rows() < 2 || y.rows() < 2) throw PreconditionError("cq_statistic: need n >= 2");
    const Vector sx = x.colwise().sum().transpose();
    const Vector sy = y.colwise().sum().transpose();
    const double nx = static_cast<double>(x.rows());
    const double ny = static_cast<double>(y.rows());
    const double within_x = (sx.squaredNorm() - x.squaredNorm()) / (nx * (nx - 1.0));
    const double within_y = (sy.squaredNorm() - y.squaredNorm()) / (ny * (ny - 1.0));
    return within_x + within_y - 2.0 * sx.dot(sy) / (nx * ny);
}

struct PermutationResult {
    double observed = 0.0;
    double threshold = 0.0;  // empirical (1 - alpha) quantile of the permuted statistics
    double p_value = 1.0;    // (1 + #{perm >= observed}) / (B + 1)
    bool reject = false;     // observed > threshold
};

/// Calibrates `stat_fn(X, Y)` by recomputing it on B random relabelings of
/// the pooled sample. Permutation b draws from its own substream of `seed`.
template <class StatFn>
[[nodiscard]] PermutationResult permutation_threshold(StatFn&& stat_fn, const Matrix& x, const Matrix& y,
                                                      double alpha, std::size_t b_count, Seed seed) {
    if (b_count < 1) throw PreconditionError("permutation_threshold: B must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("permutation_threshold: alpha must lie in (0, 1)");
    const Matrix pooled = pool_rows(x, y);
    const auto nx = x.rows();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(pooled.rows()));

    PermutationResult out;
    out.observed = stat_fn(x, y);
    std::vector<double> perm(b_count);
    std::size_t at_least = 0;
    Matrix px(nx, x.cols());
    Matrix py(y.rows(), y.cols());
    for (std::size_t b = 0; b < b_count; ++b) {
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        auto eng = make_engine(seed, StreamTag::permutation, b);
        // Fisher-Yates with an explicit bounded draw so the order is portable.
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(eng() % (i + 1));
            std::swap(idx[i], idx[j]);
        }
        for (Eigen::Index i = 0; i < nx; ++i) px.row(i) = pooled.row(idx[static_cast<std::size_t>(i)]);
        for (Eigen::Index i = 0; i < py.rows(); ++i) py.row(i) = pooled.row(idx[static_cast<std::size_t>(nx + i)]);
        perm[b] = stat_fn(px, py);
        if (perm[b] >= out.observed) ++at_least;
    }
    std::sort(perm.begin(), perm.end());
    const auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(b_count)));
    out.threshold = perm[std::clamp<std::size_t>(rank, 1, b_count) - 1];
    out.p_value = static_cast<double>(1 + at_least) / static_cast<double>(b_count + 1);
    out.reject = out.observed > out.threshold;
    return out;
}

}  // namespace mmdhd
