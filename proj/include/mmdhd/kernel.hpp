#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmdhd/errors.hpp"
#include "mmdhd/model.hpp"

namespace mmdhd {

enum class KernelFamily { gaussian, laplace, linear };

/// gaussian: exp(-||x-y||^2 / gamma^2)   (no factor 2)
/// laplace:  exp(-||x-y||_1 / gamma)
/// linear:   x'y                         (gamma ignored)
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double gamma = 1.0;

    [[nodiscard]] static KernelSpec gaussian(double gamma) { return {KernelFamily::gaussian, gamma}; }
    [[nodiscard]] static KernelSpec laplace(double gamma) { return {KernelFamily::laplace, gamma}; }
    [[nodiscard]] static KernelSpec linear() { return {KernelFamily::linear, 1.0}; }

    void validate() const {
        if (family != KernelFamily::linear && !(gamma > 0.0 && std::isfinite(gamma))) {
            throw PreconditionError("kernel: gamma must be positive and finite");
        }
    }

    [[nodiscard]] std::string name() const {
        switch (family) {
            case KernelFamily::gaussian: return "gaussian";
            case KernelFamily::laplace: return "laplace";
            case KernelFamily::linear: return "linear";
        }
        return "unknown";
    }
};

/// Squared Euclidean distance.
[[nodiscard]] inline double squared_distance(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        acc += diff * diff;
    }
    return acc;
}

namespace detail {

inline double eval_unchecked(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
    switch (spec.family) {
        case KernelFamily::gaussian:
            return std::exp(-squared_distance(x, y) / (spec.gamma * spec.gamma));
        case KernelFamily::laplace: {
            double l1 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) l1 += std::abs(x[i] - y[i]);
            return std::exp(-l1 / spec.gamma);
        }
        case KernelFamily::linear: {
            double dot = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
            return dot;
        }
    }
    return 0.0;
}

}  // namespace detail

[[nodiscard]] inline double eval_kernel(const KernelSpec& spec, std::span<const double> x,
                                        std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionMismatch("eval_kernel: x and y differ in length");
    spec.validate();
    return detail::eval_unchecked(spec, x, y);
}

/// Row `i` of a row-major matrix as a span.
[[nodiscard]] inline std::span<const double> row_span(const Matrix& m, Eigen::Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

/// Median of all m(m-1)/2 pairwise Euclidean distances between rows of
/// `pooled`; the lower median when the count is even.
[[nodiscard]] inline double median_heuristic(const Matrix& pooled) {
    const auto m = pooled.rows();
    if (m < 2) throw PreconditionError("median_heuristic: need at least two points");
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
    if (pooled.cols() >= 16) {
        // ||a||^2 + ||b||^2 - 2 a'b from one Gram product; rows are centred
        // first so the cancellation error stays relative to the spread.
        const Matrix c = pooled.rowwise() - pooled.colwise().mean();
        const Eigen::MatrixXd gram = c * c.transpose();
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = i + 1; j < m; ++j) {
                dist.push_back(std::max(0.0, gram(i, i) + gram(j, j) - 2.0 * gram(i, j)));
            }
        }
    } else {
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = i + 1; j < m; ++j) {
                dist.push_back(squared_distance(row_span(pooled, i), row_span(pooled, j)));
            }
        }
    }
    const auto k = static_cast<std::ptrdiff_t>((dist.size() - 1) / 2);
    std::nth_element(dist.begin(), dist.begin() + k, dist.end());
    const double median = std::sqrt(dist[static_cast<std::size_t>(k)]);
    if (!(median > 0.0)) {
        throw DegenerateData("median_heuristic: median pairwise distance is zero");
    }
    return median;
}

enum class BandwidthKind { fixed, power, median };

/// fixed: gamma; power: c * d^alpha; median: median_heuristic(pooled).
struct BandwidthRule {
    BandwidthKind kind = BandwidthKind::median;
    double value = 1.0;     // gamma for fixed, c for power
    double exponent = 0.5;  // power only

    [[nodiscard]] static BandwidthRule fixed(double gamma) { return {BandwidthKind::fixed, gamma, 0.0}; }
    [[nodiscard]] static BandwidthRule power(double c, double alpha) { return {BandwidthKind::power, c, alpha}; }
    [[nodiscard]] static BandwidthRule median() { return {BandwidthKind::median, 1.0, 0.0}; }

    void validate() const {
        if (kind != BandwidthKind::median && !(value > 0.0 && std::isfinite(value))) {
            throw PreconditionError("bandwidth rule: gamma and c must be positive");
        }
    }

    [[nodiscard]] bool needs_data() const { return kind == BandwidthKind::median; }

    /// "median", "fixed(5)", "d^0.75", "2*d^0.5", "d".
    [[nodiscard]] std::string label() const;
};

/// Parses the labels produced by BandwidthRule::label plus the CLI spellings
/// "median", "sqrt", "d", "<number>", "d^<a>" and "<c>*d^<a>".
[[nodiscard]] BandwidthRule parse_bandwidth_rule(const std::string& text);

[[nodiscard]] inline double resolve_bandwidth(const BandwidthRule& rule, std::size_t d,
                                              const Matrix* pooled = nullptr) {
    rule.validate();
    switch (rule.kind) {
        case BandwidthKind::fixed: return rule.value;
        case BandwidthKind::power: return rule.value * std::pow(static_cast<double>(d), rule.exponent);
        case BandwidthKind::median:
            if (pooled == nullptr || pooled->rows() == 0) {
                throw MissingData("resolve_bandwidth: median heuristic needs pooled samples");
            }
            return median_heuristic(*pooled);
    }
    return rule.value;
}

/// Stacks X over Y.
[[nodiscard]] inline Matrix pool_rows(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) throw DimensionMismatch("pool_rows: column counts differ");
    Matrix out(x.rows() + y.rows(), x.cols());
    out.topRows(x.rows()) = x;
    out.bottomRows(y.rows()) = y;
    return out;
}

inline std::string BandwidthRule::label() const {
    auto num = [](double v) {
        std::string s = std::to_string(v);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    };
    switch (kind) {
        case BandwidthKind::median: return "median";
        case BandwidthKind::fixed: return "fixed(" + num(value) + ")";
        case BandwidthKind::power:
            return (value == 1.0 ? std::string{} : num(value) + "*") + (exponent == 1.0 ? "d" : "d^" + num(exponent));
    }
    return "unknown";
}

inline BandwidthRule parse_bandwidth_rule(const std::string& text) {
    auto to_double = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) throw ConfigInvalid("bad bandwidth rule '" + text + "'");
        return v;
    };
    if (text == "median" || text == "median-heuristic") return BandwidthRule::median();
    if (text == "sqrt") return BandwidthRule::power(1.0, 0.5);
    if (text == "d") return BandwidthRule::power(1.0, 1.0);
    if (text.rfind("fixed(", 0) == 0 && text.back() == ')') {
        return BandwidthRule::fixed(to_double(text.substr(6, text.size() - 7)));
    }
    if (const auto pos = text.find("d^"); pos != std::string::npos) {
        double c = 1.0;
        if (pos > 0) {
            if (text[pos - 1] != '*') throw ConfigInvalid("bad bandwidth rule '" + text + "'");
            c = to_double(text.substr(0, pos - 1));
        }
        return BandwidthRule::power(c, to_double(text.substr(pos + 2)));
    }
    return BandwidthRule::fixed(to_double(text));
}

}  // namespace mmdhd
