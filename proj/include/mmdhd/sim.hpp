#pragma once

// Monte Carlo harness: rejection rates, Berry-Esseen ratios, MMD^2/sqrt(V)
// scaling curves, QQ tables and power-vs-dimension sweeps.
//
// Every repetition draws from substreams derived from (master_seed, cell,
// repetition), and all reductions run in index order, so outputs are
// bit-identical for any thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmdhd/errors.hpp"
#include "mmdhd/kernel.hpp"
#include "mmdhd/model.hpp"
#include "mmdhd/normal.hpp"
#include "mmdhd/parallel.hpp"
#include "mmdhd/seed.hpp"
#include "mmdhd/stat.hpp"
#include "mmdhd/theory.hpp"

namespace mmdhd::sim {

// ---------------------------------------------------------------------------
// Small statistics helpers

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
[[nodiscard]] inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionMismatch("fit_line: x and y differ in length");
    const auto n = static_cast<double>(x.size());
    if (x.size() < 2) throw PreconditionError("fit_line: need at least two points");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw PreconditionError("fit_line: need at least two distinct x values");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// OLS on (ln x, ln y).
[[nodiscard]] inline LineFit fit_loglog_slope(std::span<const Point> points) {
    std::vector<double> lx, ly;
    lx.reserve(points.size());
    ly.reserve(points.size());
    for (const auto& p : points) {
        if (!(p.x > 0.0) || !(p.y > 0.0)) throw NonPositiveValue("fit_loglog_slope: x and y must be positive");
        lx.push_back(std::log(p.x));
        ly.push_back(std::log(p.y));
    }
    return fit_line(lx, ly);
}

/// Average ranks (1-based), ties share the mean rank.
[[nodiscard]] inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

/// Spearman rank correlation (Pearson correlation of average ranks).
[[nodiscard]] inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw PreconditionError("spearman: need two equal-length series");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

/// sup_t |F_n(t) - Phi(t)| for a sample.
[[nodiscard]] inline double ks_distance_normal(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = normal_cdf(values[i]);
        worst = std::max({worst, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
    }
    return worst;
}

/// Mean and unbiased variance, mergeable in a fixed order (Chan et al.).
struct RunningMoments {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        count += 1.0;
        const double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }
    void merge(const RunningMoments& o) {
        if (o.count == 0.0) return;
        const double total = count + o.count;
        const double delta = o.mean - mean;
        mean += delta * o.count / total;
        m2 += o.m2 + delta * delta * count * o.count / total;
        count = total;
    }
    [[nodiscard]] double variance() const { return count > 1.0 ? m2 / (count - 1.0) : 0.0; }
};

// ---------------------------------------------------------------------------
// Model families indexed by dimension

/// Coordinate law plus an SNR rule; at(d) spreads ||delta|| = psi * sigma
/// equally over the d coordinates (P at delta, Q at the origin).
struct ModelFamily {
    CoordinateLaw law = CoordinateLaw::normal();
    double psi = 0.0;

    [[nodiscard]] ModelSpec at(std::size_t d) const { return ModelSpec::mean_shift(d, psi, law); }
};

/// Seed of a (d, ...) cell, so cells are independent of grid composition.
[[nodiscard]] inline Seed cell_seed(Seed master, std::uint64_t key) {
    return derive_seed(master, StreamTag::pilot, key);
}

// ---------------------------------------------------------------------------
// Rejection rates

struct RateEstimate {
    double rate = 0.0;
    double stderr_ = 0.0;  // sqrt(p (1 - p) / reps)
    std::size_t reps = 0;
};

[[nodiscard]] inline RateEstimate make_rate(std::size_t hits, std::size_t reps) {
    RateEstimate r;
    r.reps = reps;
    r.rate = static_cast<double>(hits) / static_cast<double>(reps);
    r.stderr_ = std::sqrt(r.rate * (1.0 - r.rate) / static_cast<double>(reps));
    return r;
}

/// Rejection rate of the linear-time test for each bandwidth rule; all rules
/// see the same data in a repetition. Power rules are resolved once, the
/// median heuristic afresh in every repetition.
[[nodiscard]] inline std::vector<RateEstimate> estimate_rejection_rates(const ModelSpec& model, std::size_t n,
                                                                        std::span<const BandwidthRule> rules,
                                                                        double alpha, std::size_t reps,
                                                                        Seed master_seed, unsigned threads = 1) {
    if (reps < 1) throw PreconditionError("estimate_rejection_rate: reps must be >= 1");
    if (rules.empty()) throw PreconditionError("estimate_rejection_rate: need at least one bandwidth rule");
    model.validate();
    std::vector<std::optional<double>> fixed_gamma(rules.size());
    for (std::size_t r = 0; r < rules.size(); ++r) {
        if (!rules[r].needs_data()) fixed_gamma[r] = resolve_bandwidth(rules[r], model.d);
    }
    std::vector<std::uint8_t> rejected(reps * rules.size(), 0);
    parallel_for(reps, threads, [&](std::size_t rep) {
        const auto sample = sample_pair(model, n, derive_seed(master_seed, StreamTag::repetition, rep));
        for (std::size_t r = 0; r < rules.size(); ++r) {
            const auto outcome = fixed_gamma[r] ? linear_test(sample.x, sample.y, KernelSpec::gaussian(*fixed_gamma[r]), alpha)
                                                : linear_test(sample.x, sample.y, rules[r], alpha);
            rejected[rep * rules.size() + r] = outcome.reject ? 1 : 0;
        }
    });
    std::vector<RateEstimate> out;
    for (std::size_t r = 0; r < rules.size(); ++r) {
        std::size_t hits = 0;
        for (std::size_t rep = 0; rep < reps; ++rep) hits += rejected[rep * rules.size() + r];
        out.push_back(make_rate(hits, reps));
    }
    return out;
}

[[nodiscard]] inline RateEstimate estimate_rejection_rate(const ModelSpec& model, std::size_t n,
                                                          const BandwidthRule& rule, double alpha, std::size_t reps,
                                                          Seed master_seed, unsigned threads = 1) {
    return estimate_rejection_rates(model, n, std::span(&rule, 1), alpha, reps, master_seed, threads).front();
}

// ---------------------------------------------------------------------------
// Berry-Esseen ratio

/// mean |h - mean h|^3 / s^3 with s^2 the unbiased sample variance.
[[nodiscard]] inline double be_ratio_from_h(std::span<const double> h) {
    if (h.size() < 2) throw PreconditionError("be_ratio: need at least two h values");
    const double n = static_cast<double>(h.size());
    const double mean = std::accumulate(h.begin(), h.end(), 0.0) / n;
    double ss = 0.0, abs3 = 0.0;
    for (const double v : h) {
        const double c = v - mean;
        ss += c * c;
        abs3 += std::abs(c) * c * c;
    }
    const double var = ss / (n - 1.0);
    if (!(var > 0.0)) throw DegenerateVariance("be_ratio: all h values are equal");
    return (abs3 / n) / std::pow(var, 1.5);
}

/// Empirical Berry-Esseen ratio xi_3 / V^(3/2) from m independent (z, z') pairs.
[[nodiscard]] inline double be_ratio_estimate(const ModelSpec& model, const KernelSpec& kernel, std::size_t m_pairs,
                                              Seed master_seed) {
    if (m_pairs < 100) throw PreconditionError("be_ratio_estimate: m_pairs must be >= 100");
    const auto sample = sample_pair(model, 2 * m_pairs, master_seed);
    const auto lin = mmd2_linear(kernel, sample.x, sample.y);
    return be_ratio_from_h(lin.h.values);
}

struct BeRatioRecord {
    std::size_t d = 0;
    double gamma = 0.0;
    double ratio = 0.0;
};

[[nodiscard]] inline std::vector<BeRatioRecord> be_ratio_curve(const ModelFamily& family, const BandwidthRule& rule,
                                                               std::span<const std::size_t> d_grid,
                                                               std::size_t m_pairs, Seed master_seed,
                                                               unsigned threads = 1) {
    if (rule.needs_data()) throw ConfigInvalid("be_ratio_curve: bandwidth rule must not depend on data");
    std::vector<BeRatioRecord> out(d_grid.size());
    parallel_for(d_grid.size(), threads, [&](std::size_t i) {
        const auto d = d_grid[i];
        const double gamma = resolve_bandwidth(rule, d);
        out[i] = {d, gamma, be_ratio_estimate(family.at(d), KernelSpec::gaussian(gamma), m_pairs, cell_seed(master_seed, d))};
    });
    return out;
}

// ---------------------------------------------------------------------------
// MMD^2 / sqrt(V) across dimensions

struct RatioRecord {
    std::size_t d = 0;
    std::string gamma_rule;
    double gamma = 0.0;
    double mmd2_hat = 0.0;  // mean of h
    double v_hat = 0.0;     // sample variance of h
    double ratio = 0.0;     // mmd2_hat / sqrt(v_hat)
    std::size_t pairs = 0;
};

/// Estimates MMD^2 / sqrt(V) for every (d, rule) from n_large / 2 independent
/// (z, z') pairs. The grid shares random numbers: each pair is drawn once in
/// dimension max(d_grid) and dimension d uses its first d coordinates (with
/// delta_i = psi sigma / sqrt(d)), which correlates the estimates across d.
[[nodiscard]] inline std::vector<RatioRecord> ratio_curve(const ModelFamily& family,
                                                          std::span<const BandwidthRule> rules,
                                                          std::span<const std::size_t> d_grid, std::size_t n_large,
                                                          Seed master_seed, unsigned threads = 1) {
    if (d_grid.empty() || rules.empty()) throw ConfigInvalid("ratio_curve: empty grid or rule list");
    if (!std::is_sorted(d_grid.begin(), d_grid.end()) ||
        std::adjacent_find(d_grid.begin(), d_grid.end()) != d_grid.end() || d_grid.front() == 0) {
        throw ConfigInvalid("ratio_curve: d_grid must be positive and strictly increasing");
    }
    for (const auto& r : rules) {
        if (r.needs_data()) throw ConfigInvalid("ratio_curve: bandwidth rules must not depend on data");
    }
    family.law.validate();
    const std::size_t pairs = n_large / 2;
    if (pairs < 2) throw PreconditionError("ratio_curve: n_large must be >= 4");

    const double sigma = std::sqrt(central_moments(family.law, 2).sigma2);
    const std::size_t nd = d_grid.size();
    const std::size_t nr = rules.size();
    std::vector<double> shift(nd), inv_g2(nd * nr), gammas(nd * nr);
    for (std::size_t i = 0; i < nd; ++i) {
        shift[i] = family.psi * sigma / std::sqrt(static_cast<double>(d_grid[i]));
        for (std::size_t r = 0; r < nr; ++r) {
            gammas[i * nr + r] = resolve_bandwidth(rules[r], d_grid[i]);
            inv_g2[i * nr + r] = 1.0 / (gammas[i * nr + r] * gammas[i * nr + r]);
        }
    }
    const std::size_t d_max = d_grid.back();
    constexpr std::size_t chunk = 2048;
    const std::size_t chunks = (pairs + chunk - 1) / chunk;
    std::vector<std::vector<RunningMoments>> partial(chunks, std::vector<RunningMoments>(nd * nr));

    parallel_for(chunks, threads, [&](std::size_t c) {
        auto eng = make_engine(master_seed, StreamTag::pair_chunk, c);
        CoordinateSampler sampler(family.law);
        std::vector<double> buf(4 * d_max);
        auto& acc = partial[c];
        const std::size_t end = std::min(pairs, (c + 1) * chunk);
        for (std::size_t p = c * chunk; p < end; ++p) {
            sampler.fill(eng, buf.data(), buf.size());
            const double* s = buf.data();            // x  - mu_P
            const double* sp = s + d_max;            // x' - mu_P
            const double* t = sp + d_max;            // y  - mu_Q
            const double* tp = t + d_max;            // y' - mu_Q
            // running sums of squares and plain sums of the four differences
            double q_xx = 0, q_yy = 0, q_xy = 0, q_yx = 0, l_xy = 0, l_yx = 0;
            std::size_t j = 0;
            for (std::size_t i = 0; i < nd; ++i) {
                for (; j < d_grid[i]; ++j) {
                    const double a = s[j] - sp[j];
                    const double b = t[j] - tp[j];
                    const double e = s[j] - tp[j];
                    const double f = sp[j] - t[j];
                    q_xx += a * a;
                    q_yy += b * b;
                    q_xy += e * e;
                    q_yx += f * f;
                    l_xy += e;
                    l_yx += f;
                }
                const double c0 = shift[i];
                const double dd = static_cast<double>(d_grid[i]) * c0 * c0;
                const double dist_xy = q_xy + 2.0 * c0 * l_xy + dd;
                const double dist_yx = q_yx + 2.0 * c0 * l_yx + dd;
                for (std::size_t r = 0; r < nr; ++r) {
                    const double w = inv_g2[i * nr + r];
                    const double h = std::exp(-q_xx * w) + std::exp(-q_yy * w) - std::exp(-dist_xy * w) -
                                     std::exp(-dist_yx * w);
                    acc[i * nr + r].add(h);
                }
            }
        }
    });

    std::vector<RunningMoments> total(nd * nr);
    for (const auto& part : partial)
        for (std::size_t k = 0; k < total.size(); ++k) total[k].merge(part[k]);

    std::vector<RatioRecord> out;
    for (std::size_t i = 0; i < nd; ++i) {
        for (std::size_t r = 0; r < nr; ++r) {
            const auto& m = total[i * nr + r];
            RatioRecord rec;
            rec.d = d_grid[i];
            rec.gamma_rule = rules[r].label();
            rec.gamma = gammas[i * nr + r];
            rec.mmd2_hat = m.mean;
            rec.v_hat = m.variance();
            rec.ratio = rec.v_hat > 0.0 ? m.mean / std::sqrt(rec.v_hat) : 0.0;
            rec.pairs = pairs;
            out.push_back(std::move(rec));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// QQ tables

struct QqRow {
    std::size_t d = 0;
    std::size_t index = 0;            // 1-based rank
    double statistic = 0.0;           // sorted sqrt(n) MMD^2_l / sqrt(v)
    double normal_quantile = 0.0;     // Phi^{-1}((index - 0.5) / reps)
};

struct QqFit {
    std::size_t d = 0;
    double slope = 0.0;
    double intercept = 0.0;
    double ks_raw = 0.0;           // KS distance of the raw statistics to Phi
    double ks_standardized = 0.0;  // after centring and scaling by the sample sd
    double mean = 0.0;
    double sd = 0.0;
};

struct QqTable {
    std::vector<QqRow> rows;
    std::vector<QqFit> fits;
};

/// `reps` replicates of the test statistic per d, sorted and paired with
/// normal quantiles; the fit regresses statistic on quantile.
[[nodiscard]] inline QqTable qq_export(const ModelFamily& family, std::size_t n, std::span<const std::size_t> d_list,
                                       const BandwidthRule& rule, std::size_t reps, Seed master_seed,
                                       double alpha = 0.05, unsigned threads = 1) {
    if (reps < 100) throw PreconditionError("qq_export: reps must be >= 100");
    QqTable table;
    for (const auto d : d_list) {
        const auto model = family.at(d);
        const Seed seed_d = cell_seed(master_seed, d);
        std::optional<double> fixed;
        if (!rule.needs_data()) fixed = resolve_bandwidth(rule, d);
        std::vector<double> stats(reps);
        parallel_for(reps, threads, [&](std::size_t rep) {
            const auto sample = sample_pair(model, n, derive_seed(seed_d, StreamTag::repetition, rep));
            const auto out = fixed ? linear_test(sample.x, sample.y, KernelSpec::gaussian(*fixed), alpha)
                                   : linear_test(sample.x, sample.y, rule, alpha);
            stats[rep] = out.statistic;
        });
        std::sort(stats.begin(), stats.end());
        std::vector<double> q(reps);
        for (std::size_t i = 0; i < reps; ++i) {
            q[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(reps));
            table.rows.push_back({d, i + 1, stats[i], q[i]});
        }
        QqFit fit;
        fit.d = d;
        const auto line = fit_line(q, stats);
        fit.slope = line.slope;
        fit.intercept = line.intercept;
        RunningMoments m;
        for (const double s : stats) m.add(s);
        fit.mean = m.mean;
        fit.sd = std::sqrt(m.variance());
        fit.ks_raw = ks_distance_normal(stats);
        std::vector<double> z(stats);
        for (auto& v : z) v = (v - fit.mean) / fit.sd;
        fit.ks_standardized = ks_distance_normal(std::move(z));
        table.fits.push_back(fit);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Power sweeps

enum class Preset { setting1, setting2, setting3, setting4, be_ratio, ratio_curve, qq };

[[nodiscard]] inline std::string to_string(Preset p) {
    switch (p) {
        case Preset::setting1: return "setting1";
        case Preset::setting2: return "setting2";
        case Preset::setting3: return "setting3";
        case Preset::setting4: return "setting4";
        case Preset::be_ratio: return "be-ratio";
        case Preset::ratio_curve: return "ratio-curve";
        case Preset::qq: return "qq";
    }
    return "unknown";
}

[[nodiscard]] inline std::optional<Preset> parse_preset(const std::string& s) {
    for (auto p : {Preset::setting1, Preset::setting2, Preset::setting3, Preset::setting4, Preset::be_ratio,
                   Preset::ratio_curve, Preset::qq}) {
        if (to_string(p) == s) return p;
    }
    return std::nullopt;
}

/// n = fixed value, or n = d.
struct SampleSizeRule {
    bool equal_d = false;
    std::size_t n = 50;

    [[nodiscard]] std::size_t at(std::size_t d) const { return equal_d ? d : n; }
    [[nodiscard]] std::string label() const { return equal_d ? "equal-d" : "fixed(" + std::to_string(n) + ")"; }
};

/// psi = c * d^a (a = 0 gives a fixed SNR).
struct SnrRule {
    double c = 0.0;
    double a = 0.0;

    [[nodiscard]] double at(std::size_t d) const { return c * std::pow(static_cast<double>(d), a); }
};

struct SweepConfig {
    std::optional<Preset> preset;
    std::vector<std::size_t> d_grid;
    SampleSizeRule n_rule;
    SnrRule psi_rule;
    std::vector<BandwidthRule> bandwidth_rules;
    CoordinateLaw law = CoordinateLaw::normal();
    double alpha = 0.05;
    std::size_t reps = 1000;
    Seed master_seed = 0;
    unsigned threads = 1;
    /// Run the same grid with delta = 0 (null calibration).
    bool force_null = false;

    void validate() const {
        if (reps < 1) throw ConfigInvalid("sweep: reps must be >= 1");
        if (d_grid.empty()) throw ConfigInvalid("sweep: d_grid must be nonempty");
        for (std::size_t i = 0; i < d_grid.size(); ++i) {
            if (d_grid[i] == 0) throw ConfigInvalid("sweep: dimensions must be positive");
            if (i > 0 && d_grid[i] <= d_grid[i - 1]) throw ConfigInvalid("sweep: d_grid must be strictly increasing");
        }
        if (bandwidth_rules.empty()) throw ConfigInvalid("sweep: need at least one bandwidth rule");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigInvalid("sweep: alpha must lie in (0, 1)");
        if (!n_rule.equal_d && n_rule.n < 4) throw ConfigInvalid("sweep: n must be >= 4");
        if (!(psi_rule.c >= 0.0)) throw ConfigInvalid("sweep: psi must be >= 0");
        try {
            law.validate();
        } catch (const Error& e) {
            throw ConfigInvalid(std::string("sweep: ") + e.what());
        }
        if (!law.has_variance()) throw ConfigInvalid("sweep: coordinate law must have finite variance");
    }
};

[[nodiscard]] inline std::vector<std::size_t> arithmetic_grid(std::size_t first, std::size_t last, std::size_t step) {
    std::vector<std::size_t> g;
    for (std::size_t d = first; d <= last; d += step) g.push_back(d);
    return g;
}

/// The four power-vs-dimension settings: Gaussian coordinates, d = 40..200
/// step 20, bandwidths {median, d^0.5, d^0.75, d}, alpha = 0.05.
///   setting1: n = 50, psi = 2.5        setting2: n = 50, psi = d^(1/4)
///   setting3: n = d,  psi = 2          setting4: n = d,  psi = 0.3 d^(1/2)
[[nodiscard]] inline SweepConfig preset_config(Preset p) {
    SweepConfig c;
    c.preset = p;
    c.d_grid = arithmetic_grid(40, 200, 20);
    c.bandwidth_rules = {BandwidthRule::median(), BandwidthRule::power(1.0, 0.5), BandwidthRule::power(1.0, 0.75),
                         BandwidthRule::power(1.0, 1.0)};
    switch (p) {
        case Preset::setting1: c.n_rule = {false, 50}; c.psi_rule = {2.5, 0.0}; break;
        case Preset::setting2: c.n_rule = {false, 50}; c.psi_rule = {1.0, 0.25}; break;
        case Preset::setting3: c.n_rule = {true, 0}; c.psi_rule = {2.0, 0.0}; break;
        case Preset::setting4: c.n_rule = {true, 0}; c.psi_rule = {0.3, 0.5}; break;
        default: throw ConfigInvalid("preset " + to_string(p) + " is not a power sweep");
    }
    return c;
}

struct SweepRecord {
    std::size_t d = 0;
    std::size_t n = 0;
    std::string gamma_rule;
    double gamma_value = 0.0;  // NaN for the median heuristic (data dependent)
    double rejection_rate = 0.0;
    double stderr_ = 0.0;
    double predicted_beta = 0.0;
    std::size_t reps = 0;
};

struct RuleSummary {
    std::string gamma_rule;
    std::optional<LineFit> loglog;  // ln(rate) on ln(d); empty if some rate is 0
    double spearman = 0.0;          // rate vs d
    double mean_abs_error = 0.0;    // |rate - predicted_beta| averaged over d
    double max_rate = 0.0;
};

struct SweepSummary {
    std::vector<RuleSummary> rules;
    std::vector<double> spread_by_d;  // max - min rate across rules at each d
    double max_spread = 0.0;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    SweepSummary summary;
};

[[nodiscard]] inline SweepSummary summarize(const SweepConfig& config, const std::vector<SweepRecord>& records) {
    const std::size_t nd = config.d_grid.size();
    const std::size_t nr = config.bandwidth_rules.size();
    SweepSummary s;
    for (std::size_t r = 0; r < nr; ++r) {
        RuleSummary rs;
        rs.gamma_rule = config.bandwidth_rules[r].label();
        std::vector<Point> pts;
        std::vector<double> ds, rates;
        bool positive = true;
        for (std::size_t i = 0; i < nd; ++i) {
            const auto& rec = records[i * nr + r];
            ds.push_back(static_cast<double>(rec.d));
            rates.push_back(rec.rejection_rate);
            positive = positive && rec.rejection_rate > 0.0;
            pts.push_back({static_cast<double>(rec.d), rec.rejection_rate});
            rs.mean_abs_error += std::abs(rec.rejection_rate - rec.predicted_beta) / static_cast<double>(nd);
            rs.max_rate = std::max(rs.max_rate, rec.rejection_rate);
        }
        if (positive && nd >= 2) rs.loglog = fit_loglog_slope(pts);
        if (nd >= 2) rs.spearman = spearman(ds, rates);
        s.rules.push_back(std::move(rs));
    }
    for (std::size_t i = 0; i < nd; ++i) {
        double lo = 1.0, hi = 0.0;
        for (std::size_t r = 0; r < nr; ++r) {
            lo = std::min(lo, records[i * nr + r].rejection_rate);
            hi = std::max(hi, records[i * nr + r].rejection_rate);
        }
        s.spread_by_d.push_back(hi - lo);
        s.max_spread = std::max(s.max_spread, hi - lo);
    }
    return s;
}

/// Power of the linear-time test over the d grid for every bandwidth rule.
/// Records are ordered by d, then by rule.
[[nodiscard]] inline SweepResult run_sweep(const SweepConfig& config) {
    config.validate();
    SweepResult result;
    const auto moments = central_moments(config.law, 2);
    for (const auto d : config.d_grid) {
        const std::size_t n = config.n_rule.at(d);
        if (n < 4) throw ConfigInvalid("sweep: n must be >= 4 at every d");
        const double psi = config.force_null ? 0.0 : config.psi_rule.at(d);
        const auto model = ModelSpec::mean_shift(d, psi, config.law);
        const auto rates = estimate_rejection_rates(model, n, config.bandwidth_rules, config.alpha, config.reps,
                                                    cell_seed(config.master_seed, d), config.threads);
        auto inputs = theory::TheoryInputs::with_delta_norm(n, d, moments.sigma2, psi * std::sqrt(moments.sigma2),
                                                            1.0, config.alpha);
        const double beta = theory::power_prediction(inputs).beta;
        for (std::size_t r = 0; r < config.bandwidth_rules.size(); ++r) {
            const auto& rule = config.bandwidth_rules[r];
            SweepRecord rec;
            rec.d = d;
            rec.n = n;
            rec.gamma_rule = rule.label();
            rec.gamma_value = rule.needs_data() ? std::numeric_limits<double>::quiet_NaN() : resolve_bandwidth(rule, d);
            rec.rejection_rate = rates[r].rate;
            rec.stderr_ = rates[r].stderr_;
            rec.predicted_beta = beta;
            rec.reps = rates[r].reps;
            result.records.push_back(std::move(rec));
        }
    }
    result.summary = summarize(config, result.records);
    return result;
}

}  // namespace mmdhd::sim
