#pragma once

// CSV sample files and JSON/CSV result serialization.

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmdhd/errors.hpp"
#include "mmdhd/model.hpp"
#include "mmdhd/sim.hpp"
#include "mmdhd/stat.hpp"
#include "mmdhd/theory.hpp"

namespace mmdhd::io {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline bool parse_number(const std::string& s, double& value) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    value = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && errno != ERANGE;
}

}  // namespace detail

/// Parses CSV text: one observation per row, one coordinate per column. A
/// first row with any non-numeric field is taken as a header. Blank lines
/// are skipped; line numbers in errors are 1-based.
[[nodiscard]] inline Matrix parse_samples(std::istream& in) {
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_fields(line);
        std::vector<double> row(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && detail::parse_number(fields[i], row[i]);
        if (first) {
            first = false;
            cols = fields.size();
            if (!numeric) continue;  // header
        }
        if (fields.size() != cols) {
            throw RaggedRows("expected " + std::to_string(cols) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        if (!numeric) throw ParseError("non-numeric field", line_no);
        values.insert(values.end(), row.begin(), row.end());
        ++rows;
    }
    if (rows == 0) throw ParseError("no data rows", line_no);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

[[nodiscard]] inline Matrix load_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'", 0);
    return parse_samples(in);
}

/// Writes rows with 17 significant digits so that parse_samples round-trips
/// every value exactly.
inline void write_samples(std::ostream& out, const Matrix& m) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
}

/// JSON has no infinities or NaN; they are written as null.
[[nodiscard]] inline nlohmann::json number(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

[[nodiscard]] inline nlohmann::json to_json(const TestOutcome& o) {
    return {{"mmd2_l", number(o.mmd2_l)},
            {"v", number(o.v)},
            {"statistic", number(o.statistic)},
            {"z_alpha", number(o.z_alpha)},
            {"reject", o.reject},
            {"p_value", number(o.p_value)},
            {"n", o.n},
            {"gamma_used", number(o.gamma_used)},
            {"kernel", KernelSpec{o.kernel, 1.0}.name()},
            {"trimmed", o.trimmed},
            {"degenerate", o.degenerate}};
}

[[nodiscard]] inline nlohmann::json to_json(const theory::PowerPrediction& p) {
    return {{"beta", number(p.beta)},
            {"finite_sample_lower", number(p.finite_sample_lower)},
            {"regime", theory::to_string(p.regime)}};
}

[[nodiscard]] inline nlohmann::json to_json(const CoordinateLaw& law) {
    nlohmann::json j = {{"family", law.name()}, {"scale", law.scale}};
    if (law.family == LawFamily::student_t) j["dof"] = law.dof;
    return j;
}

[[nodiscard]] inline nlohmann::json to_json(const sim::SweepConfig& c) {
    std::vector<std::string> rules;
    for (const auto& r : c.bandwidth_rules) rules.push_back(r.label());
    return {{"preset", c.preset ? nlohmann::json(sim::to_string(*c.preset)) : nlohmann::json(nullptr)},
            {"d_grid", c.d_grid},
            {"n_rule", c.n_rule.label()},
            {"psi_rule", {{"c", c.psi_rule.c}, {"a", c.psi_rule.a}}},
            {"bandwidth_rules", rules},
            {"law", to_json(c.law)},
            {"alpha", c.alpha},
            {"reps", c.reps},
            {"master_seed", c.master_seed},
            {"force_null", c.force_null},
            {"delta_direction", "equal spread, delta_i = psi * sigma / sqrt(d)"}};
}

[[nodiscard]] inline nlohmann::json to_json(const sim::SweepSummary& s) {
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : s.rules) {
        nlohmann::json j = {{"gamma_rule", r.gamma_rule},
                            {"spearman", number(r.spearman)},
                            {"mean_abs_error_vs_theory", number(r.mean_abs_error)},
                            {"max_rate", number(r.max_rate)}};
        if (r.loglog) {
            j["loglog_slope"] = number(r.loglog->slope);
            j["loglog_intercept"] = number(r.loglog->intercept);
        } else {
            j["loglog_slope"] = nullptr;
            j["loglog_intercept"] = nullptr;
        }
        rules.push_back(std::move(j));
    }
    return {{"rules", rules}, {"spread_by_d", s.spread_by_d}, {"max_spread", s.max_spread}};
}

inline void write_sweep_csv(std::ostream& out, const std::vector<sim::SweepRecord>& records) {
    out << "d,n,gamma_rule,gamma_value,rejection_rate,stderr,predicted_beta,reps\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : records) {
        out << r.d << ',' << r.n << ',' << r.gamma_rule << ',';
        if (std::isfinite(r.gamma_value)) out << r.gamma_value;
        out << ',' << r.rejection_rate << ',' << r.stderr_ << ',' << r.predicted_beta << ',' << r.reps << '\n';
    }
}

inline void write_qq_csv(std::ostream& out, const std::vector<sim::QqRow>& rows) {
    out << "d,index,statistic,normal_quantile\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows) out << r.d << ',' << r.index << ',' << r.statistic << ',' << r.normal_quantile << '\n';
}

inline void write_ratio_csv(std::ostream& out, const std::vector<sim::RatioRecord>& rows) {
    out << "d,gamma_rule,gamma_value,mmd2_hat,v_hat,ratio,pairs\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows) {
        out << r.d << ',' << r.gamma_rule << ',' << r.gamma << ',' << r.mmd2_hat << ',' << r.v_hat << ',' << r.ratio
            << ',' << r.pairs << '\n';
    }
}

inline void write_be_csv(std::ostream& out, const std::vector<sim::BeRatioRecord>& rows) {
    out << "d,gamma_value,be_ratio\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows) out << r.d << ',' << r.gamma << ',' << r.ratio << '\n';
}

}  // namespace mmdhd::io
