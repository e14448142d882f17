#pragma once

// Command-line front end. dispatch() is the whole program minus main(), so
// tests can drive it with string argv and captured streams.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 verification failure.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mmdhd/errors.hpp"
#include "mmdhd/io.hpp"
#include "mmdhd/kernel.hpp"
#include "mmdhd/model.hpp"
#include "mmdhd/sim.hpp"
#include "mmdhd/stat.hpp"
#include "mmdhd/theory.hpp"
#include "mmdhd/verify.hpp"

namespace mmdhd::cli {

enum ExitCode : int { ok = 0, usage = 1, data_error = 2, verification_failure = 3 };

namespace detail {

using nlohmann::json;

struct Common {
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string out;

    /// --seed, else MMDHD_SEED, else 0.
    [[nodiscard]] Seed resolved_seed() const {
        if (seed) return *seed;
        if (const char* env = std::getenv("MMDHD_SEED"); env != nullptr && *env != '\0') {
            char* end = nullptr;
            errno = 0;
            const auto v = std::strtoull(env, &end, 10);
            if (*end != '\0' || errno == ERANGE) throw ConfigInvalid("MMDHD_SEED is not an unsigned integer");
            return v;
        }
        return 0;
    }
    [[nodiscard]] unsigned resolved_threads() const {
        return threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    }
};

inline void add_common(CLI::App* app, Common& c) {
    app->add_option("--seed", c.seed, "Master seed (default: $MMDHD_SEED, else 0)");
    app->add_option("--threads", c.threads, "Worker cap; results do not depend on it (default: all cores)");
    app->add_option("--out", c.out, "Write the table (CSV) or result (JSON) here instead of stdout");
}

/// Writes `text` to --out if given, else to `out`.
inline void emit(const Common& c, std::ostream& out, const std::string& text) {
    if (c.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(c.out);
    if (!f) throw ConfigInvalid("cannot write '" + c.out + "'");
    f << text;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline CoordinateLaw parse_law(const std::string& family, double dof, double scale) {
    if (family == "normal" || family == "standard-normal") return CoordinateLaw::normal(scale);
    if (family == "t" || family == "student-t") return CoordinateLaw::student_t(dof, scale);
    if (family == "uniform" || family == "uniform-centered") return CoordinateLaw::uniform(scale);
    throw ConfigInvalid("unknown coordinate law '" + family + "'");
}

inline std::vector<BandwidthRule> parse_rules(const std::vector<std::string>& texts) {
    std::vector<BandwidthRule> rules;
    for (const auto& t : texts) rules.push_back(parse_bandwidth_rule(t));
    return rules;
}

/// Reads lower-snake SweepConfig keys from a JSON document onto `c`.
inline void apply_config_json(const json& j, sim::SweepConfig& c) {
    if (!j.is_object()) throw ConfigInvalid("sweep config must be a JSON object");
    static const std::vector<std::string> known = {"preset", "d_grid", "n_rule", "psi_rule", "bandwidth_rules", "law",
                                                   "alpha", "reps", "master_seed", "threads", "force_null"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigInvalid("unknown sweep config key '" + key + "'");
        }
    }
    try {
        if (j.contains("d_grid")) c.d_grid = j.at("d_grid").get<std::vector<std::size_t>>();
        if (j.contains("n_rule")) {
            const auto& v = j.at("n_rule");
            if (v.is_string() && v.get<std::string>() == "equal-d") {
                c.n_rule = {true, 0};
            } else if (v.is_number_unsigned()) {
                c.n_rule = {false, v.get<std::size_t>()};
            } else if (v.is_object() && v.contains("fixed")) {
                c.n_rule = {false, v.at("fixed").get<std::size_t>()};
            } else {
                throw ConfigInvalid("n_rule must be \"equal-d\", an integer or {\"fixed\": n}");
            }
        }
        if (j.contains("psi_rule")) {
            const auto& v = j.at("psi_rule");
            if (v.is_number()) {
                c.psi_rule = {v.get<double>(), 0.0};
            } else if (v.is_object() && v.contains("fixed")) {
                c.psi_rule = {v.at("fixed").get<double>(), 0.0};
            } else if (v.is_object()) {
                c.psi_rule = {v.at("c").get<double>(), v.value("a", 0.0)};
            } else {
                throw ConfigInvalid("psi_rule must be a number, {\"fixed\": psi} or {\"c\": c, \"a\": a}");
            }
        }
        if (j.contains("bandwidth_rules")) c.bandwidth_rules = parse_rules(j.at("bandwidth_rules").get<std::vector<std::string>>());
        if (j.contains("law")) {
            const auto& v = j.at("law");
            if (v.is_string()) {
                c.law = parse_law(v.get<std::string>(), 0.0, 1.0);
            } else {
                c.law = parse_law(v.at("family").get<std::string>(), v.value("dof", 0.0), v.value("scale", 1.0));
            }
        }
        if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
        if (j.contains("reps")) c.reps = j.at("reps").get<std::size_t>();
        if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
        if (j.contains("force_null")) c.force_null = j.at("force_null").get<bool>();
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("sweep config: ") + e.what());
    }
}

inline json be_json(const std::vector<sim::BeRatioRecord>& recs, const std::string& rule, Seed seed,
                    std::size_t m) {
    json rows = json::array();
    std::vector<sim::Point> pts;
    for (const auto& r : recs) {
        rows.push_back({{"d", r.d}, {"gamma", r.gamma}, {"be_ratio", r.ratio}});
        pts.push_back({static_cast<double>(r.d), r.ratio});
    }
    json j = {{"gamma_rule", rule}, {"m_pairs", m}, {"seed", seed}, {"records", rows},
              {"normal_reference", 2.0 * std::sqrt(2.0 / std::numbers::pi)}};
    if (recs.size() >= 2) {
        // ratio regressed on ln d
        std::vector<double> lx, y;
        for (const auto& p : pts) {
            lx.push_back(std::log(p.x));
            y.push_back(p.y);
        }
        j["slope_vs_log_d"] = sim::fit_line(lx, y).slope;
    }
    return j;
}

inline json qq_json(const sim::QqTable& t, std::size_t n, const std::string& rule, double psi, Seed seed) {
    json fits = json::array();
    for (const auto& f : t.fits) {
        fits.push_back({{"d", f.d},
                        {"slope", f.slope},
                        {"intercept", f.intercept},
                        {"mean", f.mean},
                        {"sd", f.sd},
                        {"ks_raw", f.ks_raw},
                        {"ks_standardized", f.ks_standardized}});
    }
    return {{"n", n}, {"gamma_rule", rule}, {"psi", psi}, {"seed", seed},
            {"berry_esseen_bound", theory::berry_esseen_bound(n)}, {"fits", fits}};
}

inline json ratio_json(const std::vector<sim::RatioRecord>& recs, const std::vector<BandwidthRule>& rules,
                       double psi, Seed seed) {
    json out = {{"psi", psi}, {"seed", seed}};
    json per_rule = json::array();
    for (const auto& rule : rules) {
        std::vector<sim::Point> pts;
        for (const auto& r : recs)
            if (r.gamma_rule == rule.label() && r.ratio > 0.0) pts.push_back({static_cast<double>(r.d), r.ratio});
        json e = {{"gamma_rule", rule.label()}};
        e["loglog_slope"] = pts.size() >= 2 ? json(sim::fit_loglog_slope(pts).slope) : json(nullptr);
        per_rule.push_back(e);
    }
    out["rules"] = per_rule;
    return out;
}

}  // namespace detail

/// Runs one command line. Output goes to `out` (or --out), diagnostics to `err`.
inline int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using detail::json;
    CLI::App app{"Linear-time kernel MMD two-sample test: tests, predictions, simulations and oracle checks",
                 "mmdhd"};
    app.require_subcommand(1);

    // test
    detail::Common test_c;
    std::string x_path, y_path, test_bw = "median", test_kernel = "gaussian";
    double test_alpha = 0.05;
    auto* test = app.add_subcommand("test", "Run the linear-time test on two CSV samples");
    test->add_option("--x", x_path, "CSV of the first sample (one row per observation)")->required()->check(CLI::ExistingFile);
    test->add_option("--y", y_path, "CSV of the second sample")->required()->check(CLI::ExistingFile);
    test->add_option("--alpha", test_alpha, "Level")->check(CLI::Range(0.0, 1.0));
    test->add_option("--bandwidth", test_bw, "median | fixed(g) | <g> | d^a | c*d^a | sqrt");
    test->add_option("--kernel", test_kernel, "gaussian | laplace | linear");
    detail::add_common(test, test_c);

    // predict
    detail::Common pred_c;
    std::size_t pred_n = 0, pred_d = 0;
    double pred_sigma = 1.0, pred_alpha = 0.05, pred_regime_c = 1.0;
    std::optional<double> pred_delta_norm, pred_psi, pred_gamma;
    auto* predict = app.add_subcommand("predict", "Closed-form power, MMD^2 and variance predictions");
    predict->add_option("--n", pred_n, "Observations per sample")->required()->check(CLI::PositiveNumber);
    predict->add_option("--d", pred_d, "Dimension")->required()->check(CLI::PositiveNumber);
    predict->add_option("--sigma", pred_sigma, "Coordinate standard deviation")->check(CLI::PositiveNumber);
    auto* dn = predict->add_option("--delta-norm", pred_delta_norm, "||mu_P - mu_Q||");
    predict->add_option("--psi", pred_psi, "SNR ||delta|| / sigma")->excludes(dn);
    predict->add_option("--gamma", pred_gamma, "Bandwidth for MMD^2, V and the regime flag (default sqrt(d))");
    predict->add_option("--alpha", pred_alpha, "Level")->check(CLI::Range(0.0, 1.0));
    predict->add_option("--regime-constant", pred_regime_c, "c in the validated-regime rule gamma >= c sqrt(d)");
    detail::add_common(predict, pred_c);

    // sweep
    detail::Common sweep_c;
    std::string preset_name, config_path, summary_path;
    std::optional<std::size_t> sweep_reps, sweep_n_large;
    std::optional<double> sweep_alpha;
    std::vector<std::size_t> sweep_grid;
    bool force_null = false;
    auto* sweep = app.add_subcommand("sweep", "Run a simulation preset or a JSON-configured power sweep");
    sweep->add_option("--preset", preset_name, "setting1..4 | be-ratio | ratio-curve | qq");
    sweep->add_option("--config", config_path, "JSON file with SweepConfig keys")->check(CLI::ExistingFile);
    sweep->add_option("--reps", sweep_reps, "Repetitions per cell")->check(CLI::PositiveNumber);
    sweep->add_option("--alpha", sweep_alpha, "Level")->check(CLI::Range(0.0, 1.0));
    sweep->add_option("--d-grid", sweep_grid, "Dimensions (space or comma separated)")->delimiter(',');
    sweep->add_option("--n-large", sweep_n_large, "Observations per sample for ratio-curve");
    sweep->add_option("--summary", summary_path, "Write the JSON summary here instead of stdout");
    sweep->add_flag("--force-null", force_null, "Set delta = 0 (null calibration)");
    detail::add_common(sweep, sweep_c);

    // verify
    detail::Common ver_c;
    std::string suite = "all";
    double inject = 0.0;
    auto* ver = app.add_subcommand("verify", "Check closed forms against independent oracles");
    ver->add_option("--suite", suite, "all | integral-expansions | mmd2-closed-form | variance-closed-form | cq-identity | rotation-invariance");
    ver->add_option("--inject-error", inject, "Scale every value under test by (1 + e) to exercise failure handling");
    detail::add_common(ver, ver_c);

    // beratio
    detail::Common be_c;
    std::vector<std::size_t> be_grid = {40, 200, 400, 1000};
    std::string be_bw = "d^0.75", be_law = "normal";
    double be_dof = 6.0, be_psi = 0.0;
    std::size_t be_m = 1000;
    auto* be = app.add_subcommand("beratio", "Empirical Berry-Esseen ratio of h across dimensions");
    be->add_option("--d-grid", be_grid, "Dimensions")->delimiter(',');
    be->add_option("--bandwidth", be_bw, "Data-free bandwidth rule");
    be->add_option("--m", be_m, "Independent (z, z') pairs per dimension")->check(CLI::Range(std::size_t{100}, std::size_t{1} << 40));
    be->add_option("--law", be_law, "normal | student-t | uniform");
    be->add_option("--dof", be_dof, "Degrees of freedom for student-t");
    be->add_option("--psi", be_psi, "SNR of the mean shift");
    detail::add_common(be, be_c);

    // qq
    detail::Common qq_c;
    std::vector<std::size_t> qq_grid = {50, 100, 200};
    std::string qq_bw = "median";
    std::size_t qq_n = 50, qq_reps = 1000;
    double qq_psi = 0.0;
    auto* qq = app.add_subcommand("qq", "Normal QQ table of the test statistic");
    qq->add_option("--d-grid", qq_grid, "Dimensions")->delimiter(',');
    qq->add_option("--n", qq_n, "Observations per sample")->check(CLI::Range(std::size_t{4}, std::size_t{1} << 40));
    qq->add_option("--reps", qq_reps, "Replicates per dimension")->check(CLI::Range(std::size_t{100}, std::size_t{1} << 40));
    qq->add_option("--bandwidth", qq_bw, "Bandwidth rule");
    qq->add_option("--psi", qq_psi, "SNR of the mean shift (0 = null)");
    detail::add_common(qq, qq_c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return usage;
    }

    try {
        if (*test) {
            const Matrix x = io::load_samples(x_path);
            const Matrix y = io::load_samples(y_path);
            if (x.rows() != y.rows() || x.cols() != y.cols()) {
                throw DimensionMismatch("X is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                        " but Y is " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
            }
            const auto rule = parse_bandwidth_rule(test_bw);
            TestOutcome o;
            if (test_kernel == "gaussian") {
                o = linear_test(x, y, rule, test_alpha);
            } else if (test_kernel == "laplace" || test_kernel == "linear") {
                const Matrix pooled = pool_rows(x, y);
                const double g = resolve_bandwidth(rule, static_cast<std::size_t>(x.cols()), &pooled);
                o = linear_test(x, y, test_kernel == "laplace" ? KernelSpec::laplace(g) : KernelSpec::linear(),
                                test_alpha);
            } else {
                throw ConfigInvalid("unknown kernel '" + test_kernel + "'");
            }
            if (o.trimmed) err << "warning: odd n, the last observation of each sample was dropped\n";
            auto j = io::to_json(o);
            j["alpha"] = test_alpha;
            j["bandwidth_rule"] = rule.label();
            j["seed"] = test_c.resolved_seed();
            detail::emit(test_c, out, detail::dump(j));
            return ok;
        }

        if (*predict) {
            if (!pred_delta_norm && !pred_psi) throw ConfigInvalid("predict: give --delta-norm or --psi");
            const double s2 = pred_sigma * pred_sigma;
            const double norm = pred_delta_norm ? *pred_delta_norm : *pred_psi * pred_sigma;
            if (norm < 0.0) throw ConfigInvalid("predict: delta norm must be >= 0");
            const double gamma = pred_gamma ? *pred_gamma : std::sqrt(static_cast<double>(pred_d));
            auto in = theory::TheoryInputs::with_delta_norm(pred_n, pred_d, s2, norm, gamma, pred_alpha);
            in.regime_constant = pred_regime_c;
            in.mu4 = 3.0 * s2 * s2;
            in.validate();
            const double psi = norm / pred_sigma;
            auto j = io::to_json(theory::power_prediction(in));
            j["population_mmd2"] = theory::population_mmd2_approx(in);
            j["variance_V"] = theory::variance_V_approx(in);
            j["gamma"] = gamma;
            j["psi"] = psi;
            j["corollary_low_snr"] = theory::corollary_rate(theory::SnrRegime::low_snr, pred_n, pred_d, psi);
            j["corollary_high_snr"] = theory::corollary_rate(theory::SnrRegime::high_snr, pred_n, pred_d, psi);
            j["cq_low_snr"] = theory::cq_power_prediction(theory::SnrRegime::low_snr, pred_n, pred_d, psi);
            j["cq_high_snr"] = theory::cq_power_prediction(theory::SnrRegime::high_snr, pred_n, pred_d, psi);
            j["berry_esseen_bound"] = theory::berry_esseen_bound(pred_n);
            j["tau4_bound"] = theory::tau4_bound(theory::variance_V_approx(in));
            j["seed"] = pred_c.resolved_seed();
            detail::emit(pred_c, out, detail::dump(j));
            return ok;
        }

        if (*sweep) {
            const Seed seed = sweep_c.resolved_seed();
            std::optional<json> file;
            if (!config_path.empty()) {
                std::ifstream f(config_path);
                try {
                    file = json::parse(f);
                } catch (const json::exception& e) {
                    throw ConfigInvalid(std::string("cannot parse '") + config_path + "': " + e.what());
                }
                if (preset_name.empty() && file->contains("preset") && (*file)["preset"].is_string()) {
                    preset_name = (*file)["preset"].get<std::string>();
                }
            }
            std::optional<sim::Preset> preset;
            if (!preset_name.empty()) {
                preset = sim::parse_preset(preset_name);
                if (!preset) throw ConfigInvalid("unknown preset '" + preset_name + "'");
            }
            const unsigned threads = sweep_c.resolved_threads();
            const std::string summary_dest = summary_path;
            auto write_summary = [&](const json& j) {
                if (summary_dest.empty()) {
                    out << detail::dump(j);
                } else {
                    std::ofstream f(summary_dest);
                    if (!f) throw ConfigInvalid("cannot write '" + summary_dest + "'");
                    f << detail::dump(j);
                }
            };
            auto table_to = [&](const std::string& csv) {
                if (sweep_c.out.empty()) {
                    err << "note: no --out given, table not written\n";
                } else {
                    detail::emit(sweep_c, out, csv);
                }
            };

            if (preset == sim::Preset::be_ratio) {
                const auto rule = parse_bandwidth_rule("d^0.75");
                const std::vector<std::size_t> grid = sweep_grid.empty() ? std::vector<std::size_t>{40, 200, 400, 1000} : sweep_grid;
                const auto recs = sim::be_ratio_curve({CoordinateLaw::normal(), 0.0}, rule, grid, 1000, seed, threads);
                std::ostringstream csv;
                io::write_be_csv(csv, recs);
                table_to(csv.str());
                write_summary(detail::be_json(recs, rule.label(), seed, 1000));
                return ok;
            }
            if (preset == sim::Preset::qq) {
                const std::vector<std::size_t> grid = sweep_grid.empty() ? std::vector<std::size_t>{50, 100, 200} : sweep_grid;
                const std::size_t reps = sweep_reps.value_or(1000);
                const auto rule = BandwidthRule::median();
                const auto t = sim::qq_export({CoordinateLaw::normal(), 0.0}, 50, grid, rule, reps, seed,
                                              sweep_alpha.value_or(0.05), threads);
                std::ostringstream csv;
                io::write_qq_csv(csv, t.rows);
                table_to(csv.str());
                write_summary(detail::qq_json(t, 50, rule.label(), 0.0, seed));
                return ok;
            }
            if (preset == sim::Preset::ratio_curve) {
                const std::vector<std::size_t> grid =
                    sweep_grid.empty() ? std::vector<std::size_t>{40, 60, 100, 150, 200, 300, 400, 600, 800, 1000} : sweep_grid;
                const auto rules = detail::parse_rules({"d^0.5", "d^0.75", "d"});
                const double psi = force_null ? 0.0 : 1.0;
                const auto recs = sim::ratio_curve({CoordinateLaw::normal(), psi}, rules, grid,
                                                   sweep_n_large.value_or(200000), seed, threads);
                std::ostringstream csv;
                io::write_ratio_csv(csv, recs);
                table_to(csv.str());
                write_summary(detail::ratio_json(recs, rules, psi, seed));
                return ok;
            }

            sim::SweepConfig cfg = preset ? sim::preset_config(*preset) : sim::SweepConfig{};
            if (!preset && !file) throw ConfigInvalid("sweep: give --preset or --config");
            if (file) detail::apply_config_json(*file, cfg);
            if (!file || !file->contains("master_seed") || sweep_c.seed || std::getenv("MMDHD_SEED") != nullptr) {
                cfg.master_seed = seed;
            }
            if (sweep_reps) cfg.reps = *sweep_reps;
            if (sweep_alpha) cfg.alpha = *sweep_alpha;
            if (!sweep_grid.empty()) cfg.d_grid = sweep_grid;
            if (force_null) cfg.force_null = true;
            if (sweep_c.threads > 0 || !file || !file->contains("threads")) cfg.threads = threads;
            const auto result = sim::run_sweep(cfg);
            std::ostringstream csv;
            io::write_sweep_csv(csv, result.records);
            if (sweep_c.out.empty()) {
                out << csv.str();
                if (!summary_dest.empty()) write_summary({{"config", io::to_json(cfg)}, {"summary", io::to_json(result.summary)}});
            } else {
                detail::emit(sweep_c, out, csv.str());
                write_summary({{"config", io::to_json(cfg)}, {"summary", io::to_json(result.summary)}, {"seed", cfg.master_seed}});
            }
            return ok;
        }

        if (*ver) {
            verify::Options opt{ver_c.resolved_seed(), inject};
            std::vector<std::string> names;
            if (suite == "all") {
                names = verify::suite_names();
            } else {
                names = {suite};
            }
            json reports = json::array();
            bool all_pass = true;
            for (const auto& name : names) {
                const auto rep = verify::run_suite(name, opt);
                if (!rep) throw ConfigInvalid("unknown suite '" + name + "'");
                json checks = json::array();
                std::size_t failed = 0;
                for (const auto& c : rep->checks) {
                    if (!c.pass) ++failed;
                    checks.push_back({{"name", c.name},
                                      {"value", io::number(c.value)},
                                      {"reference", io::number(c.reference)},
                                      {"error", io::number(c.error)},
                                      {"tolerance", c.tolerance},
                                      {"relative", c.relative},
                                      {"pass", c.pass}});
                }
                all_pass = all_pass && rep->passed();
                err << name << ": " << (rep->checks.size() - failed) << "/" << rep->checks.size() << " checks passed\n";
                reports.push_back({{"suite", name}, {"passed", rep->passed()}, {"failed", failed}, {"checks", checks}});
            }
            const json j = {{"seed", opt.seed}, {"inject_error", inject}, {"passed", all_pass}, {"suites", reports}};
            detail::emit(ver_c, out, detail::dump(j));
            return all_pass ? ok : verification_failure;
        }

        if (*be) {
            const Seed seed = be_c.resolved_seed();
            const auto rule = parse_bandwidth_rule(be_bw);
            const auto law = detail::parse_law(be_law, be_dof, 1.0);
            const auto recs = sim::be_ratio_curve({law, be_psi}, rule, be_grid, be_m, seed, be_c.resolved_threads());
            if (!be_c.out.empty()) {
                std::ostringstream csv;
                io::write_be_csv(csv, recs);
                detail::emit(be_c, out, csv.str());
            }
            out << detail::dump(detail::be_json(recs, rule.label(), seed, be_m));
            return ok;
        }

        if (*qq) {
            const Seed seed = qq_c.resolved_seed();
            const auto rule = parse_bandwidth_rule(qq_bw);
            const auto t = sim::qq_export({CoordinateLaw::normal(), qq_psi}, qq_n, qq_grid, rule, qq_reps, seed, 0.05,
                                          qq_c.resolved_threads());
            if (!qq_c.out.empty()) {
                std::ostringstream csv;
                io::write_qq_csv(csv, t.rows);
                detail::emit(qq_c, out, csv.str());
            }
            out << detail::dump(detail::qq_json(t, qq_n, rule.label(), qq_psi, seed));
            return ok;
        }
    } catch (const ConfigInvalid& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return data_error;
    }
    return usage;
}

}  // namespace mmdhd::cli
