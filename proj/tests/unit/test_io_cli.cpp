#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmdhd/cli.hpp"
#include "mmdhd/io.hpp"

using namespace mmdhd;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "mmdhd");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliFiles : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mmdhd_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) const {
        const auto p = dir_ / name;
        std::ofstream(p) << text;
        return p.string();
    }

    fs::path dir_;
};

Matrix parse(const std::string& text) {
    std::istringstream in(text);
    return io::parse_samples(in);
}

}  // namespace

TEST(ParseSamples, PlainRows) {
    const Matrix m = parse("1,2\n3,4\n");
    ASSERT_EQ(m.rows(), 2);
    ASSERT_EQ(m.cols(), 2);
    EXPECT_EQ(m(0, 0), 1.0);
    EXPECT_EQ(m(0, 1), 2.0);
    EXPECT_EQ(m(1, 0), 3.0);
    EXPECT_EQ(m(1, 1), 4.0);
}

TEST(ParseSamples, HeaderDetected) {
    const Matrix m = parse("a,b\n1,2\n");
    ASSERT_EQ(m.rows(), 1);
    EXPECT_EQ(m(0, 1), 2.0);
}

TEST(ParseSamples, RaggedRowReportsLine) {
    try {
        (void)parse("1,2\n3\n");
        FAIL() << "expected RaggedRows";
    } catch (const RaggedRows& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(ParseSamples, BadInput) {
    EXPECT_THROW((void)parse("1,2\n3,x\n"), ParseError);
    EXPECT_THROW((void)parse(""), ParseError);
    EXPECT_THROW((void)parse("a,b\n"), ParseError);
    const Matrix m = parse("\n1, 2 \n\n3,4\r\n");
    EXPECT_EQ(m.rows(), 2);
    EXPECT_EQ(m(0, 1), 2.0);
}

TEST(WriteSamples, RoundTripsExactly) {
    const auto s = sample_pair(ModelSpec::mean_shift(3, 1.0, CoordinateLaw::student_t(5.0)), 20, 1);
    std::ostringstream out;
    io::write_samples(out, s.x);
    const Matrix back = parse(out.str());
    EXPECT_TRUE((back.array() == s.x.array()).all());
}

TEST(Json, NonFiniteBecomesNull) {
    EXPECT_TRUE(io::number(std::numeric_limits<double>::infinity()).is_null());
    EXPECT_TRUE(io::number(std::nan("")).is_null());
    EXPECT_EQ(io::number(0.5).get<double>(), 0.5);
}

TEST_F(CliFiles, LoadSamplesFromFile) {
    const Matrix m = io::load_samples(write("x.csv", "x1,x2\n1,2\n3,4\n"));
    EXPECT_EQ(m.rows(), 2);
    EXPECT_THROW((void)io::load_samples((dir_ / "missing.csv").string()), ParseError);
}

TEST_F(CliFiles, TestCommandPrintsOutcome) {
    const auto s = sample_pair(ModelSpec::mean_shift(5, 3.0, CoordinateLaw::normal()), 200, 2);
    std::ostringstream xs, ys;
    io::write_samples(xs, s.x);
    io::write_samples(ys, s.y);
    const auto x = write("x.csv", xs.str());
    const auto y = write("y.csv", ys.str());
    const auto r = run({"test", "--x", x, "--y", y, "--alpha", "0.05", "--bandwidth", "median"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    const auto direct = linear_test(s.x, s.y, BandwidthRule::median(), 0.05);
    EXPECT_DOUBLE_EQ(j["statistic"].get<double>(), direct.statistic);
    EXPECT_EQ(j["reject"].get<bool>(), direct.reject);
    EXPECT_EQ(j["bandwidth_rule"], "median");
}

TEST_F(CliFiles, TestCommandErrors) {
    const auto ragged = write("bad.csv", "1,2\n3\n");
    const auto good = write("good.csv", "1,2\n3,4\n5,6\n7,8\n");
    const auto narrow = write("narrow.csv", "1\n3\n5\n7\n");
    EXPECT_EQ(run({"test", "--x", ragged, "--y", good}).code, 2);
    EXPECT_EQ(run({"test", "--x", good, "--y", narrow}).code, 2);
    EXPECT_EQ(run({"test", "--x", good, "--y", good, "--bandwidth", "wide"}).code, 1);
    EXPECT_EQ(run({"test", "--x", (dir_ / "nope.csv").string(), "--y", good}).code, 1);
}

TEST(Cli, PredictWorkedExample) {
    const auto r = run({"predict", "--n", "50", "--d", "100", "--sigma", "1", "--delta-norm", "2.5", "--alpha", "0.05"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["beta"].get<double>(), 0.4486, 1e-4);
    EXPECT_EQ(j["regime"], "validated");
    const auto by_psi = nlohmann::json::parse(run({"predict", "--n", "50", "--d", "100", "--psi", "2.5"}).out);
    EXPECT_EQ(by_psi["beta"], j["beta"]);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"predict", "--n", "50"}).code, 1);
    EXPECT_EQ(run({"predict", "--n", "50", "--d", "10"}).code, 1);
    EXPECT_EQ(run({"predict", "--n", "50", "--d", "10", "--psi", "1", "--delta-norm", "1"}).code, 1);
    EXPECT_EQ(run({"verify", "--suite", "nonsense"}).code, 1);
    EXPECT_EQ(run({"sweep", "--preset", "setting9"}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, VerifyPropagatesFailure) {
    EXPECT_EQ(run({"verify", "--suite", "cq-identity"}).code, 0);
    const auto bad = run({"verify", "--suite", "cq-identity", "--inject-error", "0.05"});
    EXPECT_EQ(bad.code, 3);
    // contract alias of the closed-form MMD^2 suite
    EXPECT_EQ(run({"verify", "--suite", "lemma1", "--inject-error", "0.05"}).code, 3);
    EXPECT_EQ(verify::canonical_suite("appendix-integrals"), "integral-expansions");
}

TEST(Cli, SeedFromEnvironment) {
    ::setenv("MMDHD_SEED", "1234", 1);
    const auto j = nlohmann::json::parse(run({"predict", "--n", "50", "--d", "10", "--psi", "1"}).out);
    EXPECT_EQ(j["seed"].get<std::uint64_t>(), 1234u);
    const auto k = nlohmann::json::parse(run({"predict", "--n", "50", "--d", "10", "--psi", "1", "--seed", "9"}).out);
    EXPECT_EQ(k["seed"].get<std::uint64_t>(), 9u);
    ::setenv("MMDHD_SEED", "abc", 1);
    EXPECT_EQ(run({"predict", "--n", "50", "--d", "10", "--psi", "1"}).code, 1);
    ::unsetenv("MMDHD_SEED");
    const auto z = nlohmann::json::parse(run({"predict", "--n", "50", "--d", "10", "--psi", "1"}).out);
    EXPECT_EQ(z["seed"].get<std::uint64_t>(), 0u);
}

TEST_F(CliFiles, SweepFromConfigIsReproducible) {
    const auto cfg = write("cfg.json", R"({"preset": "setting1", "d_grid": [10, 20], "reps": 40,
                                          "bandwidth_rules": ["d^0.5", "median"], "master_seed": 5})");
    const auto a = run({"sweep", "--config", cfg});
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = run({"sweep", "--config", cfg, "--threads", "3"});
    EXPECT_EQ(a.out, b.out);
    std::istringstream lines(a.out);
    std::string header;
    std::getline(lines, header);
    EXPECT_EQ(header, "d,n,gamma_rule,gamma_value,rejection_rate,stderr,predicted_beta,reps");
    int rows = 0;
    for (std::string l; std::getline(lines, l);) rows += l.empty() ? 0 : 1;
    EXPECT_EQ(rows, 4);
    const auto other = run({"sweep", "--config", cfg, "--seed", "6"});
    EXPECT_NE(a.out, other.out);
}

TEST_F(CliFiles, SweepWritesTableAndSummary) {
    const auto table = (dir_ / "t.csv").string();
    const auto r = run({"sweep", "--preset", "setting3", "--d-grid", "10,20", "--reps", "30", "--out", table});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(table));
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["config"]["reps"], 30);
    EXPECT_EQ(j["summary"]["rules"].size(), 4u);
}

TEST_F(CliFiles, SweepConfigErrors) {
    EXPECT_EQ(run({"sweep", "--config", write("bad.json", "{not json")}).code, 1);
    EXPECT_EQ(run({"sweep", "--config", write("grid.json", R"({"preset": "setting1", "d_grid": [20, 10]})")}).code, 1);
    EXPECT_EQ(run({"sweep"}).code, 1);
}
