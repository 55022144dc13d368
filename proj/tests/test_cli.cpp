#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

namespace fs = std::filesystem;
using namespace driftcast;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("driftcast_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "driftcast");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string slurp(const std::string& name) const { return cli::read_file(dir_ / name); }

    // Short series with a tiny grid keeps each simulation fast.
    std::vector<std::string> fast(std::vector<std::string> args) const {
        for (const char* kv : {"synth.length_hours=2688", "grid.num_trees=5", "grid.max_depth=2", "grid.learning_rate=0.1",
                               "sim.train_fraction=0.1"}) {
            args.insert(args.begin(), {"--set", kv});
        }
        args.insert(args.begin(), {"--out-dir", dir_.string()});
        return args;
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

}  // namespace

TEST(CliHelpers, PolicyParsing) {
    EXPECT_EQ(cli::parse_base_policy("periodic:3"), sim::BasePolicy{sim::Periodic{3}});
    EXPECT_THROW(cli::parse_base_policy("periodic:0"), ConfigError);
    EXPECT_THROW(cli::parse_base_policy("sometimes"), ConfigError);
    std::istringstream map("a = drift\n* = periodic:4\n");
    const auto h = cli::load_hybrid_map(map);
    EXPECT_EQ(h.resolve("a"), sim::BasePolicy{sim::DriftBased{}});
    EXPECT_EQ(h.resolve("zzz"), sim::BasePolicy{sim::Periodic{4}});
    EXPECT_EQ(cli::slug("periodic:4"), "periodic-4");
}

TEST_F(CliTest, SynthWritesManifestedCsv) {
    ASSERT_EQ(run(fast({"synth", "--id", "s", "--count", "2"})), 0) << err_.str();
    const auto a = slurp("s-0.csv");
    EXPECT_TRUE(a.starts_with("# manifest={"));
    EXPECT_NE(a, slurp("s-1.csv"));
    std::istringstream in(a);
    EXPECT_EQ(aggregate_hourly(parse_csv(in)).size(), 2688u);
}

TEST_F(CliTest, EmptyInputIsInputError) {
    std::ofstream(path("empty.csv")) << "timestamp,value\n";
    EXPECT_EQ(run(fast({"detect", path("empty.csv")})), cli::kInputError);
    EXPECT_EQ(run(fast({"detect", path("missing.csv")})), cli::kInputError);
    std::ofstream(path("bad.csv")) << "timestamp,value\n2023-02-01T00:00:00Z,abc\n";
    EXPECT_EQ(run(fast({"detect", path("bad.csv")})), cli::kInputError);
}

TEST_F(CliTest, BadConfigIsConfigError) {
    std::ofstream(path("bad.conf")) << "detector.lambda = 7\n";
    EXPECT_EQ(run({"--config", path("bad.conf"), "synth"}), cli::kConfigError);
    EXPECT_EQ(run({"--set", "nope=1", "synth"}), cli::kConfigError);
    EXPECT_EQ(run({"--bogus-flag", "synth"}), cli::kConfigError);
    EXPECT_EQ(run(fast({"synth", "--id", "s"})), 0);
    EXPECT_EQ(run(fast({"simulate", path("s.csv"), "--policy", "weekly"})), cli::kConfigError);
}

TEST_F(CliTest, SimulateIsByteReproducible) {
    ASSERT_EQ(run(fast({"synth", "--id", "s"})), 0);
    const std::vector<std::string> sim_args{"simulate", path("s.csv"), "--policy", "static", "--policy", "periodic:4",
                                            "--policy", "drift"};
    ASSERT_EQ(run(fast(sim_args)), 0) << err_.str();
    const auto trace = slurp("s.drift.trace.json");
    const auto curves = slurp("s.curves.csv");
    const auto batches = slurp("s.periodic-4.batches.csv");
    ASSERT_EQ(run(fast(sim_args)), 0);
    EXPECT_EQ(slurp("s.drift.trace.json"), trace);
    EXPECT_EQ(slurp("s.curves.csv"), curves);
    EXPECT_EQ(slurp("s.periodic-4.batches.csv"), batches);
    EXPECT_NE(curves.find("batch,static,periodic-4,drift\n"), std::string::npos);
    EXPECT_NE(batches.find("batch,start,mase,retrained,drifts\n"), std::string::npos);
}

TEST_F(CliTest, CompareOutputsAndMismatch) {
    ASSERT_EQ(run(fast({"synth", "--id", "s"})), 0);
    ASSERT_EQ(run(fast({"simulate", path("s.csv"), "--policy", "periodic:4", "--policy", "static"})), 0) << err_.str();
    ASSERT_EQ(run(fast({"compare", path("s.periodic-4.trace.json"), path("s.periodic-4.trace.json")})), 0) << err_.str();
    const auto csv = slurp("s.periodic-4.vs.periodic-4.compare.csv");
    EXPECT_NE(csv.find("series,mase_improvement_pct,retraining_savings_pct\ns,0,0\n"), std::string::npos);
    const auto j = json_io::json::parse(slurp("s.periodic-4.vs.periodic-4.compare.json"));
    EXPECT_TRUE(j["degenerate_pairs"].get<bool>());

    ASSERT_EQ(run(fast({"compare", path("s.periodic-4.trace.json"), path("s.static.trace.json")})), 0);
    EXPECT_NE(slurp("s.periodic-4.vs.static.compare.csv").find("s,"), std::string::npos);

    // A trace for a different series.
    ASSERT_EQ(run(fast({"synth", "--id", "t"})), 0);
    ASSERT_EQ(run(fast({"simulate", path("t.csv"), "--policy", "static"})), 0);
    EXPECT_EQ(run(fast({"compare", path("s.periodic-4.trace.json"), path("t.static.trace.json")})), cli::kMismatch);
    std::ofstream(path("junk.json")) << "{\"series_id\": 3}";
    EXPECT_EQ(run(fast({"compare", path("junk.json"), path("t.static.trace.json")})), cli::kInputError);
}

TEST_F(CliTest, DetectReportsEvents) {
    ASSERT_EQ(run(fast({"--set", "synth.drift.kind=sudden", "--set", "synth.drift.at_hour=2000", "--set",
                        "synth.drift.magnitude=8", "synth", "--id", "d"})),
              0)
        << err_.str();
    ASSERT_EQ(run(fast({"detect", path("d.csv")})), 0) << err_.str();
    const auto j = json_io::json::parse(slurp("d.detect.json"));
    ASSERT_GE(j["events"].size(), 1u);
    EXPECT_GE(j["events"][0]["slot_index"].get<std::size_t>(), 2000u);
    EXPECT_EQ(j["manifest"]["command"], "detect");
}

TEST_F(CliTest, TooShortSeriesIsSimulationError) {
    ASSERT_EQ(run({"--out-dir", dir_.string(), "--set", "synth.length_hours=1000", "synth", "--id", "x"}), 0);
    EXPECT_EQ(run({"--out-dir", dir_.string(), "simulate", path("x.csv"), "--policy", "static"}), cli::kSimulationError);
}
