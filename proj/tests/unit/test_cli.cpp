#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "dhlab/experiment.hpp"

namespace fs = std::filesystem;
using namespace dhlab;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result dhlab_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("dhlab_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_config(const std::string& name, const std::string& json) const {
    std::ofstream(dir_ / name) << json;
    return path(name);
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kNoiseless = R"({"sites": 3, "family": "W2", "times": {"start": 0, "step": 2, "count": 6},
                             "noise": {"p1": 0, "p2": 0, "seed": 4}})";

}  // namespace

TEST_F(CliTest, LiouvilleIdentityKHasEvenlySpacedLevels) {
  const auto r = dhlab_run({"liouville", "--l", "3", "--bodies", "1", "--seed", "7", "--k-identity", "--out", path("lv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir_ / "lv" / "spectrum.txt");
  std::string line;
  std::set<long> levels;
  const double d = 8.0 / 9.0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'r') continue;
    const double re = std::stod(line.substr(0, line.find(',')));
    const double steps = -re / (4 * d);
    EXPECT_NEAR(steps, std::round(steps), 1e-12);
    levels.insert(std::lround(steps));
  }
  EXPECT_EQ(levels, (std::set<long>{0, 1, 2, 3}));
  const auto m = cli::RunManifest::load(dir_ / "lv" / "manifest.json");
  EXPECT_EQ(m.status, "ok");
  EXPECT_EQ(m.command, "liouville");
  EXPECT_FALSE(m.finished.empty());
  EXPECT_GE(m.outputs.size(), 4u);
}

TEST_F(CliTest, MissingRequiredFlagIsUsageError) {
  const auto r = dhlab_run({"liouville", "--bodies", "1"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("--l"), std::string::npos);
  EXPECT_EQ(dhlab_run({}).code, cli::kExitUsage);
  EXPECT_EQ(dhlab_run({"liouville", "--l", "3", "--bodies", "3"}).code, cli::kExitUsage);
  EXPECT_EQ(dhlab_run({"liouville", "--l", "3", "--bodies", "2", "--topo", "chain:4"}).code, cli::kExitUsage);
  EXPECT_EQ(dhlab_run({"--help"}).code, cli::kExitOk);
}

TEST_F(CliTest, TwoBodyChainReportsChannelCount) {
  const auto r = dhlab_run({"liouville", "--l", "5", "--bodies", "2", "--topo", "chain:5", "--dry-run", "--out", path("lv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("channels=51"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir_ / "lv"));
}

TEST_F(CliTest, LiouvilleTwoBodyWritesAllFiles) {
  const auto r = dhlab_run({"liouville", "--l", "3", "--bodies", "2", "--seed", "2", "--out", path("lv"),
                            "--write-matrices", "--traces", path("lv/traces.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"spectrum.txt", "kossakowski.txt", "liouvillian.txt", "clusters.txt", "hierarchy.txt", "traces.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "lv" / f)) << f;
  }
  EXPECT_NE(slurp(dir_ / "lv" / "spectrum.txt").find("channels=27"), std::string::npos);
  EXPECT_EQ(TraceSet::load(dir_ / "lv" / "traces.csv").records.size(), 26u * 41u);
}

TEST_F(CliTest, InvalidConfigListsEveryProblem) {
  const auto cfg = write_config("bad.json", R"({"sites": 12, "family": "W3", "shots": -1, "colour": 1})");
  const auto r = dhlab_run({"simulate", cfg, "--out", path("s.csv")});
  EXPECT_EQ(r.code, cli::kExitConfig);
  for (const char* what : {"colour", "family", "sites", "shots"}) EXPECT_NE(r.err.find(what), std::string::npos) << what;
  EXPECT_FALSE(fs::exists(dir_ / "s.csv"));
  EXPECT_EQ(dhlab_run({"simulate", path("missing.json")}).code, cli::kExitConfig);
}

TEST_F(CliTest, NoiselessSimulationIsConstantAndReproducible) {
  const auto cfg = write_config("nl.json", kNoiseless);
  ASSERT_EQ(dhlab_run({"simulate", cfg, "--out", path("a.csv")}).code, 0);
  ASSERT_EQ(dhlab_run({"simulate", cfg, "--out", path("b.csv"), "--jobs", "1"}).code, 0);
  EXPECT_EQ(cli::file_checksum(dir_ / "a.csv"), cli::file_checksum(dir_ / "b.csv"));
  const auto a = assemble_traces(TraceSet::load(dir_ / "a.csv"));
  ASSERT_EQ(a.traces.size(), 26u);
  for (const auto& t : a.traces) {
    for (const auto& v : t.values) EXPECT_NEAR(v.real(), t.values.front().real(), 1e-12) << t.meta.observable;
  }
  const auto m = cli::RunManifest::load(path("a.csv.manifest.json"));
  EXPECT_EQ(m.status, "ok");
  ASSERT_EQ(m.outputs.size(), 1u);
  EXPECT_EQ(m.outputs[0].second, cli::file_checksum(dir_ / "a.csv"));
  EXPECT_EQ(m.seeds.size(), 2u);
  // rerun on the finished store resumes with nothing left to do
  ASSERT_EQ(dhlab_run({"simulate", cfg, "--out", path("a.csv")}).code, 0);
  EXPECT_EQ(cli::file_checksum(dir_ / "a.csv"), m.outputs[0].second);
}

TEST_F(CliTest, DryRunPrintsPlanOnly) {
  const auto cfg = write_config("w2.json", R"({"sites": 5, "family": "W2", "noise": "p2=0.02"})");
  const auto r = dhlab_run({"simulate", cfg, "--out", path("w2.csv"), "--dry-run"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("observables: 242"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir_ / "w2.csv"));
  EXPECT_FALSE(fs::exists(path("w2.csv.manifest.json")));
}

TEST_F(CliTest, AnalyzeDiagonalKStoreFitsExactly) {
  ASSERT_EQ(dhlab_run({"liouville", "--l", "4", "--bodies", "2", "--k-identity", "--out", path("lv"), "--traces",
                       path("diag.csv")}).code, 0);
  const auto r = dhlab_run({"analyze", path("diag.csv"), "--out", path("an")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(dir_ / "an" / "results.txt");
  for (const char* s : {"[summary]", "[modes]", "[clusters]", "[fit]", "[subclusters]", "[chi2]"}) {
    EXPECT_NE(text.find(s), std::string::npos) << s;
  }
  EXPECT_NE(text.find("argmax_k="), std::string::npos);
  EXPECT_NE(text.find("turnback_k="), std::string::npos);
  const auto pos = text.find("max_abs_residual=");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LT(std::stod(text.substr(pos + 17)), 1e-9);
  for (const char* f : {"clusters.csv", "density.csv", "modes.csv", "fit.csv", "subclusters.csv", "reconstruction.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "an" / f)) << f;
  }
}

TEST_F(CliTest, AnalyzeFlagsIncompleteTraceAndProceeds) {
  const auto cfg = write_config("w1.json", R"({"sites": 2, "family": "W1", "times": {"start": 0, "step": 4, "count": 21},
                                               "noise": {"p1": 0.02, "seed": 1}})");
  ASSERT_EQ(dhlab_run({"simulate", cfg, "--out", path("w1.csv")}).code, 0);
  auto set = TraceSet::load(dir_ / "w1.csv");
  const auto victim = set.records.front().observable;
  std::erase_if(set.records, [&](const TraceRecord& r) { return r.observable == victim && r.t == 40; });
  set.save(dir_ / "cut.csv");
  const auto r = dhlab_run({"analyze", path("cut.csv"), "--out", path("an")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(dir_ / "an" / "results.txt");
  const auto flagged = text.substr(text.find("[flagged]"));
  EXPECT_NE(flagged.find(victim + "@"), std::string::npos);
  EXPECT_NE(text.find("incomplete=1"), std::string::npos);
}

TEST_F(CliTest, AnalyzeRejectsEmptyOrMissingStore) {
  EXPECT_EQ(dhlab_run({"analyze", path("none.csv")}).code, cli::kExitConfig);
  TraceSet empty;
  empty.sites = 3;
  empty.save(dir_ / "empty.csv");
  const auto r = dhlab_run({"analyze", path("empty.csv"), "--out", path("an")});
  EXPECT_EQ(r.code, cli::kExitConfig);
  EXPECT_NE(r.err.find("empty"), std::string::npos);
}

TEST_F(CliTest, ManifestRecordsFailure) {
  const auto cfg = write_config("nl.json", kNoiseless);
  fs::create_directories(dir_ / "store.csv");  // not writable as a file
  const auto r = dhlab_run({"simulate", cfg, "--out", path("store.csv")});
  EXPECT_NE(r.code, 0);
  const auto m = cli::RunManifest::load(path("store.csv.manifest.json"));
  EXPECT_EQ(m.status, "failed");
  EXPECT_FALSE(m.message.empty());
  EXPECT_FALSE(m.finished.empty());
  EXPECT_TRUE(m.outputs.empty());
}

TEST_F(CliTest, BadAnalysisFlagIsUsageError) {
  ASSERT_EQ(dhlab_run({"simulate", write_config("nl.json", kNoiseless), "--out", path("a.csv")}).code, 0);
  EXPECT_EQ(dhlab_run({"analyze", path("a.csv"), "--out", path("an"), "--max-modes", "-1"}).code, cli::kExitUsage);
  EXPECT_EQ(dhlab_run({"analyze", path("a.csv"), "--topo", "ring"}).code, cli::kExitUsage);
}
