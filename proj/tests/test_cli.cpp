#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "chainid/cli.hpp"
#include "chainid/io.hpp"
#include "manifest.hpp"
#include "test_util.hpp"

using namespace chainid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "chainid");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("chainid_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::string kFourbar = test::data_path("fourbar.json");

nlohmann::json manifest_of(const std::string& out) {
  return nlohmann::json::parse(read_file(cli::Manifest::path_for(out)));
}

}  // namespace

TEST_F(Cli, SimulateRowCount) {
  const auto r = invoke({"simulate", "--model", kFourbar, "--out", path("a.csv"), "--ref", "sine:maxvel=5",
                      "--horizon", "20", "--ground-truth"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_dataset(test::fourbar(), path("a.csv")).size(), 20001);
  EXPECT_EQ(manifest_of(path("a.csv"))["summary"]["rows"], 20001);
}

TEST_F(Cli, NoiseIsSeeded) {
  auto sim = [&](const std::string& out, const std::string& seed) {
    return invoke({"simulate", "--model", kFourbar, "--out", path(out), "--mode", "inverse", "--horizon", "1",
                "--noise", "qa=0.001,u=0.05", "--seed", seed});
  };
  // Outputs name their manifest, so reruns go to the same path.
  ASSERT_EQ(sim("a.csv", "4").code, 0);
  const std::string first = read_file(path("a.csv"));
  const std::string first_man = read_file(cli::Manifest::path_for(path("a.csv")));
  ASSERT_EQ(sim("a.csv", "4").code, 0);
  EXPECT_EQ(read_file(path("a.csv")), first);
  EXPECT_EQ(read_file(cli::Manifest::path_for(path("a.csv"))), first_man);
  ASSERT_EQ(sim("a.csv", "5").code, 0);
  EXPECT_NE(read_file(path("a.csv")), first);
}

TEST_F(Cli, MissingModelIsUsageError) {
  const auto r = invoke({"simulate", "--model", path("nope.json"), "--out", path("a.csv")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_FALSE(r.err.empty());
  EXPECT_FALSE(fs::exists(path("a.csv")));
  EXPECT_FALSE(fs::exists(cli::Manifest::path_for(path("a.csv"))));
}

TEST_F(Cli, UnknownOptionIsUsageError) {
  EXPECT_EQ(invoke({"simulate", "--model", kFourbar, "--out", path("a.csv"), "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(invoke({}).code, cli::kExitUsage);
}

TEST_F(Cli, IdentifyDownsampleAndDeterminism) {
  ASSERT_EQ(invoke({"simulate", "--model", kFourbar, "--out", path("d.csv"), "--mode", "inverse", "--ref",
                 "sine:amp=0.6,freq=0.4", "--horizon", "10"})
                .code,
            0);
  auto identify = [&](const std::string& out) {
    return invoke({"identify", "--model", kFourbar, "--data", path("d.csv"), "--out", path(out), "--downsample", "10",
                "--multistart", "2"});
  };
  const auto a = identify("r1.json");
  ASSERT_EQ(a.code, 0) << a.err;
  const std::string first = read_file(path("r1.json"));
  const std::string first_man = read_file(cli::Manifest::path_for(path("r1.json")));
  ASSERT_EQ(identify("r1.json").code, 0);
  const auto man = manifest_of(path("r1.json"));
  EXPECT_EQ(man["summary"]["raw_samples"], 10001);
  EXPECT_EQ(man["summary"]["observation_samples"], 1001);
  EXPECT_EQ(man["summary"]["n_id"], 18);
  EXPECT_EQ(read_file(path("r1.json")), first);
  EXPECT_EQ(read_file(cli::Manifest::path_for(path("r1.json"))), first_man);
  // The manifest hashes the output it sits next to.
  EXPECT_NE(first_man.find(cli::sha256_file(path("r1.json"))), std::string::npos);
}

TEST_F(Cli, TrimShortensObservation) {
  ASSERT_EQ(invoke({"simulate", "--model", kFourbar, "--out", path("d.csv"), "--mode", "inverse", "--horizon", "10"}).code,
            0);
  const auto r = invoke({"identify", "--model", kFourbar, "--data", path("d.csv"), "--out", path("r.json"),
                         "--multistart", "1", "--trim", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(manifest_of(path("r.json"))["summary"]["observation_samples"], 901);
  EXPECT_EQ(manifest_of(path("r.json"))["config"]["trim"], 0.5);
  EXPECT_EQ(invoke({"identify", "--model", kFourbar, "--data", path("d.csv"), "--out", path("r2.json"), "--trim", "-1"})
                .code,
            cli::kExitUsage);
  EXPECT_FALSE(fs::exists(path("r2.json")));
}

TEST_F(Cli, UnderactuatedModelRefused) {
  auto doc = nlohmann::json::parse(read_file(kFourbar));
  doc["constraints"] = nlohmann::json::array();
  doc.erase("home");
  atomic_write(path("open.json"), doc.dump());
  const auto r = invoke({"excite", "--model", path("open.json"), "--out", path("e.json"), "--budget", "4"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("not fully actuated"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("e.json")));
}

TEST_F(Cli, ZeroBudgetRejected) {
  const auto r = invoke({"excite", "--model", kFourbar, "--out", path("e.json"), "--budget", "0"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_FALSE(fs::exists(path("e.json")));
}

TEST_F(Cli, ExciteReplayAndDeterminism) {
  const std::vector<std::string> args = {"excite", "--model", kFourbar, "--budget", "30",
                                         "--seed",   "9",       "--out",   path("e1.json")};
  ASSERT_EQ(invoke(args).code, 0);
  const std::string first = read_file(path("e1.json"));
  ASSERT_EQ(invoke(args).code, 0);
  EXPECT_EQ(read_file(path("e1.json")), first);

  const auto spec = nlohmann::json::parse(read_file(path("e1.json")));
  const RobotModel m = test::fourbar();
  const ReferenceTrajectory ref = parse_reference(m, path("e1.json"));
  const RegroupingMaps maps = analyze(m, sample_states(m, 200, 9));
  const double c = reference_condition(m, maps, ref, spec["period"].get<double>(), spec["samples"].get<int>());
  const double recorded = spec["cond"].get<double>();
  EXPECT_LE(std::abs(c - recorded), 0.01 * recorded);
}

TEST_F(Cli, ModelCheckReports) {
  const auto r = invoke({"model-check", "--model", kFourbar, "--samples", "10", "--guesses", "4"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("fully actuated: yes"), std::string::npos);
}
