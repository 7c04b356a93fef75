#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "btlab/cli.hpp"
#include "util.hpp"

namespace btlab {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "btlab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return btlab::detail::read_file(p); }

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) m[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return m;
}

TEST(Cli, SimulateZeroGivesHeaderOnlyManifest) {
  test::TempDir dir("cli0");
  const auto r = cli({"simulate", "--pack", "device", "-n", "0", "--out", dir.path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir.path / "manifest.csv"), "file,device,app,action,flavor,pair,day\n");
}

TEST(Cli, SimulateSevenProfilesTwentyFiveEach) {
  test::TempDir dir("cli25");
  auto classic = packs::device_pack();
  classic.resize(7);
  const auto pack = dir.path / "classic.json";
  std::ofstream(pack) << write_profile_pack(classic);
  const auto r = cli({"simulate", "--pack", pack.string(), "--n", "25", "--out", (dir.path / "a").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = parse_manifest_csv(slurp(dir.path / "a" / "manifest.csv"));
  EXPECT_EQ(m.size(), 175u);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir.path / "a" / "traces")) files += e.is_regular_file();
  EXPECT_EQ(files, 175u);
  const auto ds = load_dataset(dir.path / "a" / "manifest.csv");
  EXPECT_EQ(ds.size(), 175u);
}

TEST(Cli, SimulateIsByteIdentical) {
  test::TempDir dir("clisame");
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(cli({"simulate", "--pack", "diabetes", "-n", "3", "--seed", "9", "--export-pack", "--out",
                   (dir.path / sub).string()})
                  .code,
              0);
  }
  EXPECT_EQ(tree(dir.path / "a"), tree(dir.path / "b"));
  ASSERT_EQ(cli({"simulate", "--pack", "diabetes", "-n", "3", "--seed", "10", "--out", (dir.path / "c").string()}).code,
            0);
  EXPECT_NE(tree(dir.path / "a").at("traces/DiabetesM_AddCalorie_0000.csv"),
            tree(dir.path / "c").at("traces/DiabetesM_AddCalorie_0000.csv"));
}

TEST(Cli, SimulateDayTrace) {
  test::TempDir dir("cliday");
  const auto plan = packs::default_day_plan();
  auto short_plan = plan;
  short_plan.total_s = 7200;
  std::ofstream(dir.path / "plan.json") << write_day_plan(short_plan);
  const auto r = cli({"simulate", "--plan", (dir.path / "plan.json").string(), "--out", dir.path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto trace = parse_trace_csv(slurp(dir.path / "day_trace.csv"));
  EXPECT_FALSE(trace.packets.empty());
  EXPECT_LT(trace.packets.back().timestamp, 7200);
  parse_intervals_csv(slurp(dir.path / "day_truth.csv"));
}

TEST(Cli, TrainPredictDefendRoundTrip) {
  test::TempDir dir("clitrain");
  const auto d = dir.path.string();
  ASSERT_EQ(cli({"simulate", "--pack", "device", "-n", "8", "--out", d + "/sim"}).code, 0);
  auto r = cli({"extract", "--manifest", d + "/sim/manifest.csv", "--out", d + "/features.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto feats = slurp(dir.path / "features.csv");
  EXPECT_EQ(std::count(feats.begin(), feats.end(), '\n'), 1 + 14 * 8);
  r = cli({"train", "--manifest", d + "/sim/manifest.csv", "--key", "device", "--trees", "10", "--out",
           d + "/model.txt"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli({"predict", "--model", d + "/model.txt", "--manifest", d + "/sim/manifest.csv", "--key", "device", "--out",
           d + "/pred.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("macro_f1="), std::string::npos);
  EXPECT_EQ(slurp(dir.path / "pred.csv").rfind("file,label,confidence\n", 0), 0u);
  r = cli({"defend", "--manifest", d + "/sim/manifest.csv", "--defense", "pad", "--out", d + "/padded"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto padded = load_dataset(dir.path / "padded" / "manifest.csv");
  for (const auto& s : padded.samples) {
    for (const auto& p : s.packets) {
      if (!p.is_meta) EXPECT_EQ(p.size, max_payload(s.flavor));
    }
  }
}

TEST(Cli, ConfigFileSuppliesOptions) {
  test::TempDir dir("clicfg");
  std::ofstream(dir.path / "sim.json") << R"({"pack": "diabetes", "n": 2, "out": ")" + (dir.path / "o").string() +
                                              R"("})";
  auto r = cli({"simulate", "--config", (dir.path / "sim.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parse_manifest_csv(slurp(dir.path / "o" / "manifest.csv")).size(), 12u);
  std::ofstream(dir.path / "bad.json") << R"({"packs": "diabetes"})";
  r = cli({"simulate", "--config", (dir.path / "bad.json").string(), "--out", dir.path.string()});
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
}

TEST(Cli, ExperimentWritesReports) {
  test::TempDir dir("cliexp");
  std::ofstream(dir.path / "cfg.json") << R"({"samples_per_class": 6, "folds": 3, "trees": 4})";
  const auto r = cli({"experiment", "device-id", "--seed", "5", "--config", (dir.path / "cfg.json").string(),
                      "--out", (dir.path / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = slurp(dir.path / "out" / "device-id_classic_report.csv");
  EXPECT_EQ(report.rfind("# tool btlab 1.0.0\n# experiment device-id\n# seed 5\n# config fnv1a64:", 0), 0u);
  EXPECT_NE(r.out.find("macro_f1="), std::string::npos);
}

TEST(Cli, Errors) {
  auto r = cli({"experiment", "no-such-thing", "--out", "/tmp/x"});
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

  r = cli({"simulate", "--pack", "device"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--out"), std::string::npos);

  r = cli({"extract", "--manifest", "/nonexistent/manifest.csv", "--out", "/tmp/f.csv"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);

  test::TempDir dir("clierr");
  std::ofstream(dir.path / "cfg.json") << R"({"trees": "ten"})";
  r = cli({"experiment", "device-id", "--config", (dir.path / "cfg.json").string(), "--out", dir.path.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("trees"), std::string::npos);

  r = cli({"bogus"});
  EXPECT_EQ(r.code, 2);
}

}  // namespace
}  // namespace btlab
