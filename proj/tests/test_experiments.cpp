#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stickysim/experiments.hpp"

using namespace stickysim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("stickysim_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

}  // namespace

TEST(Catalog, ListsFigureExperiments) {
  std::vector<std::string> names;
  for (const auto& e : list_experiments()) names.push_back(e.name);
  for (const char* want : {"fig-perfect-jsq", "fig-power-of-d", "fig-pull", "fig-shedding",
                           "fig-transfer-invite", "fig-transfer-least", "fig-delay-perfect",
                           "violation-curves", "tradeoff-shedding", "bin-variation",
                           "bin-violation", "bin-tradeoff"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  }
  const auto bins = list_experiments("bin");
  EXPECT_FALSE(bins.empty());
  EXPECT_LT(bins.size(), names.size());
  EXPECT_TRUE(list_experiments("no-such-thing").empty());
}

TEST(RunExperiment, TradeoffWritesCsvAndSummary) {
  ExperimentSpec spec{"tradeoff-shedding", 1, scratch("tradeoff"), {{"h_values", "150:200:10"}}};
  const auto res = run_experiment(spec);
  ASSERT_GE(res.files.size(), 2u);
  for (const auto& f : res.files) EXPECT_TRUE(fs::exists(f)) << f;
  const auto csv = slurp(res.files.front());
  EXPECT_EQ(csv.rfind("scheme,h,epsilon,g_chi,improvement\n", 0), 0u);
  EXPECT_NE(res.summary_json.find("\"seed\""), std::string::npos);
  EXPECT_NE(res.summary_json.find("\"tolerances\""), std::string::npos);
  EXPECT_NE(res.summary_json.find("\"version\""), std::string::npos);
}

TEST(RunExperiment, RejectsUnknownNamesAndParams) {
  EXPECT_THROW(run_experiment({"nope", 1, scratch("nope"), {}}), ValidationError);
  EXPECT_THROW(run_experiment({"fig-delay-perfect", 1, scratch("typo"), {{"chii", "3"}}}),
               ValidationError);
}

TEST(RunExperiment, SimulationIsDeterministic) {
  const ParamMap params = {{"n", "20"}, {"warmup", "5"}, {"horizon", "20"}};
  const auto a = run_experiment({"fig-pull", 7, scratch("det_a"), params});
  const auto b = run_experiment({"fig-pull", 7, scratch("det_b"), params});
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t k = 0; k + 1 < a.files.size(); ++k) {
    EXPECT_EQ(slurp(a.files[k]), slurp(b.files[k])) << a.files[k].filename();
  }
}

TEST(RunExperiment, FixedPointAgreesWithCompare) {
  const auto dir = scratch("fp");
  const auto res = run_experiment({"fixed-point", 1, dir, {{"scheme", "pull"}}});
  const auto report = compare_csv(res.files.front(), res.files.front());
  EXPECT_EQ(report.tv, 0.0);
  EXPECT_TRUE(report.pass);
}

TEST(Compare, IdenticalAndMismatched) {
  const auto dir = scratch("cmp");
  write(dir / "a.csv", "i,p\n0,0.5\n1,0.5\n");
  write(dir / "b.csv", "i,p\n1,0.5\n2,0.5\n");
  const auto same = compare_csv(dir / "a.csv", dir / "a.csv");
  EXPECT_EQ(same.tv, 0.0);
  EXPECT_TRUE(same.pass);
  const auto diff = compare_csv(dir / "a.csv", dir / "b.csv");
  EXPECT_NEAR(diff.tv, 0.5, 1e-15);
  EXPECT_NEAR(diff.mean_gap, 1.0, 1e-15);
  EXPECT_FALSE(diff.pass);
  EXPECT_NE(format_report(diff).find("FAIL"), std::string::npos);
}

TEST(Compare, MismatchedLoadFails) {
  const auto dir = scratch("cmp_rho");
  const auto a = run_experiment({"fixed-point", 1, dir / "a", {{"scheme", "shedding"}, {"h", "inf"}}});
  const auto b = run_experiment(
      {"fixed-point", 1, dir / "b", {{"scheme", "shedding"}, {"h", "inf"}, {"lambda", "110"}}});
  const auto report = compare_csv(a.files.front(), b.files.front());
  EXPECT_FALSE(report.pass);
  EXPECT_NEAR(report.mean_gap, 15.0, 1e-6);
}

TEST(Compare, MalformedFilesAreValidationErrors) {
  const auto dir = scratch("bad");
  write(dir / "bad.csv", "i,p\n0,abc\n");
  write(dir / "nohdr.csv", "x,y\n0,1\n");
  write(dir / "ok.csv", "i,p\n0,1\n");
  EXPECT_THROW(compare_csv(dir / "bad.csv", dir / "ok.csv"), ValidationError);
  EXPECT_THROW(compare_csv(dir / "nohdr.csv", dir / "ok.csv"), ValidationError);
  EXPECT_THROW(compare_csv(dir / "missing.csv", dir / "ok.csv"), ValidationError);
}
