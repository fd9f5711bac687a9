#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "cli.hpp"
#include <nlohmann/json.hpp>

#include "fixtures.hpp"

using fixtures::TempDir;
namespace cli = shiftid::cli;

namespace {

const std::string kSpecs = SHIFTID_SPEC_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> side_args(const std::string& ref, const std::string& test) {
  return {"--ref-features",  ref + "_features.csv", "--ref-outputs",  ref + "_outputs.csv",
          "--ref-labels",    ref + "_labels.csv",   "--test-features", test + "_features.csv",
          "--test-outputs",  test + "_outputs.csv"};
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string export_draw(const TempDir& dir, const std::string& spec, int seed) {
  const std::string prefix = (dir / (spec + std::to_string(seed))).string();
  const auto r = run({"generate", "--spec", kSpecs + "/" + spec + ".toml", "--seed", std::to_string(seed), "--out",
                      prefix});
  EXPECT_EQ(r.code, 0) << r.err;
  return prefix;
}

int majority_identify(const TempDir& dir, const std::string& spec) {
  std::map<int, int> votes;
  for (int seed = 1; seed <= 3; ++seed) {
    const auto p = export_draw(dir, spec, seed);
    ++votes[run(cat({"identify", "--seed", std::to_string(seed)}, side_args(p + "_ref", p + "_test"))).code];
  }
  for (const auto& [code, n] : votes)
    if (n >= 2) return code;
  return -1;
}

}  // namespace

TEST(Cli, ExitCodesAreDistinct) {
  const std::set<int> codes{cli::kExitOk,         cli::kExitInputError, cli::kExitShift,
                            cli::kExitPrevalence, cli::kExitCovariate,  cli::kExitMixed};
  EXPECT_EQ(codes.size(), 6u);
}

TEST(Cli, DetectIdenticalFilesIsNoShift) {
  TempDir dir("cli");
  const auto p = export_draw(dir, "null_small", 1);
  const auto r = run(cat({"detect"}, side_args(p + "_ref", p + "_ref")));
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["version"], 1);
  EXPECT_EQ(j["combined_decision"], "no_shift");
}

TEST(Cli, DetectMalformedCsvIsInputError) {
  TempDir dir("cli");
  const auto p = export_draw(dir, "null_small", 1);
  fixtures::write_file(p + "_test_outputs.csv", "p0,p1\n0.5,zero\n");
  const auto r = run(cat({"detect"}, side_args(p + "_ref", p + "_test")));
  EXPECT_EQ(r.code, cli::kExitInputError);
  EXPECT_NE(r.err.find("error"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, DetectStrongShiftExport) {
  TempDir dir("cli");
  const auto p = export_draw(dir, "covariate_strong", 1);
  EXPECT_EQ(run(cat({"detect"}, side_args(p + "_ref", p + "_test"))).code, cli::kExitShift);
}

TEST(Cli, DetectCsvFormatAndOutFile) {
  TempDir dir("cli");
  const auto p = export_draw(dir, "null_small", 2);
  const std::string out = (dir / "d.csv").string();
  const auto r = run(cat({"detect", "--format", "csv", "--out", out, "--permutations", "99"},
                         side_args(p + "_ref", p + "_test")));
  EXPECT_TRUE(r.out.empty());
  const auto text = fixtures::read_file(out);
  EXPECT_EQ(text.rfind("alpha,combined_decision", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(Cli, IdentifyNullExportIsNoShift) {
  TempDir dir("cli");
  EXPECT_EQ(majority_identify(dir, "null"), cli::kExitOk);
}

TEST(Cli, IdentifyPrevalenceExport) {
  TempDir dir("cli");
  EXPECT_EQ(majority_identify(dir, "prevalence_strong"), cli::kExitPrevalence);
}

TEST(Cli, IdentifyMixedExport) {
  TempDir dir("cli");
  EXPECT_EQ(majority_identify(dir, "mixed_strong"), cli::kExitMixed);
}

TEST(Cli, IdentifyIsByteIdentical) {
  TempDir dir("cli");
  const auto p = export_draw(dir, "prevalence_strong", 4);
  const auto a = (dir / "a.json").string(), b = (dir / "b.json").string();
  const auto args = cat({"identify", "--seed", "9", "--permutations", "200"}, side_args(p + "_ref", p + "_test"));
  run(cat(args, {"--out", a}));
  run(cat(args, {"--out", b}));
  const auto ja = fixtures::read_file(a);
  EXPECT_FALSE(ja.empty());
  EXPECT_EQ(ja, fixtures::read_file(b));
}

TEST(Cli, IdentifyRequiresReferenceLabels) {
  TempDir dir("cli");
  const auto p = export_draw(dir, "null_small", 1);
  auto args = side_args(p + "_ref", p + "_test");
  args.erase(args.begin() + 4, args.begin() + 6);  // drop --ref-labels
  EXPECT_EQ(run(cat({"identify"}, args)).code, cli::kExitInputError);
}

TEST(Cli, SimulateSingleTrial) {
  TempDir dir("cli");
  const std::string out = (dir / "rates").string();
  const auto r = run({"simulate", "--spec", kSpecs + "/null_small.toml", "--trials", "1", "--permutations", "50",
                      "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = fixtures::read_file(out + ".csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  const auto j = nlohmann::json::parse(fixtures::read_file(out + ".json"));
  EXPECT_EQ(j["version"], 1);
  EXPECT_EQ(j["tables"][0]["trials"], 1);
  EXPECT_NE(r.err.find("null_small"), std::string::npos);
}

TEST(Cli, SimulateBadSpecIsInputError) {
  TempDir dir("cli");
  fixtures::write_file(dir / "bad.toml", "num_classes = 1\n");
  EXPECT_EQ(run({"simulate", "--spec", (dir / "bad.toml").string(), "--trials", "1"}).code, cli::kExitInputError);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitInputError);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitInputError);
  EXPECT_EQ(run({"detect", "--alpha", "0.05"}).code, cli::kExitInputError);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, InvalidAlphaIsInputError) {
  TempDir dir("cli");
  const auto p = export_draw(dir, "null_small", 1);
  EXPECT_EQ(run(cat({"detect", "--alpha", "1.5"}, side_args(p + "_ref", p + "_test"))).code, cli::kExitInputError);
}
