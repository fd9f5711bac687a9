#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "shiftid/errors.hpp"
#include "shiftid/simulator.hpp"

using namespace shiftid;
using nlohmann::json;

namespace {

json base_json() {
  return {{"name", "t"},          {"num_classes", 2},        {"feature_dim", 8},  {"class_separation", 2.0},
          {"ref_prior", {0.5, 0.5}}, {"test_prior", {0.5, 0.5}}, {"n_ref", 200}, {"n_test", 100}};
}

json with(json j, const json& extra) {
  j.update(extra);
  return j;
}

const json kSubgroups = {{"ref_subgroup_mix", {0.5, 0.5}}, {"test_subgroup_mix", {0.9, 0.1}},
                         {"subgroup_shift", 2.0}, {"subgroup_shift_dims", 4}};

}  // namespace

TEST(SimSpec, ClassSeparationShorthand) {
  const auto s = sim::spec_from_json(with(base_json(), {{"num_classes", 3}, {"ref_prior", {0.2, 0.3, 0.5}},
                                                        {"test_prior", {0.2, 0.3, 0.5}}}));
  ASSERT_EQ(s.class_means.rows(), 3);
  for (Eigen::Index c = 0; c < 3; ++c)
    for (Eigen::Index d = 0; d < 8; ++d) EXPECT_EQ(s.class_means(c, d), c == d ? 2.0 : 0.0);
}

TEST(SimSpec, SubgroupOffsetsAreOrthogonalToClassAxes) {
  const auto s = sim::spec_from_json(with(base_json(), kSubgroups));
  ASSERT_EQ(s.num_subgroups(), 2u);
  EXPECT_EQ(s.subgroup_offsets.row(0).squaredNorm(), 0.0);
  for (Eigen::Index c = 0; c < 2; ++c) EXPECT_EQ(s.class_means.row(c).dot(s.subgroup_offsets.row(1)), 0.0);
  EXPECT_DOUBLE_EQ(s.subgroup_offsets.row(1).sum(), 8.0);
}

TEST(SimSpec, JsonRoundTrip) {
  const auto s = sim::spec_from_json(with(base_json(), kSubgroups));
  const auto back = sim::spec_from_json(sim::to_json(s));
  EXPECT_EQ(back.class_means, s.class_means);
  EXPECT_EQ(back.subgroup_offsets, s.subgroup_offsets);
  EXPECT_EQ(back.ref_prior, s.ref_prior);
  EXPECT_EQ(*back.test_subgroup_mix, *s.test_subgroup_mix);
  EXPECT_EQ(back.n_test, s.n_test);
}

TEST(SimSpec, InvalidSpecs) {
  EXPECT_THROW(sim::spec_from_json(with(base_json(), {{"num_classes", 1}})), InvalidSpec);
  EXPECT_THROW(sim::spec_from_json(with(base_json(), {{"ref_prior", {0.5, 0.4}}})), InvalidSpec);
  EXPECT_THROW(sim::spec_from_json(with(base_json(), {{"test_prior", {1.0}}})), InvalidSpec);
  EXPECT_THROW(sim::spec_from_json(with(base_json(), {{"group_size", 3}})), InvalidSpec);
  EXPECT_THROW(sim::spec_from_json(with(base_json(), {{"posterior_model", "magic"}})), InvalidSpec);
  EXPECT_THROW(sim::spec_from_json(with(base_json(), {{"n_ref", "many"}})), InvalidSpec);
  json no_prior = base_json();
  no_prior.erase("test_prior");
  EXPECT_THROW(sim::spec_from_json(no_prior), InvalidSpec);
  EXPECT_THROW(sim::spec_from_json(with(base_json(), {{"subgroup_shift", 1.0}})), InvalidSpec);
}

TEST(Toml, ParsesTheSupportedSubset) {
  const auto j = sim::parse_toml(R"(# comment
name = "demo"  # trailing
num_classes = 3
scale = 1.5e-1
flag = true
priors = [0.2, 0.3,
          0.5]
means = [[1, 0], [0, 1]]
[nested]
value = -2
)");
  EXPECT_EQ(j["name"], "demo");
  EXPECT_EQ(j["num_classes"], 3);
  EXPECT_DOUBLE_EQ(j["scale"].get<double>(), 0.15);
  EXPECT_EQ(j["flag"], true);
  EXPECT_EQ(j["priors"].size(), 3u);
  EXPECT_EQ(j["means"][1][1], 1);
  EXPECT_EQ(j["nested"]["value"], -2);
}

TEST(Toml, MalformedInputRaises) {
  EXPECT_THROW(sim::parse_toml("x = [1, 2"), ParseError);
  EXPECT_THROW(sim::parse_toml("just words"), ParseError);
  EXPECT_THROW(sim::parse_toml("s = \"open"), ParseError);
}

TEST(LoadSpec, TomlAndJsonFiles) {
  fixtures::TempDir dir("spec");
  fixtures::write_file(dir / "mine.toml",
                       "num_classes = 2\nfeature_dim = 4\nclass_separation = 1.0\nref_prior = [0.5, 0.5]\n"
                       "test_prior = [0.6, 0.4]\nn_ref = 10\nn_test = 10\n");
  const auto t = sim::load_spec(dir / "mine.toml");
  EXPECT_EQ(t.name, "mine");
  EXPECT_EQ(sim::ground_truth(t), Verdict::prevalence);
  fixtures::write_file(dir / "other.json", base_json().dump());
  EXPECT_EQ(sim::load_spec(dir / "other.json").name, "t");
  fixtures::write_file(dir / "bad.json", "{");
  EXPECT_THROW(sim::load_spec(dir / "bad.json"), ParseError);
  EXPECT_THROW(sim::load_spec(dir / "absent.toml"), ParseError);
}

TEST(Generate, OutputsOnSimplexAndTruthRule) {
  const std::vector<std::pair<json, Verdict>> cases{
      {json::object(), Verdict::no_shift},
      {{{"test_prior", {0.8, 0.2}}}, Verdict::prevalence},
      {kSubgroups, Verdict::covariate},
      {with(kSubgroups, {{"test_prior", {0.8, 0.2}}}), Verdict::mixed},
  };
  for (const auto& [extra, truth] : cases) {
    const auto spec = sim::spec_from_json(with(base_json(), extra));
    EXPECT_EQ(sim::ground_truth(spec), truth);
    const auto d = sim::generate(spec, 3);
    EXPECT_EQ(d.truth, truth);
    EXPECT_EQ(d.ref.size(), 200u);
    EXPECT_EQ(d.test.size(), 100u);
    EXPECT_TRUE(d.ref.labels);
    EXPECT_FALSE(d.test.labels);
    for (const auto* b : {&d.ref, &d.test})
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(b->size()); ++i)
        EXPECT_NEAR(b->outputs.probs().row(i).sum(), 1.0, 1e-9);
  }
}

TEST(Generate, PrevalenceDirection) {
  const auto spec = sim::spec_from_json(with(base_json(), {{"test_prior", {0.8, 0.2}}, {"n_ref", 2000},
                                                           {"n_test", 2000}}));
  const auto d = sim::generate(spec, 4);
  EXPECT_GT(d.test.outputs.probs().col(0).mean(), d.ref.outputs.probs().col(0).mean());
}

TEST(Generate, ExactBayesOutputsAreCalibrated) {
  const auto spec = sim::spec_from_json(with(base_json(), {{"ref_prior", {0.3, 0.7}}, {"test_prior", {0.3, 0.7}},
                                                           {"class_separation", 1.5}, {"n_ref", 10000}}));
  const auto d = sim::generate(spec, 5);
  // Ten equal-width bins on the class-1 probability; weighted |confidence - frequency|.
  std::vector<double> conf(10, 0.0), hits(10, 0.0), count(10, 0.0);
  for (std::size_t i = 0; i < d.ref.size(); ++i) {
    const double p = d.ref.outputs.probs()(static_cast<Eigen::Index>(i), 1);
    const auto b = std::min<std::size_t>(9, static_cast<std::size_t>(p * 10.0));
    conf[b] += p;
    hits[b] += (*d.ref.labels)[i] == 1 ? 1.0 : 0.0;
    count[b] += 1.0;
  }
  double ece = 0.0;
  for (std::size_t b = 0; b < 10; ++b) ece += std::abs(conf[b] - hits[b]) / 10000.0;
  EXPECT_LT(ece, 0.02);
}

TEST(Generate, TemperedOutputsAreOverconfident) {
  const auto base = sim::generate(sim::spec_from_json(base_json()), 6);
  const auto hot = sim::generate(sim::spec_from_json(with(base_json(), {{"posterior_model", "tempered"},
                                                                        {"posterior_power", 3.0}})),
                                 6);
  EXPECT_EQ(hot.ref.features.values(), base.ref.features.values());
  EXPECT_GT(hot.ref.outputs.probs().rowwise().maxCoeff().mean(), base.ref.outputs.probs().rowwise().maxCoeff().mean());
}

TEST(Generate, GroupsShareLabelAndSubgroup) {
  const auto spec = sim::spec_from_json(with(with(base_json(), kSubgroups), {{"group_size", 4}}));
  const auto d = sim::generate(spec, 7);
  ASSERT_TRUE(d.ref.features.grouped());
  const auto& g = *d.ref.features.group_ids();
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(g[i], static_cast<GroupId>(i / 4));
    EXPECT_EQ((*d.ref.labels)[i], (*d.ref.labels)[i - i % 4]);
  }
  for (std::size_t i = 0; i < d.test_subgroups.size(); ++i) EXPECT_EQ(d.test_subgroups[i], d.test_subgroups[i - i % 4]);
}

TEST(Generate, DeterministicGivenSeed) {
  const auto spec = sim::spec_from_json(with(base_json(), kSubgroups));
  const auto a = sim::generate(spec, 8), b = sim::generate(spec, 8), c = sim::generate(spec, 9);
  EXPECT_EQ(a.test.features.values(), b.test.features.values());
  EXPECT_NE(a.test.features.values(), c.test.features.values());
}

TEST(Wilson, KnownIntervals) {
  const auto none = sim::wilson_rate(0, 10);
  EXPECT_EQ(none.low, 0.0);
  EXPECT_NEAR(none.high, 0.27753, 1e-5);
  const auto half = sim::wilson_rate(5, 10);
  EXPECT_NEAR(half.low, 0.23659, 1e-5);
  EXPECT_NEAR(half.high, 0.76341, 1e-5);
  const auto big = sim::wilson_rate(190, 200);
  EXPECT_DOUBLE_EQ(big.rate, 0.95);
  EXPECT_LT(big.low, 0.95);
  EXPECT_GT(big.high, 0.95);
}

TEST(Evaluate, IndependentOfThreadCount) {
  const auto spec = sim::spec_from_json(with(base_json(), {{"test_prior", {0.7, 0.3}}, {"n_ref", 100}, {"n_test", 100}}));
  PipelineConfig cfg;
  cfg.detection.pca_k = 4;
  cfg.detection.num_permutations = 100;
  const auto one = sim::evaluate(spec, cfg, {6, 11, 1});
  const auto three = sim::evaluate(spec, cfg, {6, 11, 3});
  EXPECT_EQ(sim::to_json(one).dump(), sim::to_json(three).dump());
  EXPECT_EQ(sim::rate_tables_csv({one}), sim::rate_tables_csv({three}));
}

TEST(Evaluate, SingleTrialTableIsComplete) {
  const auto spec = sim::spec_from_json(with(base_json(), {{"n_ref", 100}, {"n_test", 100}}));
  PipelineConfig cfg;
  cfg.detection.num_permutations = 50;
  const auto t = sim::evaluate(spec, cfg, {1, 2, 1});
  const auto csv = sim::rate_tables_csv({t});
  std::istringstream lines(csv);
  std::string header, row, extra;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_FALSE(std::getline(lines, extra));
  const auto cols = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
  EXPECT_EQ(cols(header), cols(row));
  for (const char* key : {"spec", "seed", "trials", "alpha", "pca_k", "permutations", "ref_size", "calibrate"}) {
    EXPECT_NE(header.find(key), std::string::npos) << key;
  }
  const auto j = sim::to_json(t);
  EXPECT_EQ(j["trials"], 1);
  EXPECT_EQ(j["per_trial"].size(), 1u);
  EXPECT_TRUE(j.contains("spec"));
  EXPECT_TRUE(j.contains("config"));
  EXPECT_THROW(sim::evaluate(spec, cfg, {0, 2, 1}), ValidationError);
}
