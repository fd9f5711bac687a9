#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftid/data_model.hpp"
#include "shiftid/identifier.hpp"

namespace shiftid::sim {

enum class PosteriorModel { exact_bayes, tempered };

// Synthetic scenario: Gaussian classes, optional covariate subgroups that
// offset the features, and separate reference/test class priors and subgroup
// mixes.
struct SimSpec {
  std::string name = "unnamed";
  std::size_t num_classes = 2;
  std::size_t feature_dim = 16;
  RowMatrix class_means;           // C x D
  double class_cov_scale = 1.0;    // isotropic variance
  RowMatrix subgroup_offsets;      // S x D, zero rows when no subgroups
  LabelDistribution ref_prior;
  LabelDistribution test_prior;
  std::optional<LabelDistribution> ref_subgroup_mix;
  std::optional<LabelDistribution> test_subgroup_mix;
  PosteriorModel posterior_model = PosteriorModel::exact_bayes;
  double posterior_power = 1.0;    // used by the tempered model
  std::size_t n_ref = 1000;
  std::size_t n_test = 1000;
  std::size_t group_size = 1;      // rows per exam; 1 = ungrouped

  std::size_t num_subgroups() const { return static_cast<std::size_t>(subgroup_offsets.rows()); }
  void validate() const;
};

// Ground truth implied by the spec: priors differ => prevalence, mixes differ
// => covariate, both => mixed.
Verdict ground_truth(const SimSpec& spec);

// Parses the spec from JSON. Besides the explicit matrices, two shorthands
// are accepted: "class_separation" puts class c's mean at separation * e_c,
// and "subgroup_shift" / "subgroup_shift_dims" give subgroup s >= 1 an offset
// of subgroup_shift on its own block of dims after the class axes.
SimSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimSpec& spec);

// Minimal TOML reader: `key = value` pairs with numbers, booleans, quoted
// strings and (nested, possibly multi-line) arrays, `#` comments and
// `[table]` headers.
nlohmann::json parse_toml(std::string_view text);

// .json files are read as JSON, anything else as TOML.
SimSpec load_spec(const std::filesystem::path& path);

struct SimDraw {
  DatasetBundle ref;
  DatasetBundle test;
  LabelVector test_labels;
  std::vector<std::size_t> test_subgroups;
  Verdict truth = Verdict::no_shift;
};

SimDraw generate(const SimSpec& spec, std::uint64_t seed);

// Wilson score interval for a binomial proportion.
struct Rate {
  std::size_t count = 0;
  std::size_t trials = 0;
  double rate = 0.0;
  double low = 0.0;
  double high = 0.0;
};

Rate wilson_rate(std::size_t count, std::size_t trials, double z = 1.959963984540054);

struct TrialRecord {
  std::uint64_t seed = 0;
  Verdict verdict = Verdict::no_shift;
  Decision bbsd = Decision::no_shift;
  Decision mmd = Decision::no_shift;
  Decision duo = Decision::no_shift;
};

struct RateTable {
  std::string spec_name;
  Verdict truth = Verdict::no_shift;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  PipelineConfig config;
  SimSpec spec;
  Rate verdict_no_shift;
  Rate verdict_prevalence;
  Rate verdict_covariate;
  Rate verdict_mixed;
  Rate accuracy;  // verdict == truth
  Rate detect_bbsd;
  Rate detect_mmd;
  Rate detect_duo;
  std::vector<TrialRecord> records;

  const Rate& verdict_rate(Verdict v) const;
};

struct EvaluateOptions {
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // 0 = hardware concurrency
};

// Runs identify_shift on `trials` independent draws of the spec. Trial t uses
// derive_seed(seed, t); the table does not depend on the thread count.
RateTable evaluate(const SimSpec& spec, const PipelineConfig& config, const EvaluateOptions& options);

nlohmann::json to_json(const RateTable& table);
// Header plus one row per table.
std::string rate_tables_csv(const std::vector<RateTable>& tables);

}  // namespace shiftid::sim
