#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftid/data_model.hpp"
#include "shiftid/detectors.hpp"
#include "shiftid/prevalence.hpp"

namespace shiftid {

enum class Verdict { no_shift, prevalence, covariate, mixed };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view name);

inline constexpr int kReportVersion = 1;

// Flag recorded when the test prevalence could not be estimated (a class is
// missing from the reference); the verdict then falls back to covariate.
inline constexpr std::string_view kPrevalenceEstimationFailed = "prevalence_estimation_failed";

struct PipelineConfig {
  DetectionConfig detection;      // alpha, PCA k, permutations, master seed
  std::size_t ref_size = 2000;    // resampled reference size, capped at N_ref
  bool calibrate = true;          // temperature-scale outputs before estimation

  void validate() const;
};

// Seeds of each stochastic stage, derived from the master seed.
struct SeedPlan {
  std::uint64_t master = 0;
  std::uint64_t detect = 0;
  std::uint64_t resample = 0;
  std::uint64_t adjusted_mmd = 0;
  std::uint64_t adjusted_bbsd = 0;

  static SeedPlan from_master(std::uint64_t master);
};

struct Provenance {
  PipelineConfig config;
  SeedPlan seeds;
  std::size_t n_ref = 0;
  std::size_t n_test = 0;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
  std::size_t pca_k_used = 0;
  double bandwidth = 0.0;
  std::size_t adjusted_ref_size = 0;
  std::optional<double> temperature;
};

struct ShiftReport {
  DetectionOutcome detection;
  Verdict verdict = Verdict::no_shift;
  std::optional<PrevalenceEstimate> prevalence_estimate;
  std::optional<double> post_adjust_mmd_p;
  std::optional<std::vector<double>> post_adjust_bbsd_p_values;
  std::vector<std::string> flags;
  std::vector<std::string> warnings;
  Provenance provenance;

  bool has_flag(std::string_view flag) const;
};

// Detect with Duo; on a detection, estimate the test prevalence, resample the
// reference to it and re-test the features. A shift that disappears is
// prevalence; one that persists is covariate, or mixed when the output shift
// seen before adjustment disappears after it.
ShiftReport identify_shift(const DatasetBundle& ref, const DatasetBundle& test, const PipelineConfig& config);

// Re-derives the verdict from the p-values recorded in a report.
Verdict replay_verdict(const ShiftReport& report);

nlohmann::json to_json(const ShiftReport& report);
nlohmann::json to_json(const DetectionOutcome& outcome);

}  // namespace shiftid
