#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "shiftid/data_model.hpp"
#include "shiftid/stats.hpp"

namespace shiftid {

enum class Decision { no_shift, shift };

std::string_view to_string(Decision d);

struct DetectionConfig {
  double alpha = 0.05;
  std::size_t pca_k = stats::kDefaultPcaComponents;
  std::size_t num_permutations = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

// Black Box Shift Detection: one K-S test per softmax column, Bonferroni over C.
struct BbsdResult {
  std::vector<double> p_values;
  std::vector<double> statistics;
  Decision decision = Decision::no_shift;
};

BbsdResult bbsd(const OutputTable& ref_outputs, const OutputTable& test_outputs, double alpha);

// PCA projector (fit on the reference) plus the RBF bandwidth from the pooled
// projections. Stage-2 tests reuse the stage-1 instrument.
struct MmdInstrument {
  stats::PcaProjector projector;
  stats::RbfKernelParams kernel{1.0};
};

MmdInstrument fit_mmd_instrument(const FeatureTable& ref_features, const FeatureTable& test_features,
                                 std::size_t k = stats::kDefaultPcaComponents);

struct MmdResult {
  double p_value = 1.0;
  double statistic = 0.0;
  Decision decision = Decision::no_shift;
};

// Projects both tables with the instrument and runs the grouped permutation test.
MmdResult mmd_test(const MmdInstrument& instrument, const FeatureTable& ref_features,
                   const FeatureTable& test_features, std::size_t num_permutations, double alpha,
                   std::uint64_t seed);

// fit_mmd_instrument followed by mmd_test.
MmdResult mmd_detector(const FeatureTable& ref_features, const FeatureTable& test_features, std::size_t k,
                       std::size_t num_permutations, double alpha, std::uint64_t seed);

struct DetectionOutcome {
  std::vector<double> bbsd_p_values;
  double mmd_p_value = 1.0;
  double mmd_statistic = 0.0;
  Decision combined_decision = Decision::no_shift;
  Decision bbsd_decision = Decision::no_shift;
  Decision mmd_decision = Decision::no_shift;
  double alpha = 0.05;
};

// Fills the three decisions of a DetectionOutcome from its p-values: Duo is
// Bonferroni over all C + 1 values, BBSD over C, MMD at alpha.
void decide(DetectionOutcome& outcome);

struct DuoRun {
  DetectionOutcome outcome;
  MmdInstrument instrument;
  std::string pca_warning;
};

DuoRun run_duo(const DatasetBundle& ref, const DatasetBundle& test, const DetectionConfig& config);
DetectionOutcome duo_detect(const DatasetBundle& ref, const DatasetBundle& test, const DetectionConfig& config);

}  // namespace shiftid
