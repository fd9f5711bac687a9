#include "shiftid/detectors.hpp"

#include <algorithm>

#include "shiftid/errors.hpp"

namespace shiftid {

std::string_view to_string(Decision d) { return d == Decision::shift ? "shift" : "no_shift"; }

void DetectionConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidAlpha("alpha must lie in (0, 1)");
  if (pca_k < 1) throw ValidationError("pca_k must be at least 1");
  if (num_permutations < 1) throw ValidationError("permutations must be at least 1");
}

BbsdResult bbsd(const OutputTable& ref_outputs, const OutputTable& test_outputs, double alpha) {
  if (ref_outputs.num_classes() != test_outputs.num_classes()) {
    throw DimensionMismatch("bbsd: reference has " + std::to_string(ref_outputs.num_classes()) +
                            " classes, test has " + std::to_string(test_outputs.num_classes()));
  }
  BbsdResult out;
  for (std::size_t c = 0; c < ref_outputs.num_classes(); ++c) {
    const auto r = ref_outputs.column(c);
    const auto t = test_outputs.column(c);
    const auto res = stats::ks_two_sample(r, t);
    out.p_values.push_back(res.p_value);
    out.statistics.push_back(res.statistic);
  }
  out.decision = stats::bonferroni(out.p_values, alpha).reject ? Decision::shift : Decision::no_shift;
  return out;
}

MmdInstrument fit_mmd_instrument(const FeatureTable& ref_features, const FeatureTable& test_features,
                                 std::size_t k) {
  if (ref_features.cols() != test_features.cols()) {
    throw DimensionMismatch("reference and test features differ in dimension");
  }
  RowMatrix pooled(ref_features.values().rows() + test_features.values().rows(), ref_features.values().cols());
  pooled << ref_features.values(), test_features.values();
  auto projector = stats::pca_fit(FeatureTable(std::move(pooled)), k);
  const auto zr = stats::pca_project(projector, ref_features);
  const auto zt = stats::pca_project(projector, test_features);
  auto kernel = stats::median_heuristic_bandwidth(zr, zt);
  return MmdInstrument{std::move(projector), kernel};
}

MmdResult mmd_test(const MmdInstrument& instrument, const FeatureTable& ref_features,
                   const FeatureTable& test_features, std::size_t num_permutations, double alpha,
                   std::uint64_t seed) {
  const auto zr = stats::pca_project(instrument.projector, ref_features);
  const auto zt = stats::pca_project(instrument.projector, test_features);
  const auto res = stats::permutation_test(zr, zt, instrument.kernel, num_permutations, seed);
  return {res.p_value, res.statistic, res.p_value <= alpha ? Decision::shift : Decision::no_shift};
}

MmdResult mmd_detector(const FeatureTable& ref_features, const FeatureTable& test_features, std::size_t k,
                       std::size_t num_permutations, double alpha, std::uint64_t seed) {
  const auto instrument = fit_mmd_instrument(ref_features, test_features, k);
  return mmd_test(instrument, ref_features, test_features, num_permutations, alpha, seed);
}

void decide(DetectionOutcome& outcome) {
  std::vector<double> all = outcome.bbsd_p_values;
  all.push_back(outcome.mmd_p_value);
  outcome.combined_decision = stats::bonferroni(all, outcome.alpha).reject ? Decision::shift : Decision::no_shift;
  outcome.bbsd_decision =
      stats::bonferroni(outcome.bbsd_p_values, outcome.alpha).reject ? Decision::shift : Decision::no_shift;
  outcome.mmd_decision = outcome.mmd_p_value <= outcome.alpha ? Decision::shift : Decision::no_shift;
}

DuoRun run_duo(const DatasetBundle& ref, const DatasetBundle& test, const DetectionConfig& config) {
  config.validate();
  ref.validate();
  test.validate();
  DuoRun run;
  const auto outputs = bbsd(ref.outputs, test.outputs, config.alpha);
  run.instrument = fit_mmd_instrument(ref.features, test.features, config.pca_k);
  run.pca_warning = run.instrument.projector.warning;
  const auto mmd = mmd_test(run.instrument, ref.features, test.features, config.num_permutations, config.alpha,
                            config.seed);
  run.outcome.bbsd_p_values = outputs.p_values;
  run.outcome.mmd_p_value = mmd.p_value;
  run.outcome.mmd_statistic = mmd.statistic;
  run.outcome.alpha = config.alpha;
  decide(run.outcome);
  return run;
}

DetectionOutcome duo_detect(const DatasetBundle& ref, const DatasetBundle& test, const DetectionConfig& config) {
  return run_duo(ref, test, config).outcome;
}

}  // namespace shiftid
