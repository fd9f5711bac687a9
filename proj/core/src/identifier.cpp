#include "shiftid/identifier.hpp"

#include <algorithm>

#include "shiftid/errors.hpp"
#include "shiftid/random.hpp"

namespace shiftid {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::no_shift: return "no_shift";
    case Verdict::prevalence: return "prevalence";
    case Verdict::covariate: return "covariate";
    case Verdict::mixed: return "mixed";
  }
  return "unknown";
}

Verdict verdict_from_string(std::string_view name) {
  for (auto v : {Verdict::no_shift, Verdict::prevalence, Verdict::covariate, Verdict::mixed}) {
    if (to_string(v) == name) return v;
  }
  throw ParseError("unknown verdict '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
  detection.validate();
  if (ref_size < 2) throw ValidationError("ref_size must be at least 2");
}

SeedPlan SeedPlan::from_master(std::uint64_t master) {
  return {master, derive_seed(master, "detect"), derive_seed(master, "resample"), derive_seed(master, "b5"),
          derive_seed(master, "b6")};
}

bool ShiftReport::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

ShiftReport identify_shift(const DatasetBundle& ref, const DatasetBundle& test, const PipelineConfig& config) {
  config.validate();
  const auto& ref_labels = ref.require_labels();

  ShiftReport report;
  auto& prov = report.provenance;
  prov.config = config;
  prov.seeds = SeedPlan::from_master(config.detection.seed);
  prov.n_ref = ref.size();
  prov.n_test = test.size();
  prov.num_classes = ref.num_classes();
  prov.feature_dim = ref.features.cols();

  // Stage 1: Duo detection.
  DetectionConfig detect = config.detection;
  detect.seed = prov.seeds.detect;
  const auto duo = run_duo(ref, test, detect);
  report.detection = duo.outcome;
  prov.pca_k_used = duo.instrument.projector.k();
  prov.bandwidth = duo.instrument.kernel.sigma();
  if (!duo.pca_warning.empty()) report.warnings.push_back(duo.pca_warning);
  if (report.detection.combined_decision == Decision::no_shift) {
    report.verdict = Verdict::no_shift;
    return report;
  }

  const double alpha = config.detection.alpha;
  const std::size_t c = ref.num_classes();

  // Stage 2a: estimate the test prevalence.
  PrevalenceEstimate estimate;
  try {
    std::vector<double> counts(c, 0.0);
    for (int y : ref_labels.labels()) counts[static_cast<std::size_t>(y)] += 1.0;
    for (std::size_t i = 0; i < c; ++i) {
      if (counts[i] == 0.0) throw ZeroReferencePrior("class " + std::to_string(i) + " is absent from the reference");
    }
    const auto ref_prior = empirical_prevalence(ref_labels, c);
    OutputTable ref_outputs = ref.outputs;
    OutputTable test_outputs = test.outputs;
    if (config.calibrate) {
      const double t = calibrate_temperature(ref.outputs, ref_labels);
      prov.temperature = t;
      ref_outputs = apply_temperature(ref.outputs, t);
      test_outputs = apply_temperature(test.outputs, t);
    }
    estimate = estimate_prevalence(ref_prior, test_outputs);
  } catch (const ZeroReferencePrior& e) {
    report.verdict = Verdict::covariate;
    report.flags.emplace_back(kPrevalenceEstimationFailed);
    report.warnings.emplace_back(e.what());
    return report;
  }
  if (!estimate.converged) report.warnings.emplace_back("prevalence estimation did not converge");
  report.prevalence_estimate = estimate;

  // Stage 2b: resample the reference to the estimated prevalence.
  const std::size_t size = std::min(ref.size(), config.ref_size);
  prov.adjusted_ref_size = size;
  const auto resampled = resample_reference(ref, estimate.q_hat, size, prov.seeds.resample);
  const DatasetBundle adjusted = ref.select_rows(resampled.indices);

  // Stage 2c: do the features still differ once prevalence is matched?
  const auto features = mmd_test(duo.instrument, adjusted.features, test.features,
                                 config.detection.num_permutations, alpha, prov.seeds.adjusted_mmd);
  report.post_adjust_mmd_p = features.p_value;
  if (features.decision == Decision::no_shift) {
    report.verdict = Verdict::prevalence;
    return report;
  }

  // Stage 2d: covariate shift is present; did prevalence shift contribute?
  const auto outputs = bbsd(adjusted.outputs, test.outputs, alpha);
  report.post_adjust_bbsd_p_values = outputs.p_values;
  const bool mixed = report.detection.bbsd_decision == Decision::shift && outputs.decision == Decision::no_shift;
  report.verdict = mixed ? Verdict::mixed : Verdict::covariate;
  return report;
}

Verdict replay_verdict(const ShiftReport& report) {
  DetectionOutcome detection = report.detection;
  decide(detection);
  if (detection.combined_decision == Decision::no_shift) return Verdict::no_shift;
  if (report.has_flag(kPrevalenceEstimationFailed)) return Verdict::covariate;
  const double alpha = detection.alpha;
  if (!report.post_adjust_mmd_p) throw ValidationError("report lacks the post-adjustment MMD p-value");
  if (*report.post_adjust_mmd_p > alpha) return Verdict::prevalence;
  if (!report.post_adjust_bbsd_p_values) throw ValidationError("report lacks the post-adjustment BBSD p-values");
  const bool post_shift = stats::bonferroni(*report.post_adjust_bbsd_p_values, alpha).reject;
  return detection.bbsd_decision == Decision::shift && !post_shift ? Verdict::mixed : Verdict::covariate;
}

nlohmann::json to_json(const DetectionOutcome& outcome) {
  return {
      {"alpha", outcome.alpha},
      {"bbsd_p_values", outcome.bbsd_p_values},
      {"mmd_p_value", outcome.mmd_p_value},
      {"mmd_statistic", outcome.mmd_statistic},
      {"bbsd_decision", to_string(outcome.bbsd_decision)},
      {"mmd_decision", to_string(outcome.mmd_decision)},
      {"combined_decision", to_string(outcome.combined_decision)},
  };
}

nlohmann::json to_json(const ShiftReport& report) {
  using nlohmann::json;
  const auto& prov = report.provenance;
  json j;
  j["version"] = kReportVersion;
  j["detection"] = to_json(report.detection);
  j["verdict"] = to_string(report.verdict);
  if (report.prevalence_estimate) {
    const auto& est = *report.prevalence_estimate;
    j["prevalence_estimate"] = {
        {"w_hat", est.w_hat},
        {"q_hat", est.q_hat.p()},
        {"objective_value", est.objective_value},
        {"iterations", est.iterations},
        {"converged", est.converged},
    };
  } else {
    j["prevalence_estimate"] = nullptr;
  }
  j["post_adjust_mmd_p"] = report.post_adjust_mmd_p ? json(*report.post_adjust_mmd_p) : json(nullptr);
  j["post_adjust_bbsd_p_values"] =
      report.post_adjust_bbsd_p_values ? json(*report.post_adjust_bbsd_p_values) : json(nullptr);
  j["flags"] = report.flags;
  j["warnings"] = report.warnings;
  j["seeds_and_config"] = {
      {"alpha", prov.config.detection.alpha},
      {"pca_k", prov.config.detection.pca_k},
      {"pca_k_used", prov.pca_k_used},
      {"permutations", prov.config.detection.num_permutations},
      {"ref_size", prov.config.ref_size},
      {"adjusted_ref_size", prov.adjusted_ref_size},
      {"calibrate", prov.config.calibrate},
      {"temperature", prov.temperature ? json(*prov.temperature) : json(nullptr)},
      {"bandwidth", prov.bandwidth},
      {"n_ref", prov.n_ref},
      {"n_test", prov.n_test},
      {"num_classes", prov.num_classes},
      {"feature_dim", prov.feature_dim},
      {"seeds",
       {{"master", prov.seeds.master},
        {"detect", prov.seeds.detect},
        {"resample", prov.seeds.resample},
        {"b5", prov.seeds.adjusted_mmd},
        {"b6", prov.seeds.adjusted_bbsd}}},
  };
  return j;
}

}  // namespace shiftid
