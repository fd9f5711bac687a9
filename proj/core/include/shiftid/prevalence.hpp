#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shiftid/data_model.hpp"

namespace shiftid {

// Probabilities are clamped to [kProbabilityFloor, 1 - kProbabilityFloor]
// wherever a ratio or logit is formed.
inline constexpr double kProbabilityFloor = 1e-7;

// ---------------------------------------------------------------------------
// Temperature scaling

struct TemperatureSearch {
  double lower = 0.05;
  double upper = 20.0;
  double tolerance = 1e-4;
};

// Temperature minimising the reference negative log-likelihood of
// softmax(log(p) / T), found by golden-section search.
double calibrate_temperature(const OutputTable& ref_outputs, const LabelVector& ref_labels,
                             const TemperatureSearch& search = {});

// softmax(log(p) / T) row by row. T = 1 returns the input unchanged.
OutputTable apply_temperature(const OutputTable& outputs, double temperature);

// Mean negative log-likelihood of the labels under the tempered outputs.
double temperature_nll(const OutputTable& outputs, const LabelVector& labels, double temperature);

// ---------------------------------------------------------------------------
// Test prevalence estimation (class probability matching)

struct PrevalenceEstimate {
  std::vector<double> w_hat;    // q_hat / ref_prior
  LabelDistribution q_hat;      // estimated test label distribution
  double objective_value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct PrevalenceOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 10'000;
};

// sum_i | ref_prior[i] - (1/m) sum_x p(i|x) / sum_j w_j p(j|x) |^2
double matching_objective(const LabelDistribution& ref_prior, const OutputTable& test_outputs,
                          std::span<const double> w);

// One fixed-point update
//   q'[i] = (1/m) sum_x (q[i] p(i|x) / ref_prior[i]) / sum_j (q[j] p(j|x) / ref_prior[j]).
std::vector<double> matching_step(const LabelDistribution& ref_prior, const OutputTable& test_outputs,
                                  std::span<const double> q);

// Iterates matching_step from q = ref_prior until the largest change is below
// options.tolerance, then reports w_hat = q_hat / ref_prior and the objective.
PrevalenceEstimate estimate_prevalence(const LabelDistribution& ref_prior, const OutputTable& test_outputs,
                                       const PrevalenceOptions& options = {});

// ---------------------------------------------------------------------------
// Reference resampling

struct ResampleResult {
  std::vector<std::size_t> indices;
  LabelDistribution achieved;
};

// Largest-remainder apportionment of target * size. Classes whose mass is
// below 1 / (2 size) get nothing.
std::vector<std::size_t> apportion(const LabelDistribution& target, std::size_t size);

// Draws apportion(target, size)[c] rows of every class c uniformly with
// replacement from the reference.
ResampleResult resample_reference(const DatasetBundle& ref, const LabelDistribution& target, std::size_t size,
                                  std::uint64_t seed);

}  // namespace shiftid
