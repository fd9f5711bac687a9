#include "shiftid/prevalence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "shiftid/errors.hpp"
#include "shiftid/random.hpp"

namespace shiftid {

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor); }

void check_prior(const LabelDistribution& prior, const OutputTable& outputs) {
  if (prior.size() != outputs.num_classes()) {
    throw DimensionMismatch("reference prior has " + std::to_string(prior.size()) + " classes, outputs have " +
                            std::to_string(outputs.num_classes()));
  }
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (!(prior[i] > 0.0)) {
      throw ZeroReferencePrior("class " + std::to_string(i) + " is absent from the reference set");
    }
  }
}

// Clamped p(i|x) / ref_prior[i].
RowMatrix prior_ratios(const LabelDistribution& prior, const OutputTable& outputs) {
  RowMatrix r = outputs.probs().unaryExpr(&clamp_prob);
  for (Eigen::Index c = 0; c < r.cols(); ++c) r.col(c) /= prior[static_cast<std::size_t>(c)];
  return r;
}

std::vector<double> step_from_ratios(const RowMatrix& ratios, std::span<const double> q) {
  const Eigen::Map<const Eigen::VectorXd> qv(q.data(), static_cast<Eigen::Index>(q.size()));
  const Eigen::VectorXd denom = ratios * qv;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(ratios.cols());
  for (Eigen::Index x = 0; x < ratios.rows(); ++x) acc += ratios.row(x).transpose() / denom(x);
  acc = acc.cwiseProduct(qv) / static_cast<double>(ratios.rows());
  return {acc.data(), acc.data() + acc.size()};
}

}  // namespace

double temperature_nll(const OutputTable& outputs, const LabelVector& labels, double temperature) {
  if (labels.size() != outputs.rows()) throw DimensionMismatch("labels and outputs differ in row count");
  double total = 0.0;
  const auto& p = outputs.probs();
  for (Eigen::Index x = 0; x < p.rows(); ++x) {
    double max_logit = -INFINITY;
    for (Eigen::Index c = 0; c < p.cols(); ++c) max_logit = std::max(max_logit, std::log(clamp_prob(p(x, c))) / temperature);
    double norm = 0.0;
    for (Eigen::Index c = 0; c < p.cols(); ++c) norm += std::exp(std::log(clamp_prob(p(x, c))) / temperature - max_logit);
    const double logit_y = std::log(clamp_prob(p(x, labels[static_cast<std::size_t>(x)]))) / temperature;
    total -= logit_y - max_logit - std::log(norm);
  }
  return total / static_cast<double>(p.rows());
}

double calibrate_temperature(const OutputTable& ref_outputs, const LabelVector& ref_labels,
                             const TemperatureSearch& search) {
  if (ref_labels.size() != ref_outputs.rows()) throw DimensionMismatch("labels and outputs differ in row count");
  const std::set<int> present(ref_labels.labels().begin(), ref_labels.labels().end());
  if (present.size() < 2) throw DegenerateLabels("temperature calibration needs at least two classes present");

  constexpr double kInvPhi = 0.6180339887498948482;
  double lo = search.lower;
  double hi = search.upper;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = temperature_nll(ref_outputs, ref_labels, x1);
  double f2 = temperature_nll(ref_outputs, ref_labels, x2);
  while (hi - lo > search.tolerance) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = temperature_nll(ref_outputs, ref_labels, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = temperature_nll(ref_outputs, ref_labels, x2);
    }
  }
  return 0.5 * (lo + hi);
}

OutputTable apply_temperature(const OutputTable& outputs, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ValidationError("temperature must be positive");
  if (temperature == 1.0) return outputs;
  RowMatrix scaled = outputs.probs().unaryExpr([&](double p) { return std::log(clamp_prob(p)) / temperature; });
  for (Eigen::Index x = 0; x < scaled.rows(); ++x) {
    auto row = scaled.row(x);
    row = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return OutputTable(std::move(scaled));
}

double matching_objective(const LabelDistribution& ref_prior, const OutputTable& test_outputs,
                          std::span<const double> w) {
  if (w.size() != ref_prior.size() || w.size() != test_outputs.num_classes()) {
    throw DimensionMismatch("matching_objective: class counts differ");
  }
  const RowMatrix p = test_outputs.probs().unaryExpr(&clamp_prob);
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::VectorXd denom = p * wv;
  Eigen::VectorXd matched = Eigen::VectorXd::Zero(p.cols());
  for (Eigen::Index x = 0; x < p.rows(); ++x) matched += p.row(x).transpose() / denom(x);
  matched /= static_cast<double>(p.rows());
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    const double diff = ref_prior[static_cast<std::size_t>(i)] - matched(i);
    total += diff * diff;
  }
  return total;
}

std::vector<double> matching_step(const LabelDistribution& ref_prior, const OutputTable& test_outputs,
                                  std::span<const double> q) {
  check_prior(ref_prior, test_outputs);
  if (q.size() != ref_prior.size()) throw DimensionMismatch("matching_step: q has the wrong length");
  return step_from_ratios(prior_ratios(ref_prior, test_outputs), q);
}

PrevalenceEstimate estimate_prevalence(const LabelDistribution& ref_prior, const OutputTable& test_outputs,
                                       const PrevalenceOptions& options) {
  check_prior(ref_prior, test_outputs);
  const RowMatrix ratios = prior_ratios(ref_prior, test_outputs);

  std::vector<double> q = ref_prior.p();
  PrevalenceEstimate est;
  while (est.iterations < options.max_iterations) {
    auto next = step_from_ratios(ratios, q);
    double change = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) change = std::max(change, std::abs(next[i] - q[i]));
    q = std::move(next);
    ++est.iterations;
    if (change < options.tolerance) {
      est.converged = true;
      break;
    }
  }

  est.q_hat = LabelDistribution::normalized(q);
  est.w_hat.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) est.w_hat[i] = est.q_hat[i] / ref_prior[i];
  est.objective_value = matching_objective(ref_prior, test_outputs, est.w_hat);
  return est;
}

std::vector<std::size_t> apportion(const LabelDistribution& target, std::size_t size) {
  if (size == 0) throw ValidationError("apportion: size must be positive");
  const double n = static_cast<double>(size);
  const double floor_mass = 1.0 / (2.0 * n);
  std::vector<std::size_t> counts(target.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < target.size(); ++c) {
    if (target[c] < floor_mass) continue;
    const double quota = target[c] * n;
    counts[c] = static_cast<std::size_t>(std::floor(quota));
    assigned += counts[c];
    remainders.emplace_back(quota - std::floor(quota), c);
  }
  if (remainders.empty()) throw ValidationError("apportion: target has no class with enough mass");
  // Largest fraction first; ties to the lower class index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < size; ++k, ++assigned) counts[remainders[k % remainders.size()].second] += 1;
  return counts;
}

ResampleResult resample_reference(const DatasetBundle& ref, const LabelDistribution& target, std::size_t size,
                                  std::uint64_t seed) {
  const auto& labels = ref.require_labels();
  const std::size_t num_classes = ref.num_classes();
  if (target.size() != num_classes) throw DimensionMismatch("resample target has the wrong number of classes");
  if (size < num_classes) throw ValidationError("resample size must be at least the number of classes");

  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t r = 0; r < labels.size(); ++r) by_class[static_cast<std::size_t>(labels[r])].push_back(r);

  const auto counts = apportion(target, size);
  Rng rng = make_rng(seed);
  ResampleResult result;
  result.indices.reserve(size);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;
    if (by_class[c].empty()) {
      throw EmptyClassNeeded("target needs class " + std::to_string(c) + " but the reference has none");
    }
    for (std::size_t k = 0; k < counts[c]; ++k) {
      result.indices.push_back(by_class[c][uniform_below(rng, by_class[c].size())]);
    }
  }
  std::vector<double> achieved(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) achieved[c] = static_cast<double>(counts[c]) / static_cast<double>(size);
  result.achieved = LabelDistribution::normalized(std::move(achieved));
  return result;
}

}  // namespace shiftid
