#include "shiftid/data_model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "shiftid/errors.hpp"

namespace shiftid {

namespace {

template <typename... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

RowMatrix gather_rows(const RowMatrix& m, std::span<const std::size_t> indices) {
  RowMatrix out(static_cast<Eigen::Index>(indices.size()), m.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= static_cast<std::size_t>(m.rows())) {
      throw DimensionMismatch(concat("row index ", indices[r], " out of range (", m.rows(), " rows)"));
    }
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(indices[r]));
  }
  return out;
}

}  // namespace

FeatureTable::FeatureTable(RowMatrix values, std::optional<std::vector<GroupId>> group_ids)
    : values_(std::move(values)), group_ids_(std::move(group_ids)) {
  if (values_.rows() < 2) {
    throw ValidationError(concat("feature table needs at least 2 rows, got ", values_.rows()));
  }
  if (values_.cols() < 1) {
    throw ValidationError("feature table needs at least 1 column");
  }
  if (!values_.allFinite()) {
    throw ValidationError("feature table contains NaN or Inf");
  }
  if (group_ids_ && group_ids_->size() != rows()) {
    throw DimensionMismatch(
        concat("group ids have ", group_ids_->size(), " entries but feature table has ", rows(), " rows"));
  }
}

std::vector<GroupId> FeatureTable::effective_groups() const {
  if (group_ids_) return *group_ids_;
  std::vector<GroupId> g(rows());
  std::iota(g.begin(), g.end(), GroupId{0});
  return g;
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> indices) const {
  // Selected rows keep their source group, so repeated draws of one row stay
  // together under grouped permutation.
  const auto source = effective_groups();
  std::vector<GroupId> groups;
  groups.reserve(indices.size());
  for (auto i : indices) {
    if (i >= source.size()) throw DimensionMismatch(concat("row index ", i, " out of range"));
    groups.push_back(source[i]);
  }
  return FeatureTable(gather_rows(values_, indices), std::move(groups));
}

OutputTable::OutputTable(RowMatrix probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 1) throw ValidationError("output table is empty");
  if (probs_.cols() < 2) {
    throw ValidationError(concat("output table needs at least 2 classes, got ", probs_.cols()));
  }
  if (!probs_.allFinite()) throw ValidationError("output table contains NaN or Inf");
  for (Eigen::Index r = 0; r < probs_.rows(); ++r) {
    auto row = probs_.row(r);
    if (row.minCoeff() < -kRowSumTolerance || row.maxCoeff() > 1.0 + kRowSumTolerance) {
      throw ValidationError(concat("output row ", r, " has an entry outside [0,1]"));
    }
    row = row.cwiseMax(0.0).cwiseMin(1.0);
    const double sum = row.sum();
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ValidationError(concat("output row ", r, " sums to ", sum, ", expected 1"));
    }
    row /= sum;
  }
}

std::vector<double> OutputTable::column(std::size_t c) const {
  std::vector<double> out(rows());
  Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) =
      probs_.col(static_cast<Eigen::Index>(c));
  return out;
}

OutputTable OutputTable::select_rows(std::span<const std::size_t> indices) const {
  return OutputTable(gather_rows(probs_, indices));
}

LabelVector::LabelVector(std::vector<int> labels, std::size_t num_classes)
    : labels_(std::move(labels)), num_classes_(num_classes) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= num_classes_) {
      throw ValidationError(
          concat("label ", labels_[i], " at row ", i, " outside [0, ", num_classes_, ")"));
    }
  }
}

LabelVector LabelVector::select_rows(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    if (i >= labels_.size()) throw DimensionMismatch(concat("label index ", i, " out of range"));
    out.push_back(labels_[i]);
  }
  return LabelVector(std::move(out), num_classes_);
}

LabelDistribution::LabelDistribution(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw ValidationError("label distribution is empty");
  double sum = 0.0;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("label distribution has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ValidationError(concat("label distribution sums to ", sum, ", expected 1"));
  }
}

LabelDistribution LabelDistribution::normalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("weights must be finite and non-negative");
    sum += w;
  }
  if (!(sum > 0.0)) throw ValidationError("weights sum to zero");
  for (double& w : weights) w /= sum;
  return LabelDistribution(std::move(weights));
}

LabelDistribution LabelDistribution::uniform(std::size_t num_classes) {
  return LabelDistribution(std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)));
}

double total_variation(const LabelDistribution& a, const LabelDistribution& b) {
  if (a.size() != b.size()) throw DimensionMismatch("label distributions differ in class count");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return 0.5 * acc;
}

void DatasetBundle::validate() const {
  if (features.rows() != outputs.rows()) {
    throw DimensionMismatch(
        concat("features have ", features.rows(), " rows but outputs have ", outputs.rows()));
  }
  if (labels) {
    if (labels->size() != features.rows()) {
      throw DimensionMismatch(
          concat("labels have ", labels->size(), " rows but features have ", features.rows()));
    }
    if (labels->num_classes() != outputs.num_classes()) {
      throw DimensionMismatch(concat("labels declare ", labels->num_classes(), " classes but outputs have ",
                                     outputs.num_classes()));
    }
  }
}

const LabelVector& DatasetBundle::require_labels() const {
  if (!labels) throw MissingLabels("reference bundle '" + name + "' has no labels");
  return *labels;
}

DatasetBundle DatasetBundle::select_rows(std::span<const std::size_t> indices) const {
  DatasetBundle out{features.select_rows(indices), outputs.select_rows(indices), std::nullopt, name};
  if (labels) out.labels = labels->select_rows(indices);
  return out;
}

LabelDistribution empirical_prevalence(const LabelVector& labels, std::size_t num_classes) {
  if (labels.size() == 0) throw EmptyInput("empirical_prevalence: no labels");
  std::vector<double> counts(num_classes, 0.0);
  for (int y : labels.labels()) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ValidationError(concat("label ", y, " outside [0, ", num_classes, ")"));
    }
    counts[static_cast<std::size_t>(y)] += 1.0;
  }
  const double n = static_cast<double>(labels.size());
  for (double& c : counts) c /= n;
  return LabelDistribution(std::move(counts));
}

}  // namespace shiftid
