#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace shiftid {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using GroupId = std::int64_t;

// N x D encoder embeddings with optional exam/group membership per row.
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(RowMatrix values, std::optional<std::vector<GroupId>> group_ids = std::nullopt);

  const RowMatrix& values() const { return values_; }
  const std::optional<std::vector<GroupId>>& group_ids() const { return group_ids_; }
  bool grouped() const { return group_ids_.has_value(); }

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }

  // Group of every row; a table without group ids puts each row in its own
  // group (row index).
  std::vector<GroupId> effective_groups() const;

  FeatureTable select_rows(std::span<const std::size_t> indices) const;

 private:
  RowMatrix values_;
  std::optional<std::vector<GroupId>> group_ids_;
};

// N x C softmax probabilities. Rows whose sums fall within kRowSumTolerance of
// one are renormalized exactly on construction.
class OutputTable {
 public:
  static constexpr double kRowSumTolerance = 1e-5;

  OutputTable() = default;
  explicit OutputTable(RowMatrix probs);

  const RowMatrix& probs() const { return probs_; }
  std::size_t rows() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(probs_.cols()); }

  std::vector<double> column(std::size_t c) const;
  OutputTable select_rows(std::span<const std::size_t> indices) const;

 private:
  RowMatrix probs_;
};

class LabelVector {
 public:
  LabelVector() = default;
  LabelVector(std::vector<int> labels, std::size_t num_classes);

  const std::vector<int>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  int operator[](std::size_t i) const { return labels_[i]; }

  LabelVector select_rows(std::span<const std::size_t> indices) const;

 private:
  std::vector<int> labels_;
  std::size_t num_classes_ = 0;
};

class LabelDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  LabelDistribution() = default;
  explicit LabelDistribution(std::vector<double> p);

  // Scales non-negative weights to sum to one.
  static LabelDistribution normalized(std::vector<double> weights);
  static LabelDistribution uniform(std::size_t num_classes);

  const std::vector<double>& p() const { return p_; }
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }

  friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;

 private:
  std::vector<double> p_;
};

double total_variation(const LabelDistribution& a, const LabelDistribution& b);

struct DatasetBundle {
  FeatureTable features;
  OutputTable outputs;
  std::optional<LabelVector> labels;
  std::string name;

  std::size_t size() const { return features.rows(); }
  std::size_t num_classes() const { return outputs.num_classes(); }

  // Checks the cross-table row counts and label range.
  void validate() const;
  // Reference bundles must carry labels.
  const LabelVector& require_labels() const;

  DatasetBundle select_rows(std::span<const std::size_t> indices) const;
};

LabelDistribution empirical_prevalence(const LabelVector& labels, std::size_t num_classes);

}  // namespace shiftid
