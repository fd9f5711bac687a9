#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shiftid/data_model.hpp"
#include "shiftid/random.hpp"

namespace shiftid::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

// sup_x |F_a(x) - F_b(x)| over the merged sorted sample. Ties are stepped
// together, so no jitter is needed.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// Asymptotic Kolmogorov survival function
//   Q(lambda) = 2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2),
// summed until a term drops below 1e-10. Returns 1 for lambda < 0.2, where
// the true value differs from 1 by less than 1e-12.
double kolmogorov_survival(double lambda);

// Two-sided two-sample test. The p-value is Q((sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * D)
// with ne = |a||b| / (|a| + |b|).
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Multiple testing

struct BonferroniDecision {
  bool reject = false;
  double threshold = 0.0;  // alpha / number of tests
};

BonferroniDecision bonferroni(std::span<const double> p_values, double alpha);

// ---------------------------------------------------------------------------
// RBF kernel and MMD

// k(z, z') = exp(-||z - z'||^2 / (2 sigma)). sigma is on the scale of squared
// distances.
class RbfKernelParams {
 public:
  explicit RbfKernelParams(double sigma);
  double sigma() const { return sigma_; }
  double operator()(double squared_distance) const { return std::exp(-squared_distance / (2.0 * sigma_)); }

 private:
  double sigma_;
};

// Full symmetric matrix of squared Euclidean distances between rows.
RowMatrix pairwise_squared_distances(const RowMatrix& z);

// Median of the squared pairwise distances over all unordered pairs (mean of
// the two middle values for an even pair count). Falls back to the smallest
// positive distance when the median is zero.
RbfKernelParams median_heuristic_bandwidth(const RowMatrix& pooled);
RbfKernelParams median_heuristic_bandwidth(const FeatureTable& pooled);
// Convenience: bandwidth of the two tables stacked.
RbfKernelParams median_heuristic_bandwidth(const FeatureTable& a, const FeatureTable& b);

// Unbiased estimate of the squared MMD:
//   1/(m^2-m) sum_{i!=j} k(z_i, z_j) + 1/(n^2-n) sum_{i!=j} k(z'_i, z'_j)
//     - 2/(mn) sum_{i,j} k(z_i, z'_j)
// Can be negative.
double mmd2_unbiased(const FeatureTable& zr, const FeatureTable& zt, const RbfKernelParams& kernel);

// ---------------------------------------------------------------------------
// Permutation testing

// Rows of the pooled sample bucketed into exchangeable units. Groups of the
// two tables live in separate namespaces; an ungrouped table contributes one
// unit per row.
class GroupLayout {
 public:
  GroupLayout(const FeatureTable& first, const FeatureTable& second);

  std::size_t pooled_rows() const { return pooled_rows_; }
  std::size_t first_rows() const { return first_rows_; }
  const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }
  std::size_t largest_group() const { return largest_; }

  // Random partition of the pooled rows: groups in uniformly shuffled order
  // go to the first side until it holds at least first_rows() rows. Entry r is
  // 1 when pooled row r is on the first side. The first side exceeds its
  // observed size by less than largest_group().
  std::vector<std::uint8_t> draw_partition(Rng& rng) const;

 private:
  std::vector<std::vector<std::size_t>> groups_;
  std::size_t pooled_rows_ = 0;
  std::size_t first_rows_ = 0;
  std::size_t largest_ = 0;
};

struct PermutationOptions {
  std::size_t num_permutations = 1000;
  std::uint64_t seed = 0;
  // Called with every drawn partition, in draw order. Test hook.
  std::function<void(std::span<const std::uint8_t>)> on_partition;
};

// p = (1 + #{permuted MMD^2 >= observed MMD^2}) / (1 + B); statistic is the
// observed MMD^2. The kernel is fixed across permutations.
TestResult permutation_test(const FeatureTable& zr, const FeatureTable& zt, const RbfKernelParams& kernel,
                            const PermutationOptions& options);
TestResult permutation_test(const FeatureTable& zr, const FeatureTable& zt, const RbfKernelParams& kernel,
                            std::size_t num_permutations, std::uint64_t seed);

// ---------------------------------------------------------------------------
// PCA

struct PcaProjector {
  Eigen::RowVectorXd mean;
  RowMatrix components;  // k x D, row-orthonormal
  std::size_t requested_k = 0;
  std::string warning;  // set when k had to be reduced below requested_k

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }
};

inline constexpr std::size_t kDefaultPcaComponents = 32;

// Top-k right singular vectors of the centred data, by descending singular
// value, each signed so its largest-magnitude entry is positive. k is reduced
// to min(k, N - 1, D, numerical rank) with a warning.
PcaProjector pca_fit(const FeatureTable& reference, std::size_t k = kDefaultPcaComponents);

// (values - mean) * components^T; group ids carried through.
FeatureTable pca_project(const PcaProjector& projector, const FeatureTable& features);

}  // namespace shiftid::stats
