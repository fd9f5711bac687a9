#include <algorithm>
#include <map>
#include <numeric>

#include "shiftid/errors.hpp"
#include "shiftid/stats.hpp"

namespace shiftid::stats {

namespace {

// Permutations evaluated per matrix product.
constexpr Eigen::Index kBlock = 128;

// Permuted and observed statistics come from the same quadratic-form route,
// but the matrix product may round differently per column.
constexpr double kTieTolerance = 1e-12;

void append_groups(const FeatureTable& table, std::size_t offset, std::vector<std::vector<std::size_t>>& out) {
  const auto ids = table.effective_groups();
  std::map<GroupId, std::size_t> slot;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto [it, inserted] = slot.try_emplace(ids[r], out.size());
    if (inserted) out.emplace_back();
    out[it->second].push_back(offset + r);
  }
}

// Kernel matrix of the pooled rows with a zero diagonal.
RowMatrix off_diagonal_kernel(const RowMatrix& pooled, const RbfKernelParams& kernel) {
  RowMatrix k = pairwise_squared_distances(pooled);
  const double scale = -1.0 / (2.0 * kernel.sigma());
  k = (k.array() * scale).exp().matrix();
  k.diagonal().setZero();
  return k;
}

struct PooledSums {
  double total = 0.0;        // sum of all off-diagonal kernel values
  Eigen::VectorXd row_sums;  // per-row off-diagonal sums
};

// Unbiased MMD^2 for one partition given x'Kx for the first side's indicator.
double partition_mmd2(double within_first, double first_row_sum, const PooledSums& sums, double m, double n) {
  const double cross = first_row_sum - within_first;
  const double within_second = sums.total - 2.0 * first_row_sum + within_first;
  return within_first / (m * (m - 1.0)) + within_second / (n * (n - 1.0)) - 2.0 * cross / (m * n);
}

}  // namespace

GroupLayout::GroupLayout(const FeatureTable& first, const FeatureTable& second)
    : pooled_rows_(first.rows() + second.rows()), first_rows_(first.rows()) {
  append_groups(first, 0, groups_);
  append_groups(second, first.rows(), groups_);
  for (const auto& g : groups_) largest_ = std::max(largest_, g.size());
}

std::vector<std::uint8_t> GroupLayout::draw_partition(Rng& rng) const {
  std::vector<std::size_t> order(groups_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> side(pooled_rows_, 0);
  std::size_t assigned = 0;
  for (std::size_t g : order) {
    if (assigned >= first_rows_) break;
    for (std::size_t r : groups_[g]) side[r] = 1;
    assigned += groups_[g].size();
  }
  return side;
}

TestResult permutation_test(const FeatureTable& zr, const FeatureTable& zt, const RbfKernelParams& kernel,
                            const PermutationOptions& options) {
  if (zr.cols() != zt.cols()) throw DimensionMismatch("permutation_test: feature dimensions differ");
  if (options.num_permutations < 1) throw ValidationError("permutation_test: need at least one permutation");

  const GroupLayout layout(zr, zt);
  const std::size_t total_rows = layout.pooled_rows();
  // Worst case the first side overshoots by largest_group() - 1 rows.
  if (total_rows < zr.rows() + layout.largest_group() - 1 + 2) {
    throw GroupSizeMismatch("groups too large to keep at least two rows on each side of every permutation");
  }

  RowMatrix pooled(static_cast<Eigen::Index>(total_rows), static_cast<Eigen::Index>(zr.cols()));
  pooled << zr.values(), zt.values();
  const RowMatrix gram = off_diagonal_kernel(pooled, kernel);
  PooledSums sums;
  sums.row_sums = gram.rowwise().sum();
  sums.total = sums.row_sums.sum();

  const auto n_total = static_cast<Eigen::Index>(total_rows);
  const std::size_t b = options.num_permutations;
  Rng rng = make_rng(options.seed);

  // Column 0 of the first block is the observed split.
  Eigen::MatrixXd indicators(n_total, kBlock);
  std::vector<double> first_sizes(static_cast<std::size_t>(kBlock));
  double observed = 0.0;
  std::size_t at_least_observed = 0;
  std::size_t drawn = 0;
  bool observed_pending = true;

  while (drawn < b) {
    Eigen::Index cols = 0;
    indicators.setZero();
    if (observed_pending) {
      indicators.col(0).head(static_cast<Eigen::Index>(zr.rows())).setOnes();
      first_sizes[0] = static_cast<double>(zr.rows());
      cols = 1;
    }
    const Eigen::Index block_start = cols;
    while (cols < kBlock && drawn < b) {
      const auto side = layout.draw_partition(rng);
      if (options.on_partition) options.on_partition(side);
      std::size_t count = 0;
      for (std::size_t r = 0; r < total_rows; ++r) {
        if (side[r]) {
          indicators(static_cast<Eigen::Index>(r), cols) = 1.0;
          ++count;
        }
      }
      first_sizes[static_cast<std::size_t>(cols)] = static_cast<double>(count);
      ++cols;
      ++drawn;
    }
    const auto used = indicators.leftCols(cols);
    const Eigen::MatrixXd weighted = gram * used;
    const Eigen::RowVectorXd row_sum_terms = sums.row_sums.transpose() * used;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double m = first_sizes[static_cast<std::size_t>(c)];
      const double stat = partition_mmd2(used.col(c).dot(weighted.col(c)), row_sum_terms(c), sums, m,
                                         static_cast<double>(total_rows) - m);
      if (c < block_start) {
        observed = stat;
        observed_pending = false;
      } else if (stat >= observed - kTieTolerance) {
        ++at_least_observed;
      }
    }
  }

  TestResult result;
  result.statistic = mmd2_unbiased(zr, zt, kernel);
  result.p_value = static_cast<double>(1 + at_least_observed) / static_cast<double>(1 + b);
  return result;
}

TestResult permutation_test(const FeatureTable& zr, const FeatureTable& zt, const RbfKernelParams& kernel,
                            std::size_t num_permutations, std::uint64_t seed) {
  PermutationOptions options;
  options.num_permutations = num_permutations;
  options.seed = seed;
  return permutation_test(zr, zt, kernel, options);
}

}  // namespace shiftid::stats
