#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "shiftid/errors.hpp"
#include "shiftid/stats.hpp"

namespace shiftid::stats {

namespace {

double squared_distance(const double* a, const double* b, Eigen::Index d) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

// Sum of k(x_i, y_j) over all i, j (or i != j when same is true), in row order.
double kernel_sum(const RowMatrix& x, const RowMatrix& y, const RbfKernelParams& kernel, bool same) {
  const Eigen::Index d = x.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double* xi = x.data() + i * d;
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      if (same && i == j) continue;
      total += kernel(squared_distance(xi, y.data() + j * d, d));
    }
  }
  return total;
}

}  // namespace

RbfKernelParams::RbfKernelParams(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("RBF bandwidth must be positive and finite");
}

RowMatrix pairwise_squared_distances(const RowMatrix& z) {
  const Eigen::Index n = z.rows();
  const Eigen::Index d = z.cols();
  RowMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = 0.0;
    const double* zi = z.data() + i * d;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = squared_distance(zi, z.data() + j * d, d);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

RbfKernelParams median_heuristic_bandwidth(const RowMatrix& pooled) {
  const Eigen::Index n = pooled.rows();
  if (n < 2) throw EmptyInput("median heuristic needs at least 2 points");
  const Eigen::Index d = pooled.cols();
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  double smallest_positive = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* zi = pooled.data() + i * d;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = squared_distance(zi, pooled.data() + j * d, d);
      dist.push_back(v);
      if (v > 0.0) smallest_positive = std::min(smallest_positive, v);
    }
  }
  if (!std::isfinite(smallest_positive)) throw DegenerateSample("all points are identical; bandwidth undefined");

  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  return RbfKernelParams(median > 0.0 ? median : smallest_positive);
}

RbfKernelParams median_heuristic_bandwidth(const FeatureTable& pooled) {
  return median_heuristic_bandwidth(pooled.values());
}

RbfKernelParams median_heuristic_bandwidth(const FeatureTable& a, const FeatureTable& b) {
  if (a.cols() != b.cols()) throw DimensionMismatch("tables differ in feature dimension");
  RowMatrix pooled(a.values().rows() + b.values().rows(), a.values().cols());
  pooled << a.values(), b.values();
  return median_heuristic_bandwidth(pooled);
}

double mmd2_unbiased(const FeatureTable& zr, const FeatureTable& zt, const RbfKernelParams& kernel) {
  if (zr.cols() != zt.cols()) {
    throw DimensionMismatch("mmd2_unbiased: feature dimensions differ (" + std::to_string(zr.cols()) + " vs " +
                            std::to_string(zt.cols()) + ")");
  }
  const double m = static_cast<double>(zr.rows());
  const double n = static_cast<double>(zt.rows());
  const double xx = kernel_sum(zr.values(), zr.values(), kernel, true);
  const double yy = kernel_sum(zt.values(), zt.values(), kernel, true);
  const double xy = kernel_sum(zr.values(), zt.values(), kernel, false);
  return xx / (m * m - m) + yy / (n * n - n) - 2.0 * xy / (m * n);
}

}  // namespace shiftid::stats
