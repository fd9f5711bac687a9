#include <algorithm>
#include <sstream>

#include <Eigen/SVD>

#include "shiftid/errors.hpp"
#include "shiftid/stats.hpp"

namespace shiftid::stats {

namespace {

// Singular values below this fraction of the largest count as zero.
constexpr double kRankTolerance = 1e-9;

}  // namespace

PcaProjector pca_fit(const FeatureTable& reference, std::size_t k) {
  if (k < 1) throw ValidationError("pca_fit: k must be at least 1");
  const RowMatrix& x = reference.values();
  const std::size_t n = reference.rows();
  const std::size_t d = reference.cols();

  PcaProjector projector;
  projector.requested_k = k;
  projector.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - projector.mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& singular = svd.singularValues();
  if (singular.size() == 0 || singular(0) <= 0.0) {
    throw DegenerateSample("pca_fit: reference features have zero variance");
  }
  std::size_t rank = 0;
  while (rank < static_cast<std::size_t>(singular.size()) &&
         singular(static_cast<Eigen::Index>(rank)) > kRankTolerance * singular(0)) {
    ++rank;
  }

  const std::size_t kept = std::min({k, n - 1, d, rank});
  if (kept < k) {
    std::ostringstream os;
    os << "pca_fit: reduced k from " << k << " to " << kept << " (N=" << n << ", D=" << d
       << ", numerical rank=" << rank << ")";
    projector.warning = os.str();
  }

  projector.components = svd.matrixV().leftCols(static_cast<Eigen::Index>(kept)).transpose();
  for (Eigen::Index c = 0; c < projector.components.rows(); ++c) {
    auto row = projector.components.row(c);
    Eigen::Index arg = 0;
    row.cwiseAbs().maxCoeff(&arg);
    if (row(arg) < 0.0) row = -row;
  }
  return projector;
}

FeatureTable pca_project(const PcaProjector& projector, const FeatureTable& features) {
  if (features.cols() != projector.input_dim()) {
    throw DimensionMismatch("pca_project: projector expects " + std::to_string(projector.input_dim()) +
                            " columns, got " + std::to_string(features.cols()));
  }
  RowMatrix projected = (features.values().rowwise() - projector.mean) * projector.components.transpose();
  return FeatureTable(std::move(projected), features.group_ids());
}

}  // namespace shiftid::stats
