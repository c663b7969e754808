#include "sglmm/dataset.hpp"

#include "sglmm/errors.hpp"

#include <cmath>
#include <string>

namespace sglmm {

void validate_adjacency(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw StructureError("adjacency must be square");
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if (A(i, i) != 0.0) {
      throw StructureError("adjacency has a self-loop at node " + std::to_string(i));
    }
    for (Eigen::Index k = 0; k < A.cols(); ++k) {
      const double a = A(i, k);
      if (a != 0.0 && a != 1.0) throw StructureError("adjacency entries must be 0 or 1");
      if (a != A(k, i)) {
        throw StructureError("adjacency is not symmetric at (" + std::to_string(i) + ", " +
                             std::to_string(k) + ")");
      }
    }
  }
}

void validate(const ArealDataset& data, const DatasetChecks& checks) {
  const Eigen::Index n = data.y.rows();
  const Eigen::Index J = data.y.cols();
  const Eigen::Index k = data.X.cols();
  if (n == 0 || J == 0 || k == 0) throw ShapeError("dataset has an empty dimension");
  if (data.X.rows() != n) throw ShapeError("X rows do not match y rows");
  if (data.A.rows() != n || data.A.cols() != n) throw ShapeError("A must be n x n");
  if (static_cast<Eigen::Index>(data.district_names.size()) != n ||
      static_cast<Eigen::Index>(data.sector_names.size()) != J ||
      static_cast<Eigen::Index>(data.covariate_names.size()) != k) {
    throw ShapeError("label lists do not match matrix dimensions");
  }
  for (Eigen::Index j = 0; j < J; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = data.y(i, j);
      if (!std::isfinite(v) || (checks.require_positive_y && v <= 0.0)) {
        throw DataError("response cell (" + data.district_names[i] + ", " +
                        data.sector_names[j] + ") is not positive and finite");
      }
    }
  }
  validate_adjacency(data.A);
  if ((data.X.col(0).array() != 1.0).any()) {
    throw DataError("first column of X must be the intercept of ones");
  }
  for (Eigen::Index c = 1; c < k; ++c) {
    const double mean = data.X.col(c).mean();
    const double var = (data.X.col(c).array() - mean).square().sum() / static_cast<double>(n - 1);
    if (std::abs(mean) > checks.standardization_tol ||
        std::abs(var - 1.0) > checks.standardization_tol) {
      throw DataError("covariate '" + data.covariate_names[c] + "' is not standardized");
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);
  if (qr.rank() < k) throw RankError("design matrix X is not of full column rank");
}

}  // namespace sglmm
