#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sglmm {

/// Areal response/covariate data over n districts and J sectors.
///
/// `y(i, j)` is the per-capita response for district i, sector j. `X` has an
/// intercept column of ones followed by standardized covariates, whose raw
/// means and standard deviations are kept in `covariate_means` /
/// `covariate_sds` (length k - 1). `A` is the binary district adjacency.
struct ArealDataset {
  Eigen::MatrixXd y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd A;
  std::vector<std::string> district_names;
  std::vector<std::string> sector_names;
  std::vector<std::string> covariate_names;
  Eigen::VectorXd covariate_means;
  Eigen::VectorXd covariate_sds;

  int n() const { return static_cast<int>(y.rows()); }
  int J() const { return static_cast<int>(y.cols()); }
  int k() const { return static_cast<int>(X.cols()); }
  int cells() const { return n() * J(); }
};

struct DatasetChecks {
  bool require_positive_y = true;
  double standardization_tol = 1e-10;
};

/// Throws DataError/StructureError/RankError describing the first violated
/// invariant: shapes, positivity, adjacency structure, standardization, rank.
void validate(const ArealDataset& data, const DatasetChecks& checks = {});

/// Symmetric binary zero-diagonal check for an adjacency matrix.
void validate_adjacency(const Eigen::MatrixXd& A);

}  // namespace sglmm
