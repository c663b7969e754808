#pragma once

#include <Eigen/Dense>

namespace sglmm {

/// Intrinsic CAR precision Q = diag(A 1) - A with its rank.
struct IcarStructure {
  Eigen::MatrixXd Q;
  int rank = 0;
  int components = 0;
};

/// Moran basis for restricted spatial regression.
struct MoranBasis {
  Eigen::MatrixXd M;                ///< n x r, orthonormal columns
  Eigen::VectorXd eigenvalues;      ///< r, descending
  Eigen::MatrixXd delta_precision;  ///< r x r, M' Q M
};

IcarStructure icar_precision(const Eigen::MatrixXd& A);

/// Number of connected components of the graph with adjacency A.
int connected_components(const Eigen::MatrixXd& A);

/// I - X (X'X)^{-1} X'. Throws RankError if X is column-rank deficient.
Eigen::MatrixXd projector(const Eigen::MatrixXd& X);

/// Eigenvectors of P A P (P the projector orthogonal to X) belonging to the r
/// algebraically largest eigenvalues, each flipped so that its first nonzero
/// entry is positive.
MoranBasis moran_basis(const Eigen::MatrixXd& A, const Eigen::MatrixXd& X, int r);

/// phi' Q phi computed as the sum of squared differences over edges.
double icar_quadratic_form(const Eigen::MatrixXd& A, const Eigen::VectorXd& phi);

}  // namespace sglmm
