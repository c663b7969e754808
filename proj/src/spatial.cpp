#include "sglmm/spatial.hpp"

#include "sglmm/dataset.hpp"
#include "sglmm/errors.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace sglmm {

namespace {
constexpr double kRankTol = 1e-9;
}

int connected_components(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack;
  int components = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (seen[static_cast<std::size_t>(s)]) continue;
    ++components;
    stack.push_back(s);
    seen[static_cast<std::size_t>(s)] = true;
    while (!stack.empty()) {
      const Eigen::Index v = stack.back();
      stack.pop_back();
      for (Eigen::Index w = 0; w < n; ++w) {
        if (A(v, w) != 0.0 && !seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          stack.push_back(w);
        }
      }
    }
  }
  return components;
}

IcarStructure icar_precision(const Eigen::MatrixXd& A) {
  validate_adjacency(A);
  IcarStructure out;
  out.Q = -A;
  out.Q.diagonal() = A.rowwise().sum();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.Q, Eigen::EigenvaluesOnly);
  out.rank = static_cast<int>((eig.eigenvalues().array() > kRankTol).count());
  out.components = connected_components(A);
  return out;
}

Eigen::MatrixXd projector(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (k > n || qr.rank() < k) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const auto& sv = svd.singularValues();
    std::ostringstream msg;
    msg << "design matrix is rank deficient (rank " << qr.rank() << " < " << k
        << ", condition estimate " << (sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY)
        << ")";
    throw RankError(msg.str());
  }
  // With X = QR, X (X'X)^{-1} X' = Q1 Q1' for the thin orthonormal factor Q1.
  const Eigen::MatrixXd q1 = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) - q1 * q1.transpose();
  return 0.5 * (P + P.transpose());
}

MoranBasis moran_basis(const Eigen::MatrixXd& A, const Eigen::MatrixXd& X, int r) {
  validate_adjacency(A);
  const Eigen::Index n = A.rows();
  if (X.rows() != n) throw ShapeError("X and A disagree on the number of districts");
  if (r < 1 || r > n - X.cols()) {
    throw RankError("Moran rank r=" + std::to_string(r) + " must lie in [1, n - k] = [1, " +
                    std::to_string(n - X.cols()) + "]");
  }
  projector(X);  // rank check with a condition estimate in the error

  // P A P vanishes on col(X), so its informative spectrum is that of
  // B = C' A C where C is an orthonormal basis of the complement of col(X).
  const Eigen::Index k = X.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::MatrixXd full_q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd C = full_q.rightCols(n - k);
  Eigen::MatrixXd B = C.transpose() * A * C;
  B = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B);
  if (eig.info() != Eigen::Success) throw NumericalError("eigen-decomposition of P A P failed");

  MoranBasis out;
  out.M.resize(n, r);
  out.eigenvalues.resize(r);
  const Eigen::Index m = n - k;
  for (int c = 0; c < r; ++c) {
    const Eigen::Index src = m - 1 - c;  // ascending order from the solver
    out.eigenvalues(c) = eig.eigenvalues()(src);
    out.M.col(c) = C * eig.eigenvectors().col(src);
  }
  for (int c = 0; c < r; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(out.M(i, c)) > 1e-12) {
        if (out.M(i, c) < 0) out.M.col(c) = -out.M.col(c);
        break;
      }
    }
  }
  const IcarStructure icar = icar_precision(A);
  out.delta_precision = out.M.transpose() * icar.Q * out.M;
  out.delta_precision = 0.5 * (out.delta_precision + out.delta_precision.transpose());
  return out;
}

double icar_quadratic_form(const Eigen::MatrixXd& A, const Eigen::VectorXd& phi) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index k = i + 1; k < A.cols(); ++k) {
      if (A(i, k) != 0.0) {
        const double d = phi(i) - phi(k);
        sum += d * d;
      }
    }
  }
  return sum;
}

}  // namespace sglmm
