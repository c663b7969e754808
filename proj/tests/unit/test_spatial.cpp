#include "sglmm/errors.hpp"
#include "sglmm/simulate.hpp"
#include "sglmm/spatial.hpp"

#include <doctest.h>

#include <random>

using namespace sglmm;

namespace {

Eigen::MatrixXd path(int n) {
  Rng rng(0);
  return make_graph(GraphKind::Path, n, rng);
}

Eigen::MatrixXd random_design(int n, int k, Rng& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(n, k);
  X.col(0).setOnes();
  for (int c = 1; c < k; ++c) {
    for (int i = 0; i < n; ++i) X(i, c) = z(rng);
  }
  return X;
}

}  // namespace

TEST_SUITE("spatial") {

TEST_CASE("ICAR precision of a 3-path") {
  const auto s = icar_precision(path(3));
  Eigen::MatrixXd expected(3, 3);
  expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK(s.Q == expected);
  CHECK(s.rank == 2);
  CHECK(s.components == 1);
}

TEST_CASE("ICAR precision of an edgeless graph") {
  const auto s = icar_precision(Eigen::MatrixXd::Zero(3, 3));
  CHECK(s.Q.isZero(0.0));
  CHECK(s.rank == 0);
  CHECK(s.components == 3);
}

TEST_CASE("4-cycle spectrum") {
  Rng rng(0);
  const auto s = icar_precision(make_graph(GraphKind::Cycle, 4, rng));
  CHECK(s.rank == 3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.Q);
  const Eigen::Vector4d expected(0, 2, 2, 4);
  CHECK((eig.eigenvalues() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rank equals n minus the number of components") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(6, 6);
  A(0, 1) = A(1, 0) = 1;
  A(1, 2) = A(2, 1) = 1;
  A(3, 4) = A(4, 3) = 1;
  const auto s = icar_precision(A);
  CHECK(s.components == 3);
  CHECK(s.rank == 3);
  CHECK(connected_components(A) == 3);
}

TEST_CASE("malformed adjacency") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
  A(0, 1) = 1;
  CHECK_THROWS_AS(icar_precision(A), StructureError);
  A(1, 0) = 1;
  A(2, 2) = 1;
  CHECK_THROWS_AS(icar_precision(A), StructureError);
  A(2, 2) = 0;
  A(0, 1) = A(1, 0) = 0.5;
  CHECK_THROWS_AS(icar_precision(A), StructureError);
  CHECK_THROWS_AS(icar_precision(Eigen::MatrixXd::Zero(2, 3)), StructureError);
}

TEST_CASE("quadratic form equals the pairwise-difference sum and is shift invariant") {
  Rng rng(5);
  const auto A = make_graph(GraphKind::RandomPlanar, 20, rng);
  const auto Q = icar_precision(A).Q;
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd phi(20);
    for (auto& v : phi) v = z(rng);
    double oracle = 0.0;
    for (int i = 0; i < 20; ++i) {
      for (int k = i + 1; k < 20; ++k) {
        if (A(i, k) == 1.0) oracle += (phi(i) - phi(k)) * (phi(i) - phi(k));
      }
    }
    const double qf = phi.dot(Q * phi);
    CHECK(std::abs(qf - oracle) <= 1e-10 * std::max(1.0, oracle));
    CHECK(std::abs(icar_quadratic_form(A, phi) - oracle) <= 1e-10 * std::max(1.0, oracle));
    const Eigen::VectorXd shifted = phi.array() + 3.7;
    CHECK(std::abs(shifted.dot(Q * shifted) - qf) <= 1e-9 * std::max(1.0, qf));
  }
  CHECK((Q * Eigen::VectorXd::Ones(20)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projector") {
  const auto P2 = projector(Eigen::MatrixXd::Ones(2, 1));
  Eigen::Matrix2d expected;
  expected << 0.5, -0.5, -0.5, 0.5;
  CHECK((P2 - expected).cwiseAbs().maxCoeff() < 1e-14);

  Eigen::Matrix3d sq;
  sq << 2, 1, 0, 1, 3, 1, 0, 1, 4;
  CHECK(projector(sq).cwiseAbs().maxCoeff() < 1e-12);

  Rng rng(3);
  const auto X = random_design(5, 2, rng);
  const auto P = projector(X);
  CHECK((P * X).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(P.trace() - 3.0) < 1e-9);
  CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd deficient(4, 2);
  deficient << 1, 2, 1, 2, 1, 2, 1, 2;
  CHECK_THROWS_AS(projector(deficient), RankError);
}

TEST_CASE("Moran basis on a 3-path matches the closed form") {
  // On the complement of 1, P A P has eigenpairs 0 with (1, 0, -1) / sqrt 2
  // and -4/3 with (1, -2, 1) / sqrt 6.
  const auto A = path(3);
  const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  const auto b = moran_basis(A, X, 2);
  const Eigen::Vector3d v0 = Eigen::Vector3d(1, 0, -1) / std::sqrt(2.0);
  const Eigen::Vector3d v1 = Eigen::Vector3d(1, -2, 1) / std::sqrt(6.0);
  CHECK(std::abs(b.eigenvalues(0)) < 1e-12);
  CHECK(std::abs(b.eigenvalues(1) + 4.0 / 3.0) < 1e-12);
  CHECK((b.M.col(0) - v0).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((b.M.col(1) - v1).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Moran basis invariants at paper dimensions") {
  Rng rng(11);
  const auto A = make_graph(GraphKind::RandomPlanar, 26, rng);
  const auto X = random_design(26, 8, rng);
  const auto b = moran_basis(A, X, 7);
  CHECK(b.M.rows() == 26);
  CHECK(b.M.cols() == 7);
  CHECK((b.M.transpose() * X).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((b.M.transpose() * b.M - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-10);
  for (int m = 1; m < 7; ++m) CHECK(b.eigenvalues(m - 1) >= b.eigenvalues(m));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> prec(b.delta_precision);
  CHECK(prec.eigenvalues().minCoeff() > 0.0);
  const double max_degree = A.rowwise().sum().maxCoeff();
  CHECK(b.eigenvalues.cwiseAbs().maxCoeff() <= max_degree + 1e-12);
  for (int m = 0; m < 7; ++m) {
    int first = 0;
    while (std::abs(b.M(first, m)) <= 1e-12) ++first;
    CHECK(b.M(first, m) > 0.0);
  }
  const auto again = moran_basis(A, X, 7);
  CHECK(again.M == b.M);
  CHECK(again.eigenvalues == b.eigenvalues);
}

TEST_CASE("Moran rank bounds") {
  Rng rng(2);
  const auto A = make_graph(GraphKind::Lattice, 12, rng);
  const auto X = random_design(12, 4, rng);
  CHECK_NOTHROW(moran_basis(A, X, 8));
  CHECK_THROWS_AS(moran_basis(A, X, 9), RankError);
  CHECK_THROWS_AS(moran_basis(A, X, 0), RankError);
}

TEST_CASE("spatial term is orthogonal to the design") {
  Rng rng(4);
  const auto A = make_graph(GraphKind::Lattice, 16, rng);
  const auto X = random_design(16, 3, rng);
  const auto b = moran_basis(A, X, 5);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd delta(5);
    for (auto& v : delta) v = 10.0 * z(rng);
    CHECK((X.transpose() * (b.M * delta)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

}  // TEST_SUITE
