#include "sglmm/errors.hpp"
#include "sglmm/simulate.hpp"

#include <doctest.h>

#include <cmath>

using namespace sglmm;

TEST_SUITE("simulate") {

TEST_CASE("graph families") {
  Rng rng(1);
  const auto lattice = make_graph(GraphKind::Lattice, 9, rng);
  CHECK(lattice.sum() == 2 * 12);
  const auto path = make_graph(GraphKind::Path, 5, rng);
  CHECK(path.sum() == 2 * 4);
  const auto cycle = make_graph(GraphKind::Cycle, 5, rng);
  CHECK((cycle.rowwise().sum().array() == 2).all());
  CHECK_THROWS_AS(make_graph(GraphKind::Cycle, 2, rng), SpecError);
  const auto planar = make_graph(GraphKind::RandomPlanar, 26, rng);
  CHECK(planar == planar.transpose());
  CHECK(planar.diagonal().isZero());
  CHECK(connected_components(planar) == 1);
  // Planar graphs have at most 3n - 6 edges.
  CHECK(planar.sum() / 2 <= 3 * 26 - 6);
  CHECK(parse_graph_kind("Planar") == GraphKind::RandomPlanar);
  CHECK_THROWS_AS(parse_graph_kind("torus"), SpecError);
}

TEST_CASE("paper-scale fixture") {
  const auto spec = paper_scale_fixture(3);
  const auto s = generate(spec);
  CHECK(s.data.n() == 26);
  CHECK(s.data.J() == 7);
  CHECK(s.data.k() == 8);
  CHECK(s.truth.size() == 107);
  REQUIRE(s.basis.has_value());
  CHECK(s.basis->M.cols() == 7);
  CHECK((s.data.y.array() > 0).all());
  CHECK_NOTHROW(validate(s.data));
  CHECK(std::exp(s.truth(ParamLayout(spec.model_spec()).log_sigma2_index())) ==
        doctest::Approx(0.05));
}

TEST_CASE("same seed, same data") {
  const auto a = generate(paper_scale_fixture(5));
  const auto b = generate(paper_scale_fixture(5));
  CHECK(a.data.y == b.data.y);
  CHECK(a.data.X == b.data.X);
  CHECK(a.data.A == b.data.A);
  CHECK(a.truth == b.truth);
  const auto c = generate(paper_scale_fixture(6));
  CHECK(c.data.y != a.data.y);
}

TEST_CASE("noiseless normal reproduces the linear predictor") {
  SynthSpec s;
  s.n = 16;
  s.J = 3;
  s.k = 3;
  s.r = 4;
  s.graph = GraphKind::Lattice;
  s.family = Family(FamilyKind::Normal);
  s.true_theta = 1e-8;
  const auto out = generate(s);
  const Posterior post(s.model_spec(), out.data, out.basis);
  const Eigen::MatrixXd eta = post.linear_predictor(out.truth);
  CHECK((out.data.y - eta).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("rank bound") {
  SynthSpec s;
  s.n = 10;
  s.k = 4;
  s.J = 2;
  s.r = 7;
  CHECK_THROWS_AS(generate(s), RankError);
  s.r = 6;
  s.graph = GraphKind::Path;
  CHECK_NOTHROW(generate(s));
  s.spatial = false;
  s.r = 50;
  CHECK(!generate(s).basis.has_value());
}

TEST_CASE("positivity guard for normal specs") {
  SynthSpec s;
  s.n = 12;
  s.J = 2;
  s.k = 2;
  s.r = 3;
  s.graph = GraphKind::Cycle;
  s.family = Family(FamilyKind::Normal);
  s.true_theta = 4.0;
  s.require_positive = true;
  CHECK_THROWS_AS(generate(s), SpecError);
  s.true_theta = 0.01;
  CHECK_NOTHROW(generate(s));
}

TEST_CASE("cell means over re-generations match the inverse link") {
  for (FamilyKind f : {FamilyKind::Gamma, FamilyKind::LogNormal, FamilyKind::Weibull}) {
    SynthSpec s;
    s.n = 9;
    s.J = 2;
    s.k = 2;
    s.r = 3;
    s.graph = GraphKind::Lattice;
    s.family = Family(f);
    s.true_theta = f == FamilyKind::Gamma ? 4.0 : f == FamilyKind::LogNormal ? 0.2 : 3.0;
    s.seed = 40;
    const auto out = generate(s);
    Rng rng(123);
    const int R = 10'000;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(s.n, s.J), sq = sum;
    for (int rep = 0; rep < R; ++rep) {
      const Eigen::MatrixXd y = redraw_response(s, out, rng);
      sum += y;
      sq += y.cwiseProduct(y);
    }
    const Eigen::MatrixXd mean = sum / R;
    const Eigen::MatrixXd var = (sq / R - mean.cwiseProduct(mean)) * R / (R - 1.0);
    int outside = 0;
    for (int j = 0; j < s.J; ++j) {
      for (int i = 0; i < s.n; ++i) {
        const double expected = implied_mean(s.family, out.location(i, j), s.true_theta);
        outside += std::abs(mean(i, j) - expected) > 3.0 * std::sqrt(var(i, j) / R);
      }
    }
    // 18 cells at the 3-sigma level: more than one miss would be very unlikely.
    CHECK(outside <= 1);
  }
}

}  // TEST_SUITE
