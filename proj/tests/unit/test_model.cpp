#include "sglmm/errors.hpp"
#include "sglmm/model.hpp"
#include "sglmm/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sglmm;

namespace {

ModelSpec make_spec(FamilyKind f, bool spatial, int r, int k, int J) {
  ModelSpec s;
  s.family = Family(f);
  s.spatial = spatial;
  s.r = r;
  s.k = k;
  s.J = J;
  return s;
}

ArealDataset tiny(int n, int J, const Eigen::MatrixXd& y) {
  ArealDataset d;
  d.y = y;
  d.X = Eigen::MatrixXd::Ones(n, 1);
  d.A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) d.A(i, i + 1) = d.A(i + 1, i) = 1;
  for (int i = 0; i < n; ++i) d.district_names.push_back("d" + std::to_string(i));
  for (int j = 0; j < J; ++j) d.sector_names.push_back("s" + std::to_string(j));
  d.covariate_names = {"Intercept"};
  return d;
}

double inv_gamma_oracle(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1) * std::log(x) - b / x;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("parameter count") {
  CHECK(ParamLayout(8, 7, 7, true).size() == 107);
  CHECK(ParamLayout(8, 7, 0, false).size() == 57);
  for (int k = 1; k <= 9; ++k) {
    for (int J = 1; J <= 8; ++J) {
      for (int r = 1; r <= 5; ++r) CHECK(ParamLayout(k, J, r, true).size() == k * J + r * J + 2);
      CHECK(ParamLayout(k, J, 0, false).size() == k * J + 1);
    }
  }
  const ParamLayout layout(2, 2, 1, true);
  const auto names = layout.names({"A", "B"}, {"Intercept", "x"});
  CHECK(names == std::vector<std::string>{"beta[A,Intercept]", "beta[A,x]", "beta[B,Intercept]",
                                          "beta[B,x]", "delta[A,1]", "delta[B,1]", "log_theta",
                                          "log_sigma2"});
  CHECK_THROWS_AS(ParamLayout(2, 2, 0, false).log_sigma2_index(), SpecError);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(make_spec(FamilyKind::Gamma, true, 0, 2, 2).validate(), SpecError);
  CHECK_THROWS_AS(make_spec(FamilyKind::Gamma, false, 2, 2, 2).validate(), SpecError);
  auto s = make_spec(FamilyKind::Gamma, false, 0, 2, 2);
  s.hyper.b_theta = 0.0;
  CHECK_THROWS_AS(s.validate(), SpecError);
  CHECK(make_spec(FamilyKind::Weibull, true, 3, 2, 2).name() == "spatial-weibull");
}

TEST_CASE("normal likelihood at zero data") {
  const int n = 5, J = 3;
  const auto d = tiny(n, J, Eigen::MatrixXd::Zero(n, J));
  const auto spec = make_spec(FamilyKind::Normal, false, 0, 1, J);
  const Eigen::VectorXd params = Eigen::VectorXd::Zero(ParamLayout(spec).size());
  CHECK(log_likelihood(spec, params, d, std::nullopt) ==
        doctest::Approx(n * J * -0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("single cell reduces to one density call") {
  const auto d = tiny(1, 1, Eigen::MatrixXd::Constant(1, 1, 2.5));
  const auto spec = make_spec(FamilyKind::Gamma, false, 0, 1, 1);
  Eigen::VectorXd params(2);
  params << 0.4, std::log(0.7);
  CHECK(log_likelihood(spec, params, d, std::nullopt) ==
        doctest::Approx(log_density(spec.family, 2.5, std::exp(0.4), 0.7)).epsilon(1e-14));
}

TEST_CASE("3 x 2 spatial fixture equals a cell-by-cell loop") {
  Eigen::MatrixXd y(3, 2);
  y << 1.2, 0.4, 2.0, 3.1, 0.9, 1.7;
  const auto d = tiny(3, 2, y);
  const auto basis = moran_basis(d.A, d.X, 1);
  for (auto kind : {FamilyKind::Gamma, FamilyKind::LogNormal, FamilyKind::Normal, FamilyKind::Weibull}) {
    const auto spec = make_spec(kind, true, 1, 1, 2);
    Eigen::VectorXd p(6);
    p << 0.3, -0.2, 0.5, -0.7, std::log(0.8), std::log(0.3);
    double oracle = 0.0;
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 3; ++i) {
        const double eta = p(j) + basis.M(i, 0) * p(2 + j);
        const double loc = spec.family.link() == Link::Log ? std::exp(eta) : eta;
        oracle += log_density(spec.family, y(i, j), loc, 0.8);
      }
    }
    CAPTURE(spec.family.name());
    CHECK(log_likelihood(spec, p, d, basis) == doctest::Approx(oracle).epsilon(1e-13));
  }
}

TEST_CASE("prior pieces") {
  Eigen::MatrixXd y = Eigen::MatrixXd::Ones(3, 2);
  const auto d = tiny(3, 2, y);
  const auto basis = moran_basis(d.A, d.X, 1);
  const auto spec = make_spec(FamilyKind::Gamma, true, 1, 1, 2);
  const auto& h = spec.hyper;
  const double theta = 0.6, sigma2 = 1.7;
  Eigen::VectorXd p(6);
  p << 0, 0, 0, 0, std::log(theta), std::log(sigma2);
  const double beta_const = 2 * -0.5 * std::log(2 * std::numbers::pi * h.s2_beta);
  const double theta_term = inv_gamma_oracle(theta, h.a_theta, h.b_theta) + std::log(theta);
  const double sigma_term = inv_gamma_oracle(sigma2, h.a_sigma, h.b_sigma) + std::log(sigma2);
  const double delta_term = 2 * 0.5 * std::log(1.0 / sigma2);
  CHECK(log_prior(spec, p, basis) ==
        doctest::Approx(beta_const + theta_term + sigma_term + delta_term).epsilon(1e-13));

  // A single beta entry b.
  Eigen::VectorXd q = p;
  q(0) = 3.0;
  CHECK(log_prior(spec, q, basis) - log_prior(spec, p, basis) ==
        doctest::Approx(-9.0 / (2 * h.s2_beta)).epsilon(1e-12));
  CHECK(inverse_gamma_log_density(theta, h.a_theta, h.b_theta) ==
        doctest::Approx(inv_gamma_oracle(theta, h.a_theta, h.b_theta)).epsilon(1e-14));
}

TEST_CASE("doubling sigma2 changes the delta block as the kernel says") {
  Eigen::MatrixXd y = Eigen::MatrixXd::Ones(4, 3);
  auto d = tiny(4, 3, y);
  const auto basis = moran_basis(d.A, d.X, 2);
  const auto spec = make_spec(FamilyKind::Gamma, true, 2, 1, 3);
  const ParamLayout layout(spec);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(layout.size());
  p.segment(layout.delta_offset(0), 2) << 0.4, -0.3;
  p.segment(layout.delta_offset(1), 2) << 1.1, 0.2;
  p.segment(layout.delta_offset(2), 2) << -0.5, 0.9;
  const double s2 = 0.8;
  p(layout.log_theta_index()) = 0.1;
  p(layout.log_sigma2_index()) = std::log(s2);
  Eigen::VectorXd p2 = p;
  p2(layout.log_sigma2_index()) = std::log(2 * s2);

  double quad = 0.0;
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd dj = p.segment(layout.delta_offset(j), 2);
    quad += dj.dot(basis.delta_precision * dj);
  }
  const auto& h = spec.hyper;
  const double ig_change = (inv_gamma_oracle(2 * s2, h.a_sigma, h.b_sigma) + std::log(2 * s2)) -
                           (inv_gamma_oracle(s2, h.a_sigma, h.b_sigma) + std::log(s2));
  const double delta_change = -(2 * 3 / 2.0) * std::log(2.0) + quad / (2 * s2) * 0.5;
  CHECK(log_prior(spec, p2, basis) - log_prior(spec, p, basis) ==
        doctest::Approx(ig_change + delta_change).epsilon(1e-12));
}

TEST_CASE("posterior is the sum of its parts and behaves at the truth") {
  const auto fixture = paper_scale_fixture(3);
  const auto syn = generate(fixture);
  const auto spec = fixture.model_spec();
  const Posterior post(spec, syn.data, syn.basis);
  const double lp = post.log_posterior(syn.truth);
  CHECK(std::isfinite(lp));
  CHECK(lp == doctest::Approx(post.log_likelihood(syn.truth) + post.log_prior(syn.truth)).epsilon(1e-14));
  CHECK(post.cell_log_likelihood(syn.truth).sum() ==
        doctest::Approx(post.log_likelihood(syn.truth)).epsilon(1e-12));

  // Moving one observation toward its fitted mean raises the likelihood.
  ArealDataset better = syn.data;
  const auto loc = post.location(syn.truth);
  const double mode_target = loc(0, 0) * (1.0 - 1.0 / (loc(0, 0) * loc(0, 0) / fixture.true_theta));
  better.y(0, 0) = 0.5 * (better.y(0, 0) + mode_target);
  const Posterior post2(spec, better, syn.basis);
  CHECK(post2.log_likelihood(syn.truth) > post.log_likelihood(syn.truth));
  CHECK(post2.log_prior(syn.truth) == post.log_prior(syn.truth));
}

TEST_CASE("non-spatial model is the spatial model with delta fixed at zero") {
  const auto fixture = paper_scale_fixture(4);
  const auto syn = generate(fixture);
  const auto spatial = fixture.model_spec();
  auto flat = spatial;
  flat.spatial = false;
  flat.r = 0;
  const ParamLayout ls(spatial), lf(flat);
  Eigen::VectorXd ps = syn.truth;
  ps.segment(ls.delta_offset(0), static_cast<Eigen::Index>(spatial.r) * spatial.J).setZero();
  Eigen::VectorXd pf(lf.size());
  pf.head(spatial.k * spatial.J) = ps.head(spatial.k * spatial.J);
  pf(lf.log_theta_index()) = ps(ls.log_theta_index());
  const Posterior a(spatial, syn.data, syn.basis), b(flat, syn.data, std::nullopt);
  CHECK(a.log_likelihood(ps) == doctest::Approx(b.log_likelihood(pf)).epsilon(1e-14));
  CHECK(a.log_prior(ps) - b.log_prior(pf) == doctest::Approx(a.log_sigma2_prior(ps)).epsilon(1e-12));
}

TEST_CASE("argument checks") {
  const auto d = tiny(3, 2, Eigen::MatrixXd::Ones(3, 2));
  const auto spec = make_spec(FamilyKind::Gamma, false, 0, 1, 2);
  CHECK_THROWS_AS(log_likelihood(spec, Eigen::VectorXd::Zero(2), d, std::nullopt), ShapeError);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
  p(1) = NAN;
  CHECK_THROWS_AS(log_likelihood(spec, p, d, std::nullopt), DomainError);
  const auto spatial = make_spec(FamilyKind::Gamma, true, 1, 1, 2);
  CHECK_THROWS_AS(Posterior(spatial, d, std::nullopt), ShapeError);
  auto negative = d;
  negative.y(0, 0) = -1.0;
  CHECK_THROWS_AS(Posterior(spec, negative, std::nullopt), DomainError);
}

}  // TEST_SUITE
