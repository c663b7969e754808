#include "sglmm/errors.hpp"
#include "sglmm/likelihoods.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sglmm;
using HP = boost::multiprecision::cpp_bin_float_50;

namespace {

const Family gamma_f{FamilyKind::Gamma};
const Family lognormal_f{FamilyKind::LogNormal};
const Family normal_f{FamilyKind::Normal};
const Family weibull_f{FamilyKind::Weibull};

double integrate(Family f, double loc, double theta) {
  auto pdf = [&](double y) { return std::exp(log_density(f, y, loc, theta)); };
  if (f.kind() == FamilyKind::Normal) {
    boost::math::quadrature::sinh_sinh<double> q;
    return q.integrate([&](double y) { return pdf(y); });
  }
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate([&](double y) { return y > 0 ? pdf(y) : 0.0; });
}

struct Moments {
  double mean, var, se_mean, se_var;
};

Moments sample_moments(Family f, double loc, double theta, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = sample(f, loc, theta, rng);
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n - 1;
  m4 /= n;
  return {m, m2, std::sqrt(m2 / n), std::sqrt((m4 - m2 * m2) / n)};
}

}  // namespace

TEST_SUITE("likelihoods") {

TEST_CASE("special cases") {
  CHECK(log_density(gamma_f, 1.0, 1.0, 1.0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(log_density(lognormal_f, 1.0, 0.0, 1.0) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(log_density(weibull_f, 1.0, 1.0, 1.0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(log_density(normal_f, 0.0, 0.0, 1.0) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("gamma density against a 50-digit evaluation") {
  const HP y = 2, mu = 3, theta = HP(3) / 2;
  const HP shape = mu * mu / theta, rate = mu / theta;
  const HP oracle = shape * log(rate) - boost::math::lgamma(shape) + (shape - 1) * log(y) - rate * y;
  CHECK(std::abs(log_density(gamma_f, 2.0, 3.0, 1.5) - oracle.convert_to<double>()) < 1e-12);
}

TEST_CASE("densities integrate to one") {
  const std::vector<std::tuple<Family, double, double>> cases{
      {gamma_f, 1.0, 1.0},     {gamma_f, 5.0, 2.0},     {gamma_f, 40.0, 3.0},
      {lognormal_f, 0.0, 1.0}, {lognormal_f, 2.0, 0.3}, {lognormal_f, -1.0, 2.0},
      {normal_f, 0.0, 1.0},    {normal_f, 7.0, 0.5},    {normal_f, -3.0, 9.0},
      {weibull_f, 1.0, 1.0},   {weibull_f, 2.0, 3.0},   {weibull_f, 0.5, 0.8}};
  for (const auto& [f, loc, theta] : cases) {
    CAPTURE(f.name());
    CAPTURE(loc);
    CHECK(std::abs(integrate(f, loc, theta) - 1.0) < 1e-3);
  }
}

TEST_CASE("Weibull with unit shape equals the matching gamma") {
  for (double lambda : {0.3, 1.0, 4.5}) {
    for (double y : {0.01, 0.7, 3.0, 20.0}) {
      CHECK(log_density(weibull_f, y, lambda, 1.0) ==
            doctest::Approx(log_density(gamma_f, y, lambda, lambda * lambda)).epsilon(1e-13));
    }
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(log_density(gamma_f, 0.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(log_density(gamma_f, 1.0, -1.0, 1.0), DomainError);
  CHECK_THROWS_AS(log_density(weibull_f, 1.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(log_density(lognormal_f, -2.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(log_density(normal_f, 1.0, 1.0, -1.0), DomainError);
  CHECK_THROWS_AS(log_density(normal_f, NAN, 1.0, 1.0), DomainError);
  CHECK_NOTHROW(log_density(normal_f, -5.0, 1.0, 1.0));
  Rng rng(1);
  CHECK_THROWS_AS(sample(gamma_f, -1.0, 1.0, rng), DomainError);
}

TEST_CASE("links") {
  CHECK(gamma_f.link() == Link::Log);
  CHECK(weibull_f.link() == Link::Log);
  CHECK(lognormal_f.link() == Link::Identity);
  CHECK(normal_f.link() == Link::Identity);
  CHECK_THROWS_AS(Family::make(FamilyKind::Gamma, Link::Identity), SpecError);
  CHECK(Family::parse("Weibull") == weibull_f);
  CHECK_THROWS_AS(Family::parse("poisson"), SpecError);
  CHECK(weibull_f.coefficient_scale() == "lambda");
  CHECK(gamma_f.coefficient_scale() == "mean");

  CHECK(mean_from_linear_predictor(gamma_f, 0.0, 1.0) == 1.0);
  CHECK(mean_from_linear_predictor(weibull_f, 0.0, 1.0) == 1.0);
  CHECK(implied_mean(weibull_f, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(implied_mean(weibull_f, 1.0, 2.0) == doctest::Approx(std::sqrt(std::numbers::pi) / 2.0));
  CHECK(mean_from_linear_predictor(normal_f, -2.5, 1.0) == -2.5);
  CHECK_THROWS_AS(mean_from_linear_predictor(gamma_f, 1000.0, 1.0), OverflowError);
}

TEST_CASE("sampled moments match the moment formulas") {
  const int n = 1'000'000;
  {
    const auto m = sample_moments(gamma_f, 5.0, 2.0, n, 1);
    CHECK(std::abs(m.mean - 5.0) < 3 * m.se_mean);
    CHECK(std::abs(m.var - 2.0) < 3 * m.se_var);
  }
  {
    const auto m = sample_moments(normal_f, 0.0, 4.0, n, 2);
    CHECK(std::abs(m.mean) < 3 * m.se_mean);
    CHECK(std::abs(m.var - 4.0) < 3 * m.se_var);
  }
  {
    const auto m = sample_moments(weibull_f, 2.0, 3.0, n, 3);
    CHECK(std::abs(m.mean - 2.0 * std::tgamma(4.0 / 3.0)) < 3 * m.se_mean);
    CHECK(std::abs(m.var - implied_variance(weibull_f, 2.0, 3.0)) < 3 * m.se_var);
  }
  {
    const auto m = sample_moments(lognormal_f, 0.5, 0.25, n, 4);
    CHECK(std::abs(m.mean - implied_mean(lognormal_f, 0.5, 0.25)) < 3 * m.se_mean);
    CHECK(std::abs(m.var - implied_variance(lognormal_f, 0.5, 0.25)) < 3 * m.se_var);
  }
}

}  // TEST_SUITE
