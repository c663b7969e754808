#include "sglmm/likelihoods.hpp"

#include "sglmm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sglmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void domain_fail(Family family, const char* what, double value) {
  std::ostringstream msg;
  msg << family.name() << ": " << what << " = " << value << " is outside the domain";
  throw DomainError(msg.str());
}

}  // namespace

Family Family::make(FamilyKind kind, Link link) {
  Family f(kind);
  if (f.link() != link) throw SpecError("unsupported family/link combination for " + f.name());
  return f;
}

Family Family::parse(const std::string& name) {
  const std::string n = lower(name);
  if (n == "gamma") return Family(FamilyKind::Gamma);
  if (n == "lognormal" || n == "log-normal") return Family(FamilyKind::LogNormal);
  if (n == "normal") return Family(FamilyKind::Normal);
  if (n == "weibull") return Family(FamilyKind::Weibull);
  throw SpecError("unknown likelihood family '" + name + "'");
}

std::string Family::name() const {
  switch (kind_) {
    case FamilyKind::Gamma: return "gamma";
    case FamilyKind::LogNormal: return "lognormal";
    case FamilyKind::Normal: return "normal";
    case FamilyKind::Weibull: return "weibull";
  }
  return "?";
}

std::string Family::link_name() const { return link() == Link::Log ? "log" : "identity"; }

std::string Family::coefficient_scale() const {
  return kind_ == FamilyKind::Weibull ? "lambda" : "mean";
}

double log_density_unchecked(Family family, double y, double log_y, double location,
                             double theta) noexcept {
  switch (family.kind()) {
    case FamilyKind::Gamma: {
      // shape mu^2/theta, rate mu/theta
      const double rate = location / theta;
      const double shape = location * rate;
      return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * log_y - rate * y;
    }
    case FamilyKind::LogNormal: {
      const double d = log_y - location;
      return -0.5 * (kLog2Pi + std::log(theta)) - log_y - d * d / (2.0 * theta);
    }
    case FamilyKind::Normal: {
      const double d = y - location;
      return -0.5 * (kLog2Pi + std::log(theta)) - d * d / (2.0 * theta);
    }
    case FamilyKind::Weibull: {
      const double log_ratio = log_y - std::log(location);
      return std::log(theta) - std::log(location) + (theta - 1.0) * log_ratio -
             std::exp(theta * log_ratio);
    }
  }
  return -std::numeric_limits<double>::infinity();
}

double log_density(Family family, double y, double location, double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) domain_fail(family, "theta", theta);
  if (!std::isfinite(location)) domain_fail(family, "location", location);
  if (!std::isfinite(y)) domain_fail(family, "y", y);
  if (family.requires_positive_y() && !(y > 0.0)) domain_fail(family, "y", y);
  if ((family.kind() == FamilyKind::Gamma || family.kind() == FamilyKind::Weibull) &&
      !(location > 0.0)) {
    domain_fail(family, "location", location);
  }
  const double log_y = family.requires_positive_y() ? std::log(y) : 0.0;
  const double v = log_density_unchecked(family, y, log_y, location, theta);
  if (std::isnan(v)) throw DomainError(family.name() + ": log density is not a number");
  return v;
}

double mean_from_linear_predictor(Family family, double eta, double theta) {
  if (!std::isfinite(eta)) throw DomainError("linear predictor is not finite");
  if (!(theta > 0.0)) domain_fail(family, "theta", theta);
  if (family.link() == Link::Identity) return eta;
  const double v = std::exp(eta);
  if (!std::isfinite(v) || v == 0.0) {
    std::ostringstream msg;
    msg << "exp(eta) overflows or underflows at eta = " << eta;
    throw OverflowError(msg.str());
  }
  return v;
}

double implied_mean(Family family, double location, double theta) {
  switch (family.kind()) {
    case FamilyKind::Weibull: return location * std::tgamma(1.0 + 1.0 / theta);
    case FamilyKind::LogNormal: return std::exp(location + 0.5 * theta);
    default: return location;
  }
}

double implied_variance(Family family, double location, double theta) {
  switch (family.kind()) {
    case FamilyKind::Gamma:
    case FamilyKind::Normal: return theta;
    case FamilyKind::LogNormal:
      return (std::exp(theta) - 1.0) * std::exp(2.0 * location + theta);
    case FamilyKind::Weibull: {
      const double g1 = std::tgamma(1.0 + 1.0 / theta);
      return location * location * (std::tgamma(1.0 + 2.0 / theta) - g1 * g1);
    }
  }
  return 0.0;
}

double sample(Family family, double location, double theta, Rng& rng) {
  if (!(theta > 0.0) || !std::isfinite(theta)) domain_fail(family, "theta", theta);
  if (!std::isfinite(location)) domain_fail(family, "location", location);
  switch (family.kind()) {
    case FamilyKind::Gamma: {
      if (!(location > 0.0)) domain_fail(family, "location", location);
      std::gamma_distribution<double> g(location * location / theta, theta / location);
      return g(rng);
    }
    case FamilyKind::LogNormal: {
      std::normal_distribution<double> z(location, std::sqrt(theta));
      return std::exp(z(rng));
    }
    case FamilyKind::Normal: {
      std::normal_distribution<double> z(location, std::sqrt(theta));
      return z(rng);
    }
    case FamilyKind::Weibull: {
      if (!(location > 0.0)) domain_fail(family, "location", location);
      std::weibull_distribution<double> w(theta, location);
      return w(rng);
    }
  }
  return 0.0;
}

}  // namespace sglmm
