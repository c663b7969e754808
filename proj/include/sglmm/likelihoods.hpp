#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace sglmm {

using Rng = std::mt19937_64;

enum class FamilyKind { Gamma, LogNormal, Normal, Weibull };
enum class Link { Log, Identity };

/// Likelihood family with its fixed link: log for Gamma and Weibull, identity
/// for LogNormal and Normal. For Weibull the linked quantity is the scale
/// lambda rather than the mean.
class Family {
 public:
  constexpr explicit Family(FamilyKind kind = FamilyKind::Gamma) : kind_(kind) {}

  /// Throws SpecError unless (kind, link) is one of the four supported pairs.
  static Family make(FamilyKind kind, Link link);
  static Family parse(const std::string& name);

  constexpr FamilyKind kind() const { return kind_; }
  constexpr Link link() const {
    return (kind_ == FamilyKind::Gamma || kind_ == FamilyKind::Weibull) ? Link::Log
                                                                        : Link::Identity;
  }
  /// True when y must be strictly positive.
  constexpr bool requires_positive_y() const { return kind_ != FamilyKind::Normal; }
  std::string name() const;
  std::string link_name() const;
  /// "mean" for all but Weibull, whose coefficients act on log lambda.
  std::string coefficient_scale() const;

  friend constexpr bool operator==(Family, Family) = default;

 private:
  FamilyKind kind_;
};

/// log f(y | location, theta). `location` is mu for Gamma/LogNormal/Normal
/// and lambda for Weibull. Throws DomainError for arguments outside the
/// family's support.
double log_density(Family family, double y, double location, double theta);

/// Same density without argument checks, for callers that have already
/// validated their inputs. `log_y` must equal log(y) for positive families.
double log_density_unchecked(Family family, double y, double log_y, double location,
                             double theta) noexcept;

/// Inverse link applied to the linear predictor. For Weibull this is lambda.
/// Throws OverflowError when exp(eta) is not finite.
double mean_from_linear_predictor(Family family, double eta, double theta);

/// Expected value of y for the given location: equals the location except for
/// Weibull (lambda * Gamma(1 + 1/theta)) and LogNormal (exp(mu + theta / 2)).
double implied_mean(Family family, double location, double theta);

/// Variance of y for the given location.
double implied_variance(Family family, double location, double theta);

/// One draw from the family. Throws DomainError for invalid parameters.
double sample(Family family, double location, double theta, Rng& rng);

}  // namespace sglmm
