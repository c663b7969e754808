#pragma once

#include "sglmm/sampler.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace sglmm {

struct GewekeResult {
  double z = 0.0;
  bool degenerate = false;
};

/// Compares the mean of the first `frac_a` of the chain with the mean of the
/// last `frac_b`, using batch-means variances of the two segment means.
/// Throws LengthError for chains shorter than 100.
GewekeResult geweke(std::span<const double> chain, double frac_a = 0.1, double frac_b = 0.5);

struct GelmanRubinResult {
  Eigen::VectorXd rhat;  ///< per parameter
  double rhat_multivariate = 1.0;
};

/// Potential scale reduction factors. Each element of `chains` is a
/// draws x parameters matrix; all must share the same shape.
GelmanRubinResult gelman_rubin(const std::vector<Eigen::MatrixXd>& chains);

/// Univariate version for scalar chains.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

/// Batch-means Monte Carlo standard error with floor(sqrt(n)) batches.
double mcse(std::span<const double> chain);

struct DiagnosticThresholds {
  double geweke_abs = 3.0;
  double rhat = 1.1;
};

struct DiagnosticsReport {
  std::vector<std::string> param_names;
  Eigen::MatrixXd geweke_z;  ///< chains x parameters
  std::vector<std::vector<bool>> geweke_degenerate;
  Eigen::VectorXd rhat_univariate;
  double rhat_multivariate = 1.0;
  bool rhat_available = false;
  Eigen::VectorXd mcse;  ///< of the pooled posterior mean
  std::vector<std::string> flags;

  double geweke_exceed_fraction(double threshold = 3.0) const;
};

DiagnosticsReport diagnose(const PosteriorDraws& draws, const DiagnosticThresholds& thresholds = {});

}  // namespace sglmm
