#pragma once

#include "sglmm/compare.hpp"
#include "sglmm/sampler.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace sglmm {

enum class Relationship { Positive, Negative };

Relationship parse_relationship(const std::string& text);
std::string to_string(Relationship r);

struct Selection {
  std::string sector;
  std::string covariate;
  Relationship relationship = Relationship::Positive;
};

struct ScenarioSpec {
  std::vector<Selection> selections;
  /// Posterior standard deviations away from zero. Zero means no adjustment:
  /// the adjusted mean is the posterior mean.
  double shift_sd = 3.0;
  bool diagonal_covariance = false;
  /// Multiplies the adjusted covariance (1 = posterior covariance).
  double covariance_scale = 1.0;

  /// Throws SpecError unless there is exactly one valid selection per sector.
  void validate(const std::vector<std::string>& sectors,
                const std::vector<std::string>& covariates) const;
};

struct AdjustedBeta {
  Eigen::VectorXd mean_star;  ///< k * J, sector-major
  Eigen::MatrixXd cov;
  Eigen::VectorXd posterior_mean;
  Eigen::VectorXd posterior_sd;
};

AdjustedBeta adjusted_beta_posterior(const PosteriorDraws& draws, const ScenarioSpec& scen,
                                     const std::vector<std::string>& sectors,
                                     const std::vector<std::string>& covariates);

/// Per-sector rescaling so that each draw's sector totals match `targets`.
/// `y_star` is draws x cells (cell = i + n * j). Throws DataError for a
/// non-positive target or simulated total.
void rescale_to_totals(Eigen::MatrixXd& y_star, int n, const Eigen::VectorXd& targets);

struct ScenarioResult {
  int n = 0;
  int J = 0;
  Eigen::MatrixXd y_star;  ///< draws x cells, rescaled
  Eigen::MatrixXd mean;    ///< n x J
  Eigen::MatrixXd sd;      ///< n x J
  Eigen::VectorXd sector_totals_check;  ///< max relative deviation per sector
  AdjustedBeta adjusted;

  Eigen::Index n_draws() const { return y_star.rows(); }
};

ScenarioResult simulate_scenario(const ModelSpec& spec, const ArealDataset& data,
                                 const std::optional<MoranBasis>& basis,
                                 const PosteriorDraws& draws, const ScenarioSpec& scen,
                                 std::uint64_t seed);

/// (y - mean*) / sd* per cell. Throws DomainError if any sd is zero.
Eigen::MatrixXd standardized_residuals(const ScenarioResult& result, const ArealDataset& data);

struct PowerOptions {
  int n_replicates = 26;
  double cutoff = 0.9;
  SamplerConfig refit;
  std::uint64_t seed = 7;
};

struct PowerResult {
  double detect_rate = 0.0;
  int sign_reversals = 0;
  int detections = 0;
  int replicates_used = 0;
  std::vector<std::string> warnings;
  /// replicates x J posterior probabilities of the selected coefficient > 0.
  Eigen::MatrixXd prob_positive;
};

/// Refits the model to randomly chosen scenario replicates and counts how
/// often each selected relationship is detected at `cutoff`.
PowerResult power_diagnostic(const ModelSpec& spec, const ArealDataset& data,
                             const std::optional<MoranBasis>& basis, const ScenarioResult& result,
                             const ScenarioSpec& scen, const PowerOptions& options);

}  // namespace sglmm
