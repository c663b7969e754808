#pragma once

#include "sglmm/dataset.hpp"
#include "sglmm/likelihoods.hpp"
#include "sglmm/spatial.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace sglmm {

struct Hyperparameters {
  double a_theta = 0.01;
  double b_theta = 0.01;
  double s2_beta = 10000.0;
  double a_sigma = 0.01;
  double b_sigma = 0.01;
};

struct ModelSpec {
  Family family;
  bool spatial = false;
  int r = 0;
  int k = 0;
  int J = 0;
  Hyperparameters hyper;

  /// Throws SpecError when the invariants do not hold.
  void validate() const;
  /// e.g. "spatial-gamma", "nonspatial-normal".
  std::string name() const;
};

/// Positions of each parameter block inside the flat parameter vector:
///
///   [beta_1 (k) ... beta_J (k) | delta_1 (r) ... delta_J (r) | log theta | log sigma2]
///
/// The delta blocks and log sigma2 exist only for spatial models.
class ParamLayout {
 public:
  ParamLayout(int k, int J, int r, bool spatial);
  explicit ParamLayout(const ModelSpec& spec);

  int k() const { return k_; }
  int J() const { return J_; }
  int r() const { return r_; }
  bool spatial() const { return spatial_; }

  Eigen::Index size() const;
  Eigen::Index beta_offset(int sector) const { return static_cast<Eigen::Index>(sector) * k_; }
  Eigen::Index delta_offset(int sector) const {
    return static_cast<Eigen::Index>(k_) * J_ + static_cast<Eigen::Index>(sector) * r_;
  }
  Eigen::Index log_theta_index() const { return static_cast<Eigen::Index>(k_ + r_) * J_; }
  /// Throws SpecError for non-spatial layouts.
  Eigen::Index log_sigma2_index() const;

  std::vector<std::string> names(const std::vector<std::string>& sectors,
                                 const std::vector<std::string>& covariates) const;

 private:
  int k_, J_, r_;
  bool spatial_;
};

/// Unnormalized log posterior of one model variant on one dataset. Holds
/// copies of everything it needs, so it can outlive its arguments.
class Posterior {
 public:
  Posterior(ModelSpec spec, const ArealDataset& data, std::optional<MoranBasis> basis);

  const ModelSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  const ArealDataset& data() const { return data_; }
  const std::optional<MoranBasis>& basis() const { return basis_; }

  double log_likelihood(const Eigen::VectorXd& params) const;
  double log_prior(const Eigen::VectorXd& params) const;
  double log_posterior(const Eigen::VectorXd& params) const;

  /// Log-likelihood of one sector's column of y.
  double sector_log_likelihood(int sector, const Eigen::VectorXd& params) const;
  /// Normal(0, s2) log density summed over beta_j.
  double beta_log_prior(int sector, const Eigen::VectorXd& params) const;
  /// -(delta_j' K delta_j) / (2 sigma2), K = M'QM.
  double delta_quadratic_term(int sector, const Eigen::VectorXd& params) const;
  /// Everything in the log prior that depends on log theta (with Jacobian).
  double log_theta_prior(const Eigen::VectorXd& params) const;
  /// Everything in the log prior that depends on log sigma2 (with Jacobian),
  /// including the (r/2) log(1/sigma2) factor of each delta block.
  double log_sigma2_prior(const Eigen::VectorXd& params) const;

  /// n x J matrix of linear predictors x_i' beta_j + [M delta_j]_i.
  Eigen::MatrixXd linear_predictor(const Eigen::VectorXd& params) const;
  /// Inverse-link of the linear predictor (lambda for Weibull).
  Eigen::MatrixXd location(const Eigen::VectorXd& params) const;
  /// n x J matrix of per-cell log-likelihood contributions.
  Eigen::MatrixXd cell_log_likelihood(const Eigen::VectorXd& params) const;

 private:
  friend class ModelTarget;
  void check_params(const Eigen::VectorXd& params) const;
  double sector_log_likelihood_unchecked(int sector, const Eigen::VectorXd& params) const;

  ModelSpec spec_;
  ParamLayout layout_;
  ArealDataset data_;
  std::optional<MoranBasis> basis_;
  Eigen::MatrixXd log_y_;
};

double log_likelihood(const ModelSpec& spec, const Eigen::VectorXd& params,
                      const ArealDataset& data, const std::optional<MoranBasis>& basis);
double log_prior(const ModelSpec& spec, const Eigen::VectorXd& params,
                 const std::optional<MoranBasis>& basis);
double log_posterior(const ModelSpec& spec, const Eigen::VectorXd& params,
                     const ArealDataset& data, const std::optional<MoranBasis>& basis);

/// Log density of InverseGamma(shape, scale) at x.
double inverse_gamma_log_density(double x, double shape, double scale);

}  // namespace sglmm
