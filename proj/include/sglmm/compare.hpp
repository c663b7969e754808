#pragma once

#include "sglmm/sampler.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sglmm {

/// Posterior predictive replicates. `y_new` is draws x cells with cell index
/// i + n * j.
struct PredictiveDraws {
  int n = 0;
  int J = 0;
  Eigen::MatrixXd y_new;
  Eigen::MatrixXd mean;  ///< n x J
  Eigen::MatrixXd sd;    ///< n x J, sample sd over draws

  Eigen::Index n_draws() const { return y_new.rows(); }
};

/// Fills `mean` and `sd` from `y_new`.
void summarize_cells(PredictiveDraws& pred);

/// One replicate y_new ~ f(. | psi) per pooled posterior draw.
PredictiveDraws posterior_predict(const ModelSpec& spec, const ArealDataset& data,
                                  const std::optional<MoranBasis>& basis,
                                  const PosteriorDraws& draws, std::uint64_t seed);

struct ErrorSummary {
  double mae = 0.0;
  double mse = 0.0;
};

ErrorSummary mae_mse(const Eigen::MatrixXd& predicted_mean, const Eigen::MatrixXd& y);
ErrorSummary mae_mse(const PredictiveDraws& pred, const ArealDataset& data);

struct ComparisonReport {
  std::string model;
  double mae = 0.0;
  double mse = 0.0;
  double dic = 0.0;
  double dbar = 0.0;
  double pd = 0.0;
};

/// Deviance information criterion with the plug-in at the componentwise
/// posterior mean on the sampling scale. Only dic/dbar/pd are filled in.
ComparisonReport dic(const ModelSpec& spec, const ArealDataset& data,
                     const std::optional<MoranBasis>& basis, const PosteriorDraws& draws);

/// Same, from an already pooled (draws x parameters) matrix.
ComparisonReport dic(const Posterior& posterior, const Eigen::MatrixXd& pooled);

struct CoefficientEntry {
  std::string sector;
  std::string covariate;
  double mean = 0.0;
  double sd = 0.0;
  double mcse = 0.0;
  double prob_positive = 0.0;
  bool flagged = false;  ///< P(>0) >= 0.9 or <= 0.1
};

struct CoefficientSummary {
  std::string scale;  ///< "mean" or "lambda"
  std::vector<CoefficientEntry> entries;  ///< sector-major

  const CoefficientEntry& at(const std::string& sector, const std::string& covariate) const;
};

CoefficientSummary summarize_coefficients(const PosteriorDraws& draws,
                                          const std::vector<std::string>& sectors,
                                          const std::vector<std::string>& covariates);

/// Fraction of strictly positive values.
double prob_positive(std::span<const double> values);

struct VifEntry {
  std::string covariate;
  double vif = 0.0;
  double gvif = 0.0;
  double scaled_gvif = 0.0;  ///< gvif^(1 / (2 df)), df = J
};

/// VIFs of the columns of `X` (no intercept column), and generalized VIFs for
/// each covariate's block of J sector-specific slopes in the pooled design
/// with sector-specific intercepts.
std::vector<VifEntry> vif_gvif(const Eigen::MatrixXd& X, int sector_count,
                               const std::vector<std::string>& names = {});

}  // namespace sglmm
