#include "sglmm/compare.hpp"

#include "sglmm/diagnostics.hpp"
#include "sglmm/errors.hpp"

#include <cmath>
#include <limits>

namespace sglmm {

void summarize_cells(PredictiveDraws& pred) {
  const Eigen::Index draws = pred.y_new.rows();
  if (draws == 0) throw ShapeError("no predictive draws");
  const Eigen::RowVectorXd mean = pred.y_new.colwise().mean();
  Eigen::RowVectorXd sd = Eigen::RowVectorXd::Zero(mean.size());
  if (draws > 1) {
    sd = ((pred.y_new.rowwise() - mean).array().square().colwise().sum() /
          static_cast<double>(draws - 1))
             .sqrt();
  }
  pred.mean = Eigen::Map<const Eigen::MatrixXd>(mean.data(), pred.n, pred.J);
  pred.sd = Eigen::Map<const Eigen::MatrixXd>(sd.data(), pred.n, pred.J);
}

PredictiveDraws posterior_predict(const ModelSpec& spec, const ArealDataset& data,
                                  const std::optional<MoranBasis>& basis,
                                  const PosteriorDraws& draws, std::uint64_t seed) {
  const Posterior posterior(spec, data, basis);
  const Eigen::MatrixXd pooled = draws.pooled();
  if (pooled.cols() != posterior.layout().size()) {
    throw ShapeError("posterior draws do not match the model's parameter layout");
  }
  PredictiveDraws pred;
  pred.n = data.n();
  pred.J = data.J();
  pred.y_new.resize(pooled.rows(), data.cells());
  Rng rng(seed);
  const Eigen::Index theta_idx = posterior.layout().log_theta_index();
  for (Eigen::Index d = 0; d < pooled.rows(); ++d) {
    const Eigen::VectorXd psi = pooled.row(d).transpose();
    const Eigen::MatrixXd loc = posterior.location(psi);
    const double theta = std::exp(psi(theta_idx));
    for (Eigen::Index j = 0; j < loc.cols(); ++j) {
      for (Eigen::Index i = 0; i < loc.rows(); ++i) {
        pred.y_new(d, i + pred.n * j) = sample(spec.family, loc(i, j), theta, rng);
      }
    }
  }
  summarize_cells(pred);
  return pred;
}

ErrorSummary mae_mse(const Eigen::MatrixXd& predicted_mean, const Eigen::MatrixXd& y) {
  if (predicted_mean.rows() != y.rows() || predicted_mean.cols() != y.cols()) {
    throw ShapeError("predicted mean and data have different shapes");
  }
  if (y.size() == 0) throw ShapeError("empty data");
  const Eigen::ArrayXXd r = y.array() - predicted_mean.array();
  const double N = static_cast<double>(y.size());
  return {r.abs().sum() / N, r.square().sum() / N};
}

ErrorSummary mae_mse(const PredictiveDraws& pred, const ArealDataset& data) {
  return mae_mse(pred.mean, data.y);
}

ComparisonReport dic(const Posterior& posterior, const Eigen::MatrixXd& pooled) {
  if (pooled.rows() == 0) throw ShapeError("no posterior draws");
  if (pooled.cols() != posterior.layout().size()) {
    throw ShapeError("posterior draws do not match the model's parameter layout");
  }
  double sum = 0.0;
  for (Eigen::Index d = 0; d < pooled.rows(); ++d) {
    sum += -2.0 * posterior.log_likelihood(pooled.row(d).transpose());
  }
  ComparisonReport out;
  out.model = posterior.spec().name();
  out.dbar = sum / static_cast<double>(pooled.rows());
  const Eigen::VectorXd psi_bar = pooled.colwise().mean().transpose();
  const double d_hat = -2.0 * posterior.log_likelihood(psi_bar);
  if (!std::isfinite(d_hat) || !std::isfinite(out.dbar)) {
    std::string where = "unknown cell";
    try {
      const Eigen::MatrixXd cells = posterior.cell_log_likelihood(psi_bar);
      for (Eigen::Index j = 0; j < cells.cols() && where == "unknown cell"; ++j) {
        for (Eigen::Index i = 0; i < cells.rows(); ++i) {
          if (!std::isfinite(cells(i, j))) {
            where = "cell (" + posterior.data().district_names[static_cast<std::size_t>(i)] + ", " +
                    posterior.data().sector_names[static_cast<std::size_t>(j)] + ")";
            break;
          }
        }
      }
    } catch (const Error& e) {
      where = e.what();
    }
    throw NumericalError("plug-in deviance is not finite: " + where);
  }
  out.pd = out.dbar - d_hat;
  out.dic = out.dbar + out.pd;
  return out;
}

ComparisonReport dic(const ModelSpec& spec, const ArealDataset& data,
                     const std::optional<MoranBasis>& basis, const PosteriorDraws& draws) {
  return dic(Posterior(spec, data, basis), draws.pooled());
}

double prob_positive(std::span<const double> values) {
  if (values.empty()) throw ShapeError("no draws");
  std::size_t pos = 0;
  for (double v : values) pos += v > 0.0 ? 1 : 0;
  return static_cast<double>(pos) / static_cast<double>(values.size());
}

const CoefficientEntry& CoefficientSummary::at(const std::string& sector,
                                               const std::string& covariate) const {
  for (const auto& e : entries) {
    if (e.sector == sector && e.covariate == covariate) return e;
  }
  throw SpecError("no coefficient for (" + sector + ", " + covariate + ")");
}

CoefficientSummary summarize_coefficients(const PosteriorDraws& draws,
                                          const std::vector<std::string>& sectors,
                                          const std::vector<std::string>& covariates) {
  if (draws.n_chains() == 0 || draws.n_kept() == 0) throw ShapeError("no posterior draws");
  const ParamLayout layout(draws.spec);
  if (draws.dimension() != layout.size()) throw ShapeError("draws do not match the model layout");
  const Eigen::MatrixXd pooled = draws.pooled();
  CoefficientSummary out;
  out.scale = draws.spec.family.coefficient_scale();
  for (int j = 0; j < layout.J(); ++j) {
    for (int c = 0; c < layout.k(); ++c) {
      const Eigen::Index col = layout.beta_offset(j) + c;
      const Eigen::VectorXd v = pooled.col(col);
      CoefficientEntry e;
      e.sector = sectors.at(static_cast<std::size_t>(j));
      e.covariate = covariates.at(static_cast<std::size_t>(c));
      e.mean = v.mean();
      e.sd = v.size() > 1 ? std::sqrt((v.array() - e.mean).square().sum() /
                                      static_cast<double>(v.size() - 1))
                          : 0.0;
      e.prob_positive = prob_positive({v.data(), static_cast<std::size_t>(v.size())});
      e.flagged = e.prob_positive >= 0.9 || e.prob_positive <= 0.1;
      double var = 0.0;
      int counted = 0;
      for (const auto& chain : draws.chains) {
        if (chain.draws.rows() >= 100) {
          const Eigen::VectorXd cv = chain.draws.col(col);
          const double s = mcse({cv.data(), static_cast<std::size_t>(cv.size())});
          var += s * s;
          ++counted;
        }
      }
      e.mcse = counted > 0 ? std::sqrt(var) / counted : std::numeric_limits<double>::quiet_NaN();
      out.entries.push_back(std::move(e));
    }
  }
  return out;
}

namespace {

double log_det_spd(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw RankError("correlation matrix is singular");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  const auto q = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b < q; ++b) out(a, b) = m(idx[a], idx[b]);
  }
  return out;
}

}  // namespace

std::vector<VifEntry> vif_gvif(const Eigen::MatrixXd& X, int sector_count,
                               const std::vector<std::string>& names) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (sector_count < 1) throw SpecError("sector_count must be positive");
  if (p < 1 || n <= p + 1) throw RankError("need more rows than covariates for VIFs");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != p) {
    throw ShapeError("covariate names do not match X");
  }

  std::vector<VifEntry> out(static_cast<std::size_t>(p));
  // VIF: regress each column on the others plus an intercept.
  for (Eigen::Index c = 0; c < p; ++c) {
    Eigen::MatrixXd Z(n, p);
    Z.col(0).setOnes();
    Eigen::Index col = 1;
    for (Eigen::Index o = 0; o < p; ++o) {
      if (o != c) Z.col(col++) = X.col(o);
    }
    const Eigen::VectorXd target = X.col(c);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    if (qr.rank() < Z.cols()) throw RankError("covariates are linearly dependent");
    const Eigen::VectorXd resid = target - Z * qr.solve(target);
    const double sst = (target.array() - target.mean()).square().sum();
    if (!(sst > 0.0)) throw RankError("covariate has zero variance");
    const double r2 = 1.0 - resid.squaredNorm() / sst;
    if (r2 >= 1.0 - 1e-13) throw RankError("covariate is a linear combination of the others");
    auto& e = out[static_cast<std::size_t>(c)];
    e.covariate = names.empty() ? "x" + std::to_string(c + 1) : names[static_cast<std::size_t>(c)];
    e.vif = 1.0 / (1.0 - r2);
  }

  // GVIF: pooled design with intercept, sector dummies and one slope per
  // (covariate, sector); each covariate's term is its J slope columns.
  const int J = sector_count;
  const Eigen::Index N = n * J;
  const Eigen::Index cols = 1 + (J - 1) + p * J;
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(N, cols);
  for (int j = 0; j < J; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index row = i + n * j;
      Z(row, 0) = 1.0;
      if (j > 0) Z(row, j) = 1.0;
      for (Eigen::Index c = 0; c < p; ++c) Z(row, J + c * J + j) = X(i, c);
    }
  }
  const Eigen::MatrixXd ztz = Z.transpose() * Z;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(ztz);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-13) {
    throw RankError("pooled design is singular");
  }
  const Eigen::MatrixXd V = ldlt.solve(Eigen::MatrixXd::Identity(cols, cols));
  const Eigen::MatrixXd Vs = V.bottomRightCorner(cols - 1, cols - 1);
  const Eigen::VectorXd inv_sd = Vs.diagonal().array().rsqrt();
  const Eigen::MatrixXd R = inv_sd.asDiagonal() * Vs * inv_sd.asDiagonal();
  const double log_det_all = log_det_spd(R);
  for (Eigen::Index c = 0; c < p; ++c) {
    std::vector<Eigen::Index> term, rest;
    for (Eigen::Index q = 0; q < cols - 1; ++q) {
      // Column q of R is Z column q + 1.
      const Eigen::Index zc = q + 1;
      const bool in_term = zc >= J + c * J && zc < J + (c + 1) * J;
      (in_term ? term : rest).push_back(q);
    }
    const double log_gvif = log_det_spd(submatrix(R, term)) + log_det_spd(submatrix(R, rest)) -
                            log_det_all;
    auto& e = out[static_cast<std::size_t>(c)];
    e.gvif = std::exp(log_gvif);
    e.scaled_gvif = std::exp(log_gvif / (2.0 * J));
  }
  return out;
}

}  // namespace sglmm
