#include "sglmm/scenario.hpp"

#include "sglmm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace sglmm {

Relationship parse_relationship(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "positive" || t == "+") return Relationship::Positive;
  if (t == "negative" || t == "-") return Relationship::Negative;
  throw SpecError("relationship must be Positive or Negative, got '" + text + "'");
}

std::string to_string(Relationship r) {
  return r == Relationship::Positive ? "Positive" : "Negative";
}

void ScenarioSpec::validate(const std::vector<std::string>& sectors,
                            const std::vector<std::string>& covariates) const {
  if (!(shift_sd >= 0.0) || !std::isfinite(shift_sd)) throw SpecError("shift_sd must be >= 0");
  if (!(covariance_scale >= 0.0)) throw SpecError("covariance_scale must be >= 0");
  std::set<std::string> seen;
  for (const auto& s : selections) {
    if (std::find(sectors.begin(), sectors.end(), s.sector) == sectors.end()) {
      throw SpecError("scenario selection names unknown sector '" + s.sector + "'");
    }
    if (std::find(covariates.begin(), covariates.end(), s.covariate) == covariates.end()) {
      throw SpecError("scenario selection names unknown covariate '" + s.covariate + "'");
    }
    if (!seen.insert(s.sector).second) {
      throw SpecError("sector '" + s.sector + "' has more than one selection");
    }
  }
  if (seen.size() != sectors.size()) throw SpecError("every sector needs exactly one selection");
}

namespace {

struct SelectionIndex {
  int sector;
  int covariate;
  Relationship relationship;
};

std::vector<SelectionIndex> index_selections(const ScenarioSpec& scen,
                                             const std::vector<std::string>& sectors,
                                             const std::vector<std::string>& covariates) {
  std::vector<SelectionIndex> out;
  for (const auto& s : scen.selections) {
    const auto j = std::find(sectors.begin(), sectors.end(), s.sector) - sectors.begin();
    const auto c = std::find(covariates.begin(), covariates.end(), s.covariate) - covariates.begin();
    out.push_back({static_cast<int>(j), static_cast<int>(c), s.relationship});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.sector < b.sector; });
  return out;
}

// Symmetric square root usable for singular or zero covariances.
Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd root = eig.eigenvalues().array().max(0.0).sqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace

AdjustedBeta adjusted_beta_posterior(const PosteriorDraws& draws, const ScenarioSpec& scen,
                                     const std::vector<std::string>& sectors,
                                     const std::vector<std::string>& covariates) {
  scen.validate(sectors, covariates);
  const ParamLayout layout(draws.spec);
  if (static_cast<int>(sectors.size()) != layout.J() ||
      static_cast<int>(covariates.size()) != layout.k()) {
    throw ShapeError("sector/covariate names do not match the model");
  }
  const Eigen::MatrixXd pooled = draws.pooled();
  if (pooled.rows() < 2) throw ShapeError("need at least two posterior draws");
  const Eigen::Index kj = static_cast<Eigen::Index>(layout.k()) * layout.J();
  const Eigen::MatrixXd beta = pooled.leftCols(kj);

  AdjustedBeta out;
  out.posterior_mean = beta.colwise().mean().transpose();
  const Eigen::MatrixXd centered = beta.rowwise() - out.posterior_mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(beta.rows() - 1);
  out.posterior_sd = cov.diagonal().array().sqrt();
  out.cov = scen.diagonal_covariance ? Eigen::MatrixXd(cov.diagonal().asDiagonal()) : cov;
  out.cov *= scen.covariance_scale;
  out.mean_star = out.posterior_mean;
  if (scen.shift_sd > 0.0) {
    for (const auto& s : index_selections(scen, sectors, covariates)) {
      const Eigen::Index idx = layout.beta_offset(s.sector) + s.covariate;
      const double sign = s.relationship == Relationship::Positive ? 1.0 : -1.0;
      out.mean_star(idx) = sign * scen.shift_sd * out.posterior_sd(idx);
    }
  }
  return out;
}

void rescale_to_totals(Eigen::MatrixXd& y_star, int n, const Eigen::VectorXd& targets) {
  const auto J = targets.size();
  if (y_star.cols() != n * J) throw ShapeError("y_star columns do not match n * J");
  for (Eigen::Index j = 0; j < J; ++j) {
    if (!(targets(j) > 0.0)) {
      throw DataError("cannot rescale: data total for sector " + std::to_string(j) +
                      " is not positive");
    }
  }
  for (Eigen::Index d = 0; d < y_star.rows(); ++d) {
    for (Eigen::Index j = 0; j < J; ++j) {
      auto seg = y_star.row(d).segment(j * n, n);
      const double total = seg.sum();
      if (!(total > 0.0) || !std::isfinite(total)) {
        throw DataError("cannot rescale: simulated total for sector " + std::to_string(j) +
                        " in draw " + std::to_string(d) + " is not positive");
      }
      seg *= targets(j) / total;
    }
  }
}

ScenarioResult simulate_scenario(const ModelSpec& spec, const ArealDataset& data,
                                 const std::optional<MoranBasis>& basis,
                                 const PosteriorDraws& draws, const ScenarioSpec& scen,
                                 std::uint64_t seed) {
  const Posterior posterior(spec, data, basis);
  const auto& layout = posterior.layout();
  ScenarioResult out;
  out.n = data.n();
  out.J = data.J();
  out.adjusted = adjusted_beta_posterior(draws, scen, data.sector_names, data.covariate_names);
  const Eigen::MatrixXd root = covariance_root(out.adjusted.cov);
  const Eigen::MatrixXd pooled = draws.pooled();
  const Eigen::Index kj = out.adjusted.mean_star.size();

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  out.y_star.resize(pooled.rows(), data.cells());
  Eigen::VectorXd z(kj);
  for (Eigen::Index d = 0; d < pooled.rows(); ++d) {
    Eigen::VectorXd psi = pooled.row(d).transpose();
    for (Eigen::Index i = 0; i < kj; ++i) z(i) = normal(rng);
    psi.head(kj) = out.adjusted.mean_star + root * z;
    const Eigen::MatrixXd loc = posterior.location(psi);
    const double theta = std::exp(psi(layout.log_theta_index()));
    for (Eigen::Index j = 0; j < loc.cols(); ++j) {
      for (Eigen::Index i = 0; i < loc.rows(); ++i) {
        out.y_star(d, i + out.n * j) = sample(spec.family, loc(i, j), theta, rng);
      }
    }
  }
  const Eigen::VectorXd targets = data.y.colwise().sum().transpose();
  rescale_to_totals(out.y_star, out.n, targets);

  out.sector_totals_check = Eigen::VectorXd::Zero(out.J);
  for (Eigen::Index d = 0; d < out.y_star.rows(); ++d) {
    for (Eigen::Index j = 0; j < out.J; ++j) {
      const double total = out.y_star.row(d).segment(j * out.n, out.n).sum();
      out.sector_totals_check(j) =
          std::max(out.sector_totals_check(j), std::abs(total - targets(j)) / targets(j));
    }
  }
  PredictiveDraws summary;
  summary.n = out.n;
  summary.J = out.J;
  summary.y_new = out.y_star;
  summarize_cells(summary);
  out.mean = std::move(summary.mean);
  out.sd = std::move(summary.sd);
  return out;
}

Eigen::MatrixXd standardized_residuals(const ScenarioResult& result, const ArealDataset& data) {
  if (result.mean.rows() != data.y.rows() || result.mean.cols() != data.y.cols()) {
    throw ShapeError("scenario result and data have different shapes");
  }
  for (Eigen::Index j = 0; j < result.sd.cols(); ++j) {
    for (Eigen::Index i = 0; i < result.sd.rows(); ++i) {
      if (!(result.sd(i, j) > 0.0)) {
        throw DomainError("degenerate cell (" + data.district_names[static_cast<std::size_t>(i)] +
                          ", " + data.sector_names[static_cast<std::size_t>(j)] +
                          "): zero predictive sd");
      }
    }
  }
  return ((data.y - result.mean).array() / result.sd.array()).matrix();
}

PowerResult power_diagnostic(const ModelSpec& spec, const ArealDataset& data,
                             const std::optional<MoranBasis>& basis, const ScenarioResult& result,
                             const ScenarioSpec& scen, const PowerOptions& options) {
  scen.validate(data.sector_names, data.covariate_names);
  if (result.n_draws() == 0) throw SpecError("scenario result has no draws");
  if (options.n_replicates < 1 || options.n_replicates > result.n_draws()) {
    throw SpecError("n_replicates must lie in [1, number of scenario draws]");
  }
  if (!(options.cutoff >= 0.5 && options.cutoff < 1.0)) {
    throw SpecError("cutoff must lie in [0.5, 1)");
  }
  const auto selections = index_selections(scen, data.sector_names, data.covariate_names);
  const ParamLayout layout(spec);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(result.n_draws()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(options.n_replicates));

  PowerResult out;
  out.prob_positive = Eigen::MatrixXd::Constant(options.n_replicates,
                                                static_cast<Eigen::Index>(selections.size()),
                                                std::numeric_limits<double>::quiet_NaN());
  for (int rep = 0; rep < options.n_replicates; ++rep) {
    ArealDataset replicate = data;
    const Eigen::VectorXd row = result.y_star.row(order[static_cast<std::size_t>(rep)]).transpose();
    replicate.y = Eigen::Map<const Eigen::MatrixXd>(row.data(), data.n(), data.J());
    SamplerConfig cfg = options.refit;
    cfg.seed = options.refit.seed + static_cast<std::uint64_t>(rep);
    PosteriorDraws fit;
    try {
      fit = run(spec, replicate, basis, cfg);
    } catch (const Error& e) {
      out.warnings.push_back("replicate " + std::to_string(rep) + " refit failed: " + e.what());
      continue;
    }
    ++out.replicates_used;
    const Eigen::MatrixXd pooled = fit.pooled();
    for (std::size_t s = 0; s < selections.size(); ++s) {
      const auto& sel = selections[s];
      const Eigen::VectorXd v = pooled.col(layout.beta_offset(sel.sector) + sel.covariate);
      const double p = prob_positive({v.data(), static_cast<std::size_t>(v.size())});
      out.prob_positive(rep, static_cast<Eigen::Index>(s)) = p;
      const bool positive = sel.relationship == Relationship::Positive;
      const bool says_positive = p >= options.cutoff;
      const bool says_negative = p <= 1.0 - options.cutoff;
      if ((positive && says_positive) || (!positive && says_negative)) ++out.detections;
      if ((positive && says_negative && !says_positive) ||
          (!positive && says_positive && !says_negative)) {
        ++out.sign_reversals;
      }
    }
  }
  if (out.replicates_used == 0) {
    out.warnings.push_back("every refit failed; detect_rate undefined");
    out.detect_rate = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.detect_rate = static_cast<double>(out.detections) /
                    (static_cast<double>(out.replicates_used) * static_cast<double>(selections.size()));
  return out;
}

}  // namespace sglmm
