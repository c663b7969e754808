#include "sglmm/model.hpp"

#include "sglmm/errors.hpp"

#include <cmath>
#include <limits>

namespace sglmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_finite(const Eigen::VectorXd& params) {
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    if (!std::isfinite(params(i))) {
      throw DomainError("parameter " + std::to_string(i) + " is not finite");
    }
  }
}

void check_basis(const ModelSpec& spec, const std::optional<MoranBasis>& basis) {
  if (spec.spatial != basis.has_value()) {
    throw ShapeError(spec.spatial ? "spatial model needs a Moran basis"
                                  : "non-spatial model must not be given a Moran basis");
  }
  if (basis && basis->M.cols() != spec.r) throw ShapeError("Moran basis rank differs from r");
}

double beta_prior(const ParamLayout& layout, const Hyperparameters& h, int sector,
                  const Eigen::VectorXd& params) {
  const auto b = params.segment(layout.beta_offset(sector), layout.k());
  return -0.5 * layout.k() * (kLog2Pi + std::log(h.s2_beta)) - b.squaredNorm() / (2.0 * h.s2_beta);
}

double delta_quadratic(const ParamLayout& layout, const MoranBasis& basis, int sector,
                       const Eigen::VectorXd& params) {
  const auto d = params.segment(layout.delta_offset(sector), layout.r());
  const double sigma2 = std::exp(params(layout.log_sigma2_index()));
  return -d.dot(basis.delta_precision * d) / (2.0 * sigma2);
}

double theta_prior(const ParamLayout& layout, const Hyperparameters& h,
                   const Eigen::VectorXd& params) {
  const double log_theta = params(layout.log_theta_index());
  return inverse_gamma_log_density(std::exp(log_theta), h.a_theta, h.b_theta) + log_theta;
}

double sigma2_prior(const ParamLayout& layout, const Hyperparameters& h,
                    const Eigen::VectorXd& params) {
  const double log_sigma2 = params(layout.log_sigma2_index());
  return inverse_gamma_log_density(std::exp(log_sigma2), h.a_sigma, h.b_sigma) + log_sigma2 -
         0.5 * layout.r() * layout.J() * log_sigma2;
}

double prior_impl(const ModelSpec& spec, const ParamLayout& layout,
                  const std::optional<MoranBasis>& basis, const Eigen::VectorXd& params) {
  double lp = theta_prior(layout, spec.hyper, params);
  for (int j = 0; j < spec.J; ++j) lp += beta_prior(layout, spec.hyper, j, params);
  if (spec.spatial) {
    lp += sigma2_prior(layout, spec.hyper, params);
    for (int j = 0; j < spec.J; ++j) lp += delta_quadratic(layout, *basis, j, params);
  }
  return lp;
}

}  // namespace

double inverse_gamma_log_density(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

void ModelSpec::validate() const {
  if (k < 1 || J < 1) throw SpecError("model needs k >= 1 and J >= 1");
  if (spatial && r < 1) throw SpecError("spatial model needs r >= 1");
  if (!spatial && r != 0) throw SpecError("non-spatial model needs r = 0");
  const Hyperparameters& h = hyper;
  for (double v : {h.a_theta, h.b_theta, h.s2_beta, h.a_sigma, h.b_sigma}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw SpecError("hyperparameters must be positive");
  }
}

std::string ModelSpec::name() const {
  return std::string(spatial ? "spatial-" : "nonspatial-") + family.name();
}

ParamLayout::ParamLayout(int k, int J, int r, bool spatial) : k_(k), J_(J), r_(r), spatial_(spatial) {
  if (k < 1 || J < 1 || r < 0 || (spatial && r < 1) || (!spatial && r != 0)) {
    throw SpecError("invalid parameter layout dimensions");
  }
}

ParamLayout::ParamLayout(const ModelSpec& spec) : ParamLayout(spec.k, spec.J, spec.r, spec.spatial) {}

Eigen::Index ParamLayout::size() const {
  const Eigen::Index base = static_cast<Eigen::Index>(k_ + r_) * J_;
  return base + (spatial_ ? 2 : 1);
}

Eigen::Index ParamLayout::log_sigma2_index() const {
  if (!spatial_) throw SpecError("non-spatial models have no sigma2");
  return log_theta_index() + 1;
}

std::vector<std::string> ParamLayout::names(const std::vector<std::string>& sectors,
                                            const std::vector<std::string>& covariates) const {
  if (static_cast<int>(sectors.size()) != J_ || static_cast<int>(covariates.size()) != k_) {
    throw ShapeError("name lists do not match the layout");
  }
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (const auto& s : sectors) {
    for (const auto& c : covariates) out.push_back("beta[" + s + "," + c + "]");
  }
  for (const auto& s : sectors) {
    for (int m = 1; m <= r_; ++m) out.push_back("delta[" + s + "," + std::to_string(m) + "]");
  }
  out.emplace_back("log_theta");
  if (spatial_) out.emplace_back("log_sigma2");
  return out;
}

Posterior::Posterior(ModelSpec spec, const ArealDataset& data, std::optional<MoranBasis> basis)
    : spec_(std::move(spec)), layout_(spec_), data_(data), basis_(std::move(basis)) {
  spec_.validate();
  check_basis(spec_, basis_);
  if (data_.k() != spec_.k || data_.J() != spec_.J) {
    throw ShapeError("model dimensions (k, J) do not match the dataset");
  }
  if (basis_ && basis_->M.rows() != data_.n()) throw ShapeError("Moran basis has wrong row count");
  if (data_.X.rows() != data_.n()) throw ShapeError("X rows do not match y rows");
  log_y_ = Eigen::MatrixXd::Zero(data_.n(), data_.J());
  if (spec_.family.requires_positive_y()) {
    if ((data_.y.array() <= 0.0).any()) {
      throw DomainError(spec_.family.name() + " likelihood needs strictly positive responses");
    }
    log_y_ = data_.y.array().log().matrix();
  }
}

void Posterior::check_params(const Eigen::VectorXd& params) const {
  if (params.size() != layout_.size()) {
    throw ShapeError("parameter vector has length " + std::to_string(params.size()) +
                     ", expected " + std::to_string(layout_.size()));
  }
  check_finite(params);
}

double Posterior::sector_log_likelihood_unchecked(int sector, const Eigen::VectorXd& params) const {
  const double theta = std::exp(params(layout_.log_theta_index()));
  if (!(theta > 0.0) || !std::isfinite(theta)) return kNegInf;
  Eigen::VectorXd eta = data_.X * params.segment(layout_.beta_offset(sector), layout_.k());
  if (basis_) eta.noalias() += basis_->M * params.segment(layout_.delta_offset(sector), layout_.r());
  const bool log_link = spec_.family.link() == Link::Log;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double loc = log_link ? std::exp(eta(i)) : eta(i);
    if (log_link && (!(loc > 0.0) || !std::isfinite(loc))) return kNegInf;
    sum += log_density_unchecked(spec_.family, data_.y(i, sector), log_y_(i, sector), loc, theta);
  }
  return std::isfinite(sum) ? sum : kNegInf;
}

double Posterior::sector_log_likelihood(int sector, const Eigen::VectorXd& params) const {
  check_params(params);
  return sector_log_likelihood_unchecked(sector, params);
}

double Posterior::log_likelihood(const Eigen::VectorXd& params) const {
  check_params(params);
  double sum = 0.0;
  for (int j = 0; j < spec_.J; ++j) sum += sector_log_likelihood_unchecked(j, params);
  return sum;
}

double Posterior::log_prior(const Eigen::VectorXd& params) const {
  check_params(params);
  return prior_impl(spec_, layout_, basis_, params);
}

double Posterior::log_posterior(const Eigen::VectorXd& params) const {
  const double ll = log_likelihood(params);
  if (ll == kNegInf) return kNegInf;
  return ll + prior_impl(spec_, layout_, basis_, params);
}

double Posterior::beta_log_prior(int sector, const Eigen::VectorXd& params) const {
  return beta_prior(layout_, spec_.hyper, sector, params);
}

double Posterior::delta_quadratic_term(int sector, const Eigen::VectorXd& params) const {
  return delta_quadratic(layout_, *basis_, sector, params);
}

double Posterior::log_theta_prior(const Eigen::VectorXd& params) const {
  return theta_prior(layout_, spec_.hyper, params);
}

double Posterior::log_sigma2_prior(const Eigen::VectorXd& params) const {
  return sigma2_prior(layout_, spec_.hyper, params);
}

Eigen::MatrixXd Posterior::linear_predictor(const Eigen::VectorXd& params) const {
  check_params(params);
  Eigen::MatrixXd eta(data_.n(), spec_.J);
  for (int j = 0; j < spec_.J; ++j) {
    eta.col(j) = data_.X * params.segment(layout_.beta_offset(j), layout_.k());
    if (basis_) eta.col(j) += basis_->M * params.segment(layout_.delta_offset(j), layout_.r());
  }
  return eta;
}

Eigen::MatrixXd Posterior::location(const Eigen::VectorXd& params) const {
  const Eigen::MatrixXd eta = linear_predictor(params);
  const double theta = std::exp(params(layout_.log_theta_index()));
  Eigen::MatrixXd loc(eta.rows(), eta.cols());
  for (Eigen::Index j = 0; j < eta.cols(); ++j) {
    for (Eigen::Index i = 0; i < eta.rows(); ++i) {
      loc(i, j) = mean_from_linear_predictor(spec_.family, eta(i, j), theta);
    }
  }
  return loc;
}

Eigen::MatrixXd Posterior::cell_log_likelihood(const Eigen::VectorXd& params) const {
  const Eigen::MatrixXd loc = location(params);
  const double theta = std::exp(params(layout_.log_theta_index()));
  Eigen::MatrixXd out(loc.rows(), loc.cols());
  for (Eigen::Index j = 0; j < loc.cols(); ++j) {
    for (Eigen::Index i = 0; i < loc.rows(); ++i) {
      out(i, j) = log_density(spec_.family, data_.y(i, j), loc(i, j), theta);
    }
  }
  return out;
}

double log_likelihood(const ModelSpec& spec, const Eigen::VectorXd& params,
                      const ArealDataset& data, const std::optional<MoranBasis>& basis) {
  return Posterior(spec, data, basis).log_likelihood(params);
}

double log_prior(const ModelSpec& spec, const Eigen::VectorXd& params,
                 const std::optional<MoranBasis>& basis) {
  spec.validate();
  check_basis(spec, basis);
  const ParamLayout layout(spec);
  if (params.size() != layout.size()) throw ShapeError("parameter vector has the wrong length");
  check_finite(params);
  return prior_impl(spec, layout, basis, params);
}

double log_posterior(const ModelSpec& spec, const Eigen::VectorXd& params,
                     const ArealDataset& data, const std::optional<MoranBasis>& basis) {
  return Posterior(spec, data, basis).log_posterior(params);
}

}  // namespace sglmm
