#include "sglmm/sampler.hpp"

#include "sglmm/digest.hpp"
#include "sglmm/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <random>
#include <sstream>

namespace sglmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMaxLogScale = 30.0;

struct BlockState {
  Eigen::Index offset = 0;
  Eigen::Index dim = 0;
  double target = 0.234;
  double log_scale = 0.0;
  long cov_start = 0;
  // Running moments of the block's trajectory (Welford).
  long count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;
  Eigen::MatrixXd chol;  // lower factor of the proposal covariance
  long accepted_interval = 0;
  long accepted_total = 0;
  long accepted_kept = 0;
  long intervals = 0;
  double last_step = 0.0;
};

void refresh_proposal(BlockState& b, const SamplerConfig& cfg) {
  const Eigen::Index d = b.dim;
  Eigen::MatrixXd cov;
  if (!cfg.freeze_adaptation && b.count >= b.cov_start && b.count > 1) {
    cov = b.m2 / static_cast<double>(b.count - 1);
  } else {
    cov = Eigen::MatrixXd::Identity(d, d) * (cfg.initial_proposal_sd * cfg.initial_proposal_sd);
  }
  double ridge = cfg.ridge;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Eigen::MatrixXd c = cov;
    c.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(std::exp(b.log_scale) * c);
    if (llt.info() == Eigen::Success) {
      b.chol = llt.matrixL();
      return;
    }
    ridge *= 10.0;
  }
  throw NumericalError("proposal covariance is not positive definite");
}

void welford(BlockState& b, const Eigen::VectorXd& state) {
  const auto x = state.segment(b.offset, b.dim);
  ++b.count;
  const Eigen::VectorXd delta = x - b.mean;
  b.mean += delta / static_cast<double>(b.count);
  b.m2.noalias() += delta * (x - b.mean).transpose();
}

ChainResult run_chain_impl(const BlockTarget& target, Eigen::VectorXd state,
                           const SamplerConfig& cfg, Rng& rng, std::uint64_t seed) {
  cfg.validate();
  const auto& blocks = target.blocks();
  if (state.size() != target.dimension()) throw ShapeError("starting point has the wrong length");
  if (!std::isfinite(target.log_density(state))) {
    throw NumericalError("starting point has non-finite log density");
  }

  ChainResult out;
  out.seed = seed;
  out.start = state;
  const long burn = cfg.burn_in();
  out.draws.resize(cfg.keep, state.size());
  out.log_posterior.resize(cfg.keep);

  std::vector<BlockState> bs(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& s = bs[b];
    s.offset = blocks[b].offset;
    s.dim = blocks[b].size;
    s.target = s.dim == 1 ? cfg.target_accept_scalar : cfg.target_accept;
    s.log_scale = std::log(2.38 * 2.38 / static_cast<double>(s.dim));
    s.cov_start = cfg.covariance_start > 0 ? cfg.covariance_start : 100 + 10 * s.dim;
    s.mean = Eigen::VectorXd::Zero(s.dim);
    s.m2 = Eigen::MatrixXd::Zero(s.dim, s.dim);
    refresh_proposal(s, cfg);
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd z;
  Eigen::VectorXd saved;
  const long kept_from_sweep = burn * cfg.thin;  // sweeps after this one feed the kept window

  for (long sweep = 1; sweep <= cfg.n_iter; ++sweep) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      auto& s = bs[b];
      const double current = target.block_log_density(b, state);
      z.resize(s.dim);
      for (Eigen::Index i = 0; i < s.dim; ++i) z(i) = normal(rng);
      saved = state.segment(s.offset, s.dim);
      state.segment(s.offset, s.dim).noalias() += s.chol * z;
      const double proposed = target.block_log_density(b, state);
      const double log_u = std::log(unif(rng));
      const bool accept = proposed > kNegInf && (current == kNegInf || log_u < proposed - current);
      if (accept) {
        ++s.accepted_interval;
        ++s.accepted_total;
        if (sweep > kept_from_sweep) ++s.accepted_kept;
      } else {
        state.segment(s.offset, s.dim) = saved;
      }
      if (!cfg.freeze_adaptation) welford(s, state);
    }

    if (sweep % cfg.adapt_interval == 0) {
      for (auto& s : bs) {
        if (!cfg.freeze_adaptation) {
          ++s.intervals;
          const double rate = static_cast<double>(s.accepted_interval) / cfg.adapt_interval;
          const double step = cfg.adapt_rate *
                              std::pow(static_cast<double>(s.intervals), -cfg.adapt_decay) *
                              (rate - s.target);
          s.log_scale = std::clamp(s.log_scale + step, -kMaxLogScale, kMaxLogScale);
          s.last_step = std::abs(step);
          refresh_proposal(s, cfg);
        }
        s.accepted_interval = 0;
      }
    }

    if (sweep % cfg.thin == 0) {
      const long t = sweep / cfg.thin;
      if (t > burn) {
        const long row = t - burn - 1;
        out.draws.row(row) = state.transpose();
        out.log_posterior(row) = target.log_density(state);
      }
    }
  }

  const long kept_sweeps = cfg.n_iter - kept_from_sweep;
  for (std::size_t b = 0; b < bs.size(); ++b) {
    const auto& s = bs[b];
    out.acceptance.push_back(static_cast<double>(s.accepted_total) / cfg.n_iter);
    const double kept_rate =
        kept_sweeps > 0 ? static_cast<double>(s.accepted_kept) / kept_sweeps : 0.0;
    out.acceptance_kept.push_back(kept_rate);
    out.log_scale.push_back(s.log_scale);
    out.last_log_scale_step.push_back(s.last_step);
    if (kept_sweeps > 0 && kept_rate < cfg.stuck_threshold) {
      out.warnings.push_back("sampler-stuck: block '" + blocks[b].name + "' accepted " +
                             std::to_string(kept_rate) + " of proposals after adaptation");
    }
  }
  for (Eigen::Index row = 0; row < out.log_posterior.size(); ++row) {
    if (!std::isfinite(out.log_posterior(row))) {
      out.warnings.push_back("non-finite log posterior at kept draw " + std::to_string(row));
      break;
    }
  }
  return out;
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_iter < 1) throw SpecError("n_iter must be positive");
  if (thin < 1) throw SpecError("thin must be at least 1");
  if (keep < 1 || keep > n_iter / thin) throw SpecError("keep must lie in [1, n_iter / thin]");
  if (n_chains < 1) throw SpecError("n_chains must be at least 1");
  if (adapt_interval < 1) throw SpecError("adapt_interval must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0) ||
      !(target_accept_scalar > 0.0 && target_accept_scalar < 1.0)) {
    throw SpecError("target acceptance rates must lie in (0, 1)");
  }
  if (!(adapt_decay > 0.0) || !(adapt_rate > 0.0)) {
    throw SpecError("adaptation rate and decay must be positive");
  }
  if (!(ridge > 0.0) || !(initial_proposal_sd > 0.0)) {
    throw SpecError("ridge and initial proposal sd must be positive");
  }
}

std::uint64_t chain_seed(std::uint64_t seed, int chain_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain_index), 0x5eedu};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[1]) << 32) | words[0];
}

ChainResult run_chain(const BlockTarget& target, const Eigen::VectorXd& start,
                      const SamplerConfig& cfg, int chain_index) {
  const std::uint64_t seed = chain_seed(cfg.seed, chain_index);
  Rng rng(seed);
  return run_chain_impl(target, start, cfg, rng, seed);
}

ModelTarget::ModelTarget(const Posterior& posterior) : posterior_(posterior) {
  const auto& layout = posterior.layout();
  const auto& data = posterior.data();
  for (int j = 0; j < layout.J(); ++j) {
    blocks_.push_back({layout.beta_offset(j), layout.k(), "beta[" + data.sector_names[static_cast<std::size_t>(j)] + "]"});
    kinds_.emplace_back(Kind::Beta, j);
  }
  if (layout.spatial()) {
    for (int j = 0; j < layout.J(); ++j) {
      blocks_.push_back({layout.delta_offset(j), layout.r(), "delta[" + data.sector_names[static_cast<std::size_t>(j)] + "]"});
      kinds_.emplace_back(Kind::Delta, j);
    }
  }
  blocks_.push_back({layout.log_theta_index(), 1, "log_theta"});
  kinds_.emplace_back(Kind::LogTheta, 0);
  if (layout.spatial()) {
    blocks_.push_back({layout.log_sigma2_index(), 1, "log_sigma2"});
    kinds_.emplace_back(Kind::LogSigma2, 0);
  }
}

Eigen::Index ModelTarget::dimension() const { return posterior_.layout().size(); }

double ModelTarget::block_log_density(std::size_t block, const Eigen::VectorXd& state) const {
  const auto [kind, j] = kinds_[block];
  switch (kind) {
    case Kind::Beta: {
      const double ll = posterior_.sector_log_likelihood_unchecked(j, state);
      return ll == kNegInf ? ll : ll + posterior_.beta_log_prior(j, state);
    }
    case Kind::Delta: {
      const double ll = posterior_.sector_log_likelihood_unchecked(j, state);
      return ll == kNegInf ? ll : ll + posterior_.delta_quadratic_term(j, state);
    }
    case Kind::LogTheta: {
      double sum = posterior_.log_theta_prior(state);
      for (int s = 0; s < posterior_.spec().J; ++s) {
        sum += posterior_.sector_log_likelihood_unchecked(s, state);
        if (sum == kNegInf) return sum;
      }
      return std::isfinite(sum) ? sum : kNegInf;
    }
    case Kind::LogSigma2: {
      double sum = posterior_.log_sigma2_prior(state);
      for (int s = 0; s < posterior_.spec().J; ++s) sum += posterior_.delta_quadratic_term(s, state);
      return std::isfinite(sum) ? sum : kNegInf;
    }
  }
  return kNegInf;
}

double ModelTarget::log_density(const Eigen::VectorXd& state) const {
  const double v = posterior_.log_posterior(state);
  return std::isnan(v) ? kNegInf : v;
}

Eigen::VectorXd starting_values(const Posterior& posterior, StartMode mode, Rng& rng) {
  const auto& layout = posterior.layout();
  const auto& spec = posterior.spec();
  const auto& data = posterior.data();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.size());

  if (mode == StartMode::Prior) {
    const double sd = std::sqrt(spec.hyper.s2_beta / 100.0);
    for (int j = 0; j < layout.J(); ++j) {
      for (int c = 0; c < layout.k(); ++c) x(layout.beta_offset(j) + c) = sd * normal(rng);
    }
    x(layout.log_theta_index()) = normal(rng);
    if (layout.spatial()) x(layout.log_sigma2_index()) = normal(rng);
    return x;
  }

  const Eigen::Index n = data.n();
  const Eigen::Index k = layout.k();
  const bool transform_log = spec.family.kind() != FamilyKind::Normal;
  const Eigen::MatrixXd xtx_inv =
      (data.X.transpose() * data.X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  const double dof = static_cast<double>(std::max<Eigen::Index>(n - k, 1));
  double resid_ss_raw = 0.0;
  double resid_ss_log = 0.0;
  for (int j = 0; j < layout.J(); ++j) {
    const Eigen::VectorXd z =
        transform_log ? Eigen::VectorXd(data.y.col(j).array().log()) : Eigen::VectorXd(data.y.col(j));
    const Eigen::VectorXd b = xtx_inv * (data.X.transpose() * z);
    const Eigen::VectorXd fit = data.X * b;
    const double s2 = (z - fit).squaredNorm() / dof;
    resid_ss_log += (z - fit).squaredNorm();
    if (transform_log) {
      resid_ss_raw += (data.y.col(j).array() - fit.array().exp()).square().sum();
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      const double se = std::sqrt(std::max(s2 * xtx_inv(c, c), 1e-12));
      x(layout.beta_offset(j) + c) = b(c) + 3.0 * se * normal(rng);
    }
  }
  const double cells = static_cast<double>(n * layout.J());
  double theta_hat = 1.0;
  switch (spec.family.kind()) {
    case FamilyKind::Gamma: theta_hat = resid_ss_raw / cells; break;
    case FamilyKind::Normal:
    case FamilyKind::LogNormal: theta_hat = resid_ss_log / cells; break;
    case FamilyKind::Weibull: {
      const double sd_log = std::sqrt(resid_ss_log / cells);
      theta_hat = 3.14159265358979323846 / (std::sqrt(6.0) * std::max(sd_log, 1e-6));
      break;
    }
  }
  x(layout.log_theta_index()) = std::log(std::max(theta_hat, 1e-8)) + normal(rng);
  if (layout.spatial()) x(layout.log_sigma2_index()) = normal(rng);
  return x;
}

Eigen::MatrixXd PosteriorDraws::pooled() const {
  Eigen::MatrixXd out(n_kept() * n_chains(), dimension());
  for (int c = 0; c < n_chains(); ++c) {
    out.middleRows(c * n_kept(), n_kept()) = chains[static_cast<std::size_t>(c)].draws;
  }
  return out;
}

std::vector<std::string> PosteriorDraws::warnings() const {
  std::vector<std::string> out;
  for (int c = 0; c < n_chains(); ++c) {
    for (const auto& w : chains[static_cast<std::size_t>(c)].warnings) {
      out.push_back("chain " + std::to_string(c + 1) + ": " + w);
    }
  }
  return out;
}

namespace {

ChainResult model_chain(const Posterior& posterior, const SamplerConfig& cfg, int chain_index) {
  const std::uint64_t seed = chain_seed(cfg.seed, chain_index);
  Rng rng(seed);
  const ModelTarget target(posterior);
  Eigen::VectorXd start;
  for (int attempt = 0; attempt < 100; ++attempt) {
    start = starting_values(posterior, cfg.start, rng);
    if (std::isfinite(target.log_density(start))) break;
  }
  return run_chain_impl(target, start, cfg, rng, seed);
}

}  // namespace

ChainResult run_chain(const ModelSpec& spec, const ArealDataset& data,
                      const std::optional<MoranBasis>& basis, const SamplerConfig& cfg,
                      int chain_index) {
  const Posterior posterior(spec, data, basis);
  return model_chain(posterior, cfg, chain_index);
}

PosteriorDraws run(const ModelSpec& spec, const ArealDataset& data,
                   const std::optional<MoranBasis>& basis, const SamplerConfig& cfg) {
  cfg.validate();
  const Posterior posterior(spec, data, basis);
  PosteriorDraws out;
  out.spec = spec;
  out.config = cfg;
  out.param_names = posterior.layout().names(data.sector_names, data.covariate_names);
  out.spec_hash = spec_digest(spec, data);
  if (cfg.parallel && cfg.n_chains > 1) {
    std::vector<std::future<ChainResult>> futures;
    for (int c = 0; c < cfg.n_chains; ++c) {
      futures.push_back(std::async(std::launch::async,
                                   [&posterior, &cfg, c] { return model_chain(posterior, cfg, c); }));
    }
    for (auto& f : futures) out.chains.push_back(f.get());
  } else {
    for (int c = 0; c < cfg.n_chains; ++c) out.chains.push_back(model_chain(posterior, cfg, c));
  }
  return out;
}

std::string spec_digest(const ModelSpec& spec, const ArealDataset& data) {
  std::ostringstream s;
  s.precision(17);
  const auto& h = spec.hyper;
  s << spec.family.name() << '|' << spec.spatial << '|' << spec.r << '|' << spec.k << '|'
    << spec.J << '|' << h.a_theta << '|' << h.b_theta << '|' << h.s2_beta << '|' << h.a_sigma
    << '|' << h.b_sigma << '\n';
  auto dump = [&s](const Eigen::MatrixXd& m) {
    s << m.rows() << 'x' << m.cols() << ':';
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) s << m(r, c) << ',';
    }
    s << '\n';
  };
  dump(data.y);
  dump(data.X);
  dump(data.A);
  for (const auto* names : {&data.district_names, &data.sector_names, &data.covariate_names}) {
    for (const auto& n : *names) s << n << ';';
    s << '\n';
  }
  return sha256_hex(s.str());
}

}  // namespace sglmm
