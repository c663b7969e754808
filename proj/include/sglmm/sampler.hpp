#pragma once

#include "sglmm/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sglmm {

enum class StartMode {
  /// beta ~ N(0, s2/100), delta = 0, log theta and log sigma2 ~ N(0, 1).
  Prior,
  /// Per-sector least-squares fit on the link scale, jittered by three
  /// standard errors; delta = 0, log theta and log sigma2 ~ N(0, 1) around
  /// moment estimates.
  DispersedLeastSquares,
};

struct SamplerConfig {
  long n_iter = 1'500'000;
  int thin = 10;
  long keep = 30'000;
  int n_chains = 3;
  std::uint64_t seed = 1;

  int adapt_interval = 50;
  double target_accept = 0.234;         ///< multivariate blocks
  double target_accept_scalar = 0.44;   ///< one-dimensional blocks
  double adapt_rate = 1.0;              ///< c in c * m^-decay
  double adapt_decay = 0.75;
  double ridge = 1e-6;
  double initial_proposal_sd = 0.1;
  /// Sweeps before a block switches to its empirical covariance; 0 = 100 + 10 d.
  long covariance_start = 0;
  bool freeze_adaptation = false;
  double stuck_threshold = 0.001;
  StartMode start = StartMode::DispersedLeastSquares;
  /// Run chains on separate threads.
  bool parallel = true;

  void validate() const;
  long thinned_total() const { return n_iter / thin; }
  /// Thinned draws discarded before the kept ones.
  long burn_in() const { return thinned_total() - keep; }
};

/// Deterministic per-chain seed derived from the run seed and chain index.
std::uint64_t chain_seed(std::uint64_t seed, int chain_index);

struct Block {
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
  std::string name;
};

/// A density the sampler can walk over one block at a time. For block b,
/// `block_log_density` must equal the full log density up to terms that do
/// not depend on the coordinates of b.
class BlockTarget {
 public:
  virtual ~BlockTarget() = default;
  virtual Eigen::Index dimension() const = 0;
  virtual const std::vector<Block>& blocks() const = 0;
  virtual double block_log_density(std::size_t block, const Eigen::VectorXd& state) const = 0;
  virtual double log_density(const Eigen::VectorXd& state) const = 0;
};

struct ChainResult {
  Eigen::MatrixXd draws;          ///< keep x dimension
  Eigen::VectorXd log_posterior;  ///< keep
  std::vector<double> acceptance;  ///< per block, over all sweeps
  std::vector<double> acceptance_kept;  ///< per block, over the kept window
  std::vector<double> log_scale;   ///< final log s_b per block
  std::vector<double> last_log_scale_step;  ///< |delta log s_b| at the last adaptation
  std::uint64_t seed = 0;
  Eigen::VectorXd start;
  std::vector<std::string> warnings;
};

/// Adaptive random-walk Metropolis within blocks, updated in block order each
/// sweep. Thinned draw t (1-based) is the state after sweep t * thin; the
/// last `keep` thinned draws are returned.
ChainResult run_chain(const BlockTarget& target, const Eigen::VectorXd& start,
                      const SamplerConfig& cfg, int chain_index);

/// Block structure for a model: beta_1..beta_J, delta_1..delta_J (spatial),
/// log theta, log sigma2 (spatial).
class ModelTarget final : public BlockTarget {
 public:
  explicit ModelTarget(const Posterior& posterior);

  Eigen::Index dimension() const override;
  const std::vector<Block>& blocks() const override { return blocks_; }
  double block_log_density(std::size_t block, const Eigen::VectorXd& state) const override;
  double log_density(const Eigen::VectorXd& state) const override;

 private:
  enum class Kind { Beta, Delta, LogTheta, LogSigma2 };
  const Posterior& posterior_;
  std::vector<Block> blocks_;
  std::vector<std::pair<Kind, int>> kinds_;
};

/// Over-dispersed starting point for one chain.
Eigen::VectorXd starting_values(const Posterior& posterior, StartMode mode, Rng& rng);

struct PosteriorDraws {
  ModelSpec spec;
  SamplerConfig config;
  std::vector<std::string> param_names;
  std::string spec_hash;
  std::vector<ChainResult> chains;

  int n_chains() const { return static_cast<int>(chains.size()); }
  Eigen::Index n_kept() const { return chains.empty() ? 0 : chains.front().draws.rows(); }
  Eigen::Index dimension() const { return chains.empty() ? 0 : chains.front().draws.cols(); }
  /// All chains stacked: (chains * keep) x dimension.
  Eigen::MatrixXd pooled() const;
  std::vector<std::string> warnings() const;
};

ChainResult run_chain(const ModelSpec& spec, const ArealDataset& data,
                      const std::optional<MoranBasis>& basis, const SamplerConfig& cfg,
                      int chain_index);

/// Runs cfg.n_chains chains (concurrently when cfg.parallel) with distinct
/// seeds and starting points.
PosteriorDraws run(const ModelSpec& spec, const ArealDataset& data,
                   const std::optional<MoranBasis>& basis, const SamplerConfig& cfg);

/// SHA-256 over the model spec and dataset contents.
std::string spec_digest(const ModelSpec& spec, const ArealDataset& data);

}  // namespace sglmm
