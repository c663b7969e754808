#include "sglmm/diagnostics.hpp"

#include "sglmm/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace sglmm {

namespace {

constexpr std::size_t kMinLength = 100;

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Batch-means estimate of the standard error of the mean of `x`, with
// floor(sqrt(n)) batches over the final a * b values.
double batch_means_se(std::span<const double> x) {
  const std::size_t n = x.size();
  const auto a = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  if (a < 2) return 0.0;
  const std::size_t b = n / a;
  const std::size_t skip = n - a * b;
  std::vector<double> means(a);
  for (std::size_t k = 0; k < a; ++k) {
    means[k] = mean_of(x.subspan(skip + k * b, b));
  }
  const double grand = mean_of(means);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  const double sd = std::sqrt(ss / static_cast<double>(a - 1));
  return sd / std::sqrt(static_cast<double>(a));
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

}  // namespace

double mcse(std::span<const double> chain) {
  if (chain.size() < kMinLength) {
    throw LengthError("mcse needs at least 100 draws, got " + std::to_string(chain.size()));
  }
  return batch_means_se(chain);
}

GewekeResult geweke(std::span<const double> chain, double frac_a, double frac_b) {
  if (chain.size() < kMinLength) {
    throw LengthError("geweke needs at least 100 draws, got " + std::to_string(chain.size()));
  }
  if (!(frac_a > 0.0) || !(frac_b > 0.0) || frac_a + frac_b > 1.0) {
    throw SpecError("geweke window fractions must be positive and sum to at most 1");
  }
  const std::size_t n = chain.size();
  const auto na = static_cast<std::size_t>(std::floor(frac_a * static_cast<double>(n)));
  const auto nb = static_cast<std::size_t>(std::floor(frac_b * static_cast<double>(n)));
  const auto seg_a = chain.first(na);
  const auto seg_b = chain.last(nb);
  const double diff = mean_of(seg_a) - mean_of(seg_b);
  const double se_a = batch_means_se(seg_a);
  const double se_b = batch_means_se(seg_b);
  const double var = se_a * se_a + se_b * se_b;
  GewekeResult out;
  if (!(var > 0.0)) {
    out.degenerate = true;
    out.z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    return out;
  }
  out.z = diff / std::sqrt(var);
  return out;
}

GelmanRubinResult gelman_rubin(const std::vector<Eigen::MatrixXd>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw ShapeError("Gelman-Rubin needs at least two chains");
  const Eigen::Index n = chains.front().rows();
  const Eigen::Index p = chains.front().cols();
  for (const auto& c : chains) {
    if (c.rows() != n || c.cols() != p) throw ShapeError("chains have unequal shapes");
  }
  if (n < static_cast<Eigen::Index>(kMinLength)) throw LengthError("chains need at least 100 draws");

  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  Eigen::MatrixXd means(static_cast<Eigen::Index>(m), p);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t c = 0; c < m; ++c) {
    const Eigen::RowVectorXd mu = chains[c].colwise().mean();
    means.row(static_cast<Eigen::Index>(c)) = mu;
    const Eigen::MatrixXd centered = chains[c].rowwise() - mu;
    W += centered.transpose() * centered / (nd - 1.0);
  }
  W /= md;
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const Eigen::MatrixXd dm = means.rowwise() - grand;
  const Eigen::MatrixXd B_over_n = dm.transpose() * dm / (md - 1.0);

  GelmanRubinResult out;
  out.rhat.resize(p);
  std::vector<Eigen::Index> live;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double w = W(j, j);
    const double b = B_over_n(j, j);
    if (w > 0.0) {
      out.rhat(j) = std::sqrt((nd - 1.0) / nd + (md + 1.0) / md * b / w);
      live.push_back(j);
    } else {
      out.rhat(j) = b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
  }
  if (live.empty()) {
    out.rhat_multivariate = 1.0;
    return out;
  }
  const auto q = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd Wl(q, q), Bl(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b < q; ++b) {
      Wl(a, b) = W(live[a], live[b]);
      Bl(a, b) = B_over_n(live[a], live[b]);
    }
  }
  // Largest eigenvalue of W^{-1} B/n via the symmetric-definite pencil (B/n, W).
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Bl, Wl, Eigen::EigenvaluesOnly);
  double lambda = 0.0;
  if (ges.info() == Eigen::Success) {
    lambda = std::max(0.0, ges.eigenvalues().maxCoeff());
  } else {
    const Eigen::MatrixXd M = Wl.completeOrthogonalDecomposition().solve(Bl);
    lambda = std::max(0.0, M.eigenvalues().real().maxCoeff());
  }
  out.rhat_multivariate = std::sqrt((nd - 1.0) / nd + (md + 1.0) / md * lambda);
  return out;
}

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  std::vector<Eigen::MatrixXd> mats;
  for (const auto& c : chains) {
    mats.push_back(Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
  }
  return gelman_rubin(mats).rhat(0);
}

double DiagnosticsReport::geweke_exceed_fraction(double threshold) const {
  if (geweke_z.size() == 0) return 0.0;
  return static_cast<double>((geweke_z.array().abs() > threshold).count()) /
         static_cast<double>(geweke_z.size());
}

DiagnosticsReport diagnose(const PosteriorDraws& draws, const DiagnosticThresholds& thresholds) {
  DiagnosticsReport out;
  out.param_names = draws.param_names;
  const int m = draws.n_chains();
  const Eigen::Index p = draws.dimension();
  out.geweke_z.resize(m, p);
  out.geweke_degenerate.assign(static_cast<std::size_t>(m), std::vector<bool>(static_cast<std::size_t>(p)));
  out.mcse = Eigen::VectorXd::Zero(p);
  auto name = [&](Eigen::Index j) {
    return j < static_cast<Eigen::Index>(draws.param_names.size()) ? draws.param_names[j]
                                                                   : "param" + std::to_string(j);
  };
  for (int c = 0; c < m; ++c) {
    const Eigen::MatrixXd& d = draws.chains[static_cast<std::size_t>(c)].draws;
    for (Eigen::Index j = 0; j < p; ++j) {
      const Eigen::VectorXd col = d.col(j);
      const std::span<const double> s(col.data(), static_cast<std::size_t>(col.size()));
      const auto g = geweke(s);
      out.geweke_z(c, j) = g.z;
      out.geweke_degenerate[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] = g.degenerate;
      const double e = mcse(s);
      out.mcse(j) += e * e;
      if (std::abs(g.z) > thresholds.geweke_abs) {
        out.flags.push_back("geweke chain " + std::to_string(c + 1) + " " + name(j) +
                            " z=" + fmt(g.z));
      }
    }
  }
  out.mcse = out.mcse.array().sqrt() / static_cast<double>(m);
  if (m >= 2) {
    std::vector<Eigen::MatrixXd> chains;
    for (const auto& c : draws.chains) chains.push_back(c.draws);
    const auto gr = gelman_rubin(chains);
    out.rhat_univariate = gr.rhat;
    out.rhat_multivariate = gr.rhat_multivariate;
    out.rhat_available = true;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (gr.rhat(j) > thresholds.rhat) {
        out.flags.push_back("rhat " + name(j) + " =" + fmt(gr.rhat(j)));
      }
    }
    if (gr.rhat_multivariate > thresholds.rhat) {
      out.flags.push_back("rhat multivariate =" + fmt(gr.rhat_multivariate));
    }
  } else {
    out.rhat_univariate = Eigen::VectorXd::Ones(p);
  }
  return out;
}

}  // namespace sglmm
