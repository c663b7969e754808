#include "sglmm/simulate.hpp"

#include "sglmm/data_prep.hpp"
#include "sglmm/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace sglmm {

GraphKind parse_graph_kind(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "lattice") return GraphKind::Lattice;
  if (t == "path") return GraphKind::Path;
  if (t == "cycle") return GraphKind::Cycle;
  if (t == "random_planar" || t == "planar") return GraphKind::RandomPlanar;
  throw SpecError("unknown graph kind '" + text + "'");
}

std::string to_string(GraphKind g) {
  switch (g) {
    case GraphKind::Lattice: return "lattice";
    case GraphKind::Path: return "path";
    case GraphKind::Cycle: return "cycle";
    case GraphKind::RandomPlanar: return "random_planar";
  }
  return "?";
}

namespace {

void link(Eigen::MatrixXd& A, int a, int b) {
  A(a, b) = 1.0;
  A(b, a) = 1.0;
}

Eigen::MatrixXd gabriel_graph(int n, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::array<double, 2>> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) p = {unif(rng), unif(rng)};
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& p = pts[static_cast<std::size_t>(i)];
      const auto& q = pts[static_cast<std::size_t>(j)];
      const double mx = 0.5 * (p[0] + q[0]);
      const double my = 0.5 * (p[1] + q[1]);
      const double r2 = 0.25 * ((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]));
      bool empty = true;
      for (int m = 0; m < n && empty; ++m) {
        if (m == i || m == j) continue;
        const auto& o = pts[static_cast<std::size_t>(m)];
        empty = (o[0] - mx) * (o[0] - mx) + (o[1] - my) * (o[1] - my) >= r2;
      }
      if (empty) link(A, i, j);
    }
  }
  return A;
}

}  // namespace

Eigen::MatrixXd make_graph(GraphKind kind, int n, Rng& rng) {
  if (n < 2) throw SpecError("a graph needs at least two nodes");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  switch (kind) {
    case GraphKind::Lattice: {
      const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
      for (int i = 0; i < n; ++i) {
        if ((i + 1) % cols != 0 && i + 1 < n) link(A, i, i + 1);
        if (i + cols < n) link(A, i, i + cols);
      }
      break;
    }
    case GraphKind::Path:
      for (int i = 0; i + 1 < n; ++i) link(A, i, i + 1);
      break;
    case GraphKind::Cycle:
      if (n < 3) throw SpecError("a cycle needs at least three nodes");
      for (int i = 0; i < n; ++i) link(A, i, (i + 1) % n);
      break;
    case GraphKind::RandomPlanar:
      A = gabriel_graph(n, rng);
      break;
  }
  return A;
}

void SynthSpec::validate() const {
  if (n < 2 || J < 1 || k < 1) throw SpecError("synthetic dimensions must be positive");
  if (!(true_sigma2 > 0.0) || !(true_theta > 0.0)) {
    throw SpecError("true scale parameters must be positive");
  }
  if (true_beta.size() != 0 && (true_beta.rows() != k || true_beta.cols() != J)) {
    throw ShapeError("true_beta must be k x J");
  }
  if (spatial && (r < 1 || r > n - k)) {
    throw RankError("Moran rank r=" + std::to_string(r) + " outside [1, n - k] = [1, " +
                    std::to_string(n - k) + "]");
  }
}

ModelSpec SynthSpec::model_spec() const {
  ModelSpec m;
  m.family = family;
  m.spatial = spatial;
  m.r = spatial ? r : 0;
  m.k = k;
  m.J = J;
  return m;
}

Eigen::MatrixXd default_beta(int k, int J) {
  static constexpr std::array<double, 8> slopes{0.3, -0.2, 0.15, -0.3, 0.2, -0.15, 0.25, -0.25};
  Eigen::MatrixXd beta(k, J);
  for (int j = 0; j < J; ++j) {
    beta(0, j) = J == 1 ? 3.5 : 2.5 + 2.0 * j / (J - 1);
    for (int c = 1; c < k; ++c) beta(c, j) = slopes[static_cast<std::size_t>((c - 1 + j) % 8)];
  }
  return beta;
}

namespace {

double draw_cell(const SynthSpec& spec, double loc, Rng& rng) {
  return sample(spec.family, loc, spec.true_theta, rng);
}

}  // namespace

SyntheticData generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SyntheticData out;
  auto& data = out.data;

  data.A = make_graph(spec.graph, spec.n, rng);
  Eigen::MatrixXd raw(spec.n, spec.k - 1);
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    for (Eigen::Index i = 0; i < raw.rows(); ++i) raw(i, c) = normal(rng);
  }
  data.X.resize(spec.n, spec.k);
  data.X.col(0).setOnes();
  if (spec.k > 1) {
    data.X.rightCols(spec.k - 1) = standardize_columns(raw, data.covariate_means, data.covariate_sds);
  }
  for (int i = 0; i < spec.n; ++i) data.district_names.push_back("D" + std::to_string(i + 1));
  if (spec.J == static_cast<int>(default_sectors().size())) {
    data.sector_names = default_sectors();
  } else {
    for (int j = 0; j < spec.J; ++j) data.sector_names.push_back("S" + std::to_string(j + 1));
  }
  data.covariate_names.push_back("Intercept");
  for (int c = 1; c < spec.k; ++c) data.covariate_names.push_back("x" + std::to_string(c));

  const Eigen::MatrixXd beta = spec.true_beta.size() ? spec.true_beta : default_beta(spec.k, spec.J);
  const ModelSpec mspec = spec.model_spec();
  const ParamLayout layout(mspec);
  out.truth = Eigen::VectorXd::Zero(layout.size());
  for (int j = 0; j < spec.J; ++j) out.truth.segment(layout.beta_offset(j), spec.k) = beta.col(j);
  out.truth(layout.log_theta_index()) = std::log(spec.true_theta);

  Eigen::MatrixXd eta = data.X * beta;
  if (spec.spatial) {
    out.basis = moran_basis(data.A, data.X, spec.r);
    Eigen::LLT<Eigen::MatrixXd> llt(out.basis->delta_precision);
    if (llt.info() != Eigen::Success) throw RankError("Moran-basis precision is not positive definite");
    const double sigma = std::sqrt(spec.true_sigma2);
    for (int j = 0; j < spec.J; ++j) {
      Eigen::VectorXd z(spec.r);
      for (int m = 0; m < spec.r; ++m) z(m) = normal(rng);
      const Eigen::VectorXd delta = sigma * llt.matrixU().solve(z);
      out.truth.segment(layout.delta_offset(j), spec.r) = delta;
      eta.col(j) += out.basis->M * delta;
    }
    out.truth(layout.log_sigma2_index()) = std::log(spec.true_sigma2);
  }

  out.location.resize(spec.n, spec.J);
  for (int j = 0; j < spec.J; ++j) {
    for (int i = 0; i < spec.n; ++i) {
      out.location(i, j) = mean_from_linear_predictor(spec.family, eta(i, j), spec.true_theta);
    }
  }
  if (spec.family.kind() == FamilyKind::Normal && spec.require_positive) {
    const double sd = std::sqrt(spec.true_theta);
    for (int j = 0; j < spec.J; ++j) {
      for (int i = 0; i < spec.n; ++i) {
        const double p_neg = 0.5 * std::erfc(out.location(i, j) / (sd * std::sqrt(2.0)));
        if (p_neg > 1e-6) {
          throw SpecError("normal spec implies P(y < 0) = " + std::to_string(p_neg) + " at cell (" +
                          std::to_string(i) + ", " + std::to_string(j) + ")");
        }
      }
    }
  }

  data.y = redraw_response(spec, out, rng);
  validate(data, DatasetChecks{.require_positive_y = spec.family.requires_positive_y() ||
                                                     spec.require_positive});
  return out;
}

Eigen::MatrixXd redraw_response(const SynthSpec& spec, const SyntheticData& synth, Rng& rng) {
  Eigen::MatrixXd y(synth.location.rows(), synth.location.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, j) = draw_cell(spec, synth.location(i, j), rng);
  }
  return y;
}

SynthSpec paper_scale_fixture(std::uint64_t seed) {
  SynthSpec s;
  s.n = 26;
  s.J = 7;
  s.k = 8;
  s.r = 7;
  s.graph = GraphKind::RandomPlanar;
  s.family = Family(FamilyKind::Gamma);
  s.spatial = true;
  s.seed = seed;
  return s;
}

}  // namespace sglmm
