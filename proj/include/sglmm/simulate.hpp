#pragma once

#include "sglmm/dataset.hpp"
#include "sglmm/likelihoods.hpp"
#include "sglmm/model.hpp"
#include "sglmm/spatial.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

namespace sglmm {

enum class GraphKind { Lattice, Path, Cycle, RandomPlanar };

GraphKind parse_graph_kind(const std::string& text);
std::string to_string(GraphKind g);

/// Adjacency of the given family. Lattice is a rook grid with
/// ceil(sqrt(n)) columns; RandomPlanar is the Gabriel graph of n uniform
/// points in the unit square (planar and connected).
Eigen::MatrixXd make_graph(GraphKind kind, int n, Rng& rng);

struct SynthSpec {
  int n = 26;
  int J = 7;
  int k = 8;
  GraphKind graph = GraphKind::RandomPlanar;
  Family family{FamilyKind::Gamma};
  bool spatial = true;
  int r = 7;
  Eigen::MatrixXd true_beta;  ///< k x J; empty = default_beta(k, J)
  double true_sigma2 = 0.05;
  double true_theta = 4.0;
  std::uint64_t seed = 1;
  /// For Normal: reject specs whose cells have P(y < 0) > 1e-6.
  bool require_positive = false;

  void validate() const;
  ModelSpec model_spec() const;
};

/// Intercepts 2.5 .. 4.5 across sectors, slopes a fixed pattern in
/// [-0.3, 0.3].
Eigen::MatrixXd default_beta(int k, int J);

struct SyntheticData {
  ArealDataset data;
  Eigen::VectorXd truth;  ///< ParamLayout of spec.model_spec()
  std::optional<MoranBasis> basis;
  Eigen::MatrixXd location;  ///< true inverse-linked predictor, n x J
};

SyntheticData generate(const SynthSpec& spec);

/// Fresh response draws at the recorded truth, leaving X, A and delta fixed.
Eigen::MatrixXd redraw_response(const SynthSpec& spec, const SyntheticData& synth, Rng& rng);

/// The recovery fixture: n=26, J=7, k=8, r=7, spatial Gamma on a random
/// planar graph.
SynthSpec paper_scale_fixture(std::uint64_t seed);

}  // namespace sglmm
