#include "sglmm/cli.hpp"
#include "sglmm/compare.hpp"
#include "sglmm/diagnostics.hpp"
#include "sglmm/errors.hpp"
#include "sglmm/likelihoods.hpp"
#include "sglmm/money.hpp"
#include "sglmm/sampler.hpp"
#include "sglmm/simulate.hpp"
#include "sglmm/spatial.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace sglmm;

namespace {

py::dict dataset_dict(const ArealDataset& d) {
  py::dict out;
  out["y"] = d.y;
  out["X"] = d.X;
  out["A"] = d.A;
  out["district_names"] = d.district_names;
  out["sector_names"] = d.sector_names;
  out["covariate_names"] = d.covariate_names;
  return out;
}

ArealDataset dataset_from(const Eigen::MatrixXd& y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& A) {
  ArealDataset d;
  d.y = y;
  d.X = X;
  d.A = A;
  for (Eigen::Index i = 0; i < y.rows(); ++i) d.district_names.push_back("D" + std::to_string(i + 1));
  for (Eigen::Index j = 0; j < y.cols(); ++j) d.sector_names.push_back("S" + std::to_string(j + 1));
  d.covariate_names.push_back("Intercept");
  for (Eigen::Index c = 1; c < X.cols(); ++c) d.covariate_names.push_back("x" + std::to_string(c));
  d.covariate_means = Eigen::VectorXd::Zero(X.cols() - 1);
  d.covariate_sds = Eigen::VectorXd::Ones(X.cols() - 1);
  return d;
}

SamplerConfig sampler_config(long iters, int thin, long keep, int chains, std::uint64_t seed) {
  SamplerConfig c;
  c.n_iter = iters;
  c.thin = thin;
  c.keep = keep;
  c.n_chains = chains;
  c.seed = seed;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spatial GLMM core";

  auto data_error = py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  (void)data_error;

  m.def("log_density", [](const std::string& family, double y, double location, double theta) {
    return log_density(Family::parse(family), y, location, theta);
  }, py::arg("family"), py::arg("y"), py::arg("location"), py::arg("theta"));

  m.def("icar_precision", [](const Eigen::MatrixXd& A) { return icar_precision(A).Q; });

  m.def("moran_basis", [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& X, int r) {
    const MoranBasis b = moran_basis(A, X, r);
    return py::make_tuple(b.M, b.eigenvalues, b.delta_precision);
  }, py::arg("A"), py::arg("X"), py::arg("r"));

  m.def("apportion_cents", [](std::int64_t cents, const std::vector<std::int64_t>& weights) {
    std::vector<std::int64_t> out;
    for (const Money& share : apportion(Money::from_cents(cents), weights)) out.push_back(share.cents());
    return out;
  }, py::arg("cents"), py::arg("weights"));

  m.def("simulate", [](int n, int J, int k, const std::string& graph, const std::string& family,
                       bool spatial, int r, std::uint64_t seed) {
    SynthSpec s;
    s.n = n;
    s.J = J;
    s.k = k;
    s.graph = parse_graph_kind(graph);
    s.family = Family::parse(family);
    s.spatial = spatial;
    s.r = r;
    s.seed = seed;
    const SyntheticData syn = generate(s);
    py::dict out = dataset_dict(syn.data);
    out["truth"] = syn.truth;
    out["param_names"] = ParamLayout(s.model_spec()).names(syn.data.sector_names,
                                                           syn.data.covariate_names);
    return out;
  }, py::arg("n") = 26, py::arg("J") = 7, py::arg("k") = 8, py::arg("graph") = "random_planar",
     py::arg("family") = "gamma", py::arg("spatial") = true, py::arg("r") = 7, py::arg("seed") = 1);

  m.def("fit", [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& A,
                  const std::string& family, bool spatial, int r, long iters, int thin, long keep,
                  int chains, std::uint64_t seed) {
    const ArealDataset data = dataset_from(y, X, A);
    ModelSpec spec;
    spec.family = Family::parse(family);
    spec.spatial = spatial;
    spec.r = spatial ? r : 0;
    spec.k = data.k();
    spec.J = data.J();
    std::optional<MoranBasis> basis;
    if (spatial) basis = moran_basis(A, X, r);
    PosteriorDraws draws;
    {
      py::gil_scoped_release release;
      draws = run(spec, data, basis, sampler_config(iters, thin, keep, chains, seed));
    }
    const DiagnosticsReport rep = diagnose(draws);
    const ComparisonReport d = dic(spec, data, basis, draws);
    py::dict out;
    py::list chain_draws;
    for (const auto& c : draws.chains) chain_draws.append(c.draws);
    out["draws"] = chain_draws;
    out["param_names"] = draws.param_names;
    out["rhat"] = rep.rhat_univariate;
    out["geweke_z"] = rep.geweke_z;
    out["flags"] = rep.flags;
    out["dic"] = d.dic;
    out["pd"] = d.pd;
    out["warnings"] = draws.warnings();
    return out;
  }, py::arg("y"), py::arg("X"), py::arg("A"), py::arg("family") = "gamma",
     py::arg("spatial") = true, py::arg("r") = 7, py::arg("iters") = 20000, py::arg("thin") = 5,
     py::arg("keep") = 2000, py::arg("chains") = 3, py::arg("seed") = 1);

  m.def("geweke", [](const std::vector<double>& chain) { return geweke(chain).z; });
  m.def("gelman_rubin", [](const std::vector<std::vector<double>>& chains) {
    return gelman_rubin(chains);
  });

  m.def("vif_gvif", [](const Eigen::MatrixXd& X, int J) {
    py::list out;
    for (const auto& e : vif_gvif(X, J)) {
      py::dict row;
      row["covariate"] = e.covariate;
      row["vif"] = e.vif;
      row["gvif"] = e.gvif;
      row["scaled_gvif"] = e.scaled_gvif;
      out.append(row);
    }
    return out;
  }, py::arg("X"), py::arg("J"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<std::string> full{"sglmm"};
    full.insert(full.end(), args.begin(), args.end());
    return cli::run(full);
  }, py::arg("args"));
}
