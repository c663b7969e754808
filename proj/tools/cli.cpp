#include "sglmm/cli.hpp"

#include "sglmm/compare.hpp"
#include "sglmm/data_prep.hpp"
#include "sglmm/digest.hpp"
#include "sglmm/errors.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace sglmm::cli {

namespace fs = std::filesystem;

ModelSpec ModelChoice::resolve(const ArealDataset& data) const {
  ModelSpec m;
  m.family = Family::parse(family);
  m.spatial = spatial;
  m.r = spatial ? r : 0;
  m.k = data.k();
  m.J = data.J();
  m.hyper = hyper;
  m.validate();
  return m;
}

std::string RunConfig::dataset_path() const {
  return paths.dataset.empty() ? (fs::path(paths.out) / "dataset.json").string() : paths.dataset;
}

std::string RunConfig::fit_dir(const std::string& model_name) const {
  return (fs::path(paths.out) / "fits" / model_name).string();
}

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& what) {
  if (!j.is_object()) throw SpecError(what + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* a) { return k == a; }) == keys.end()) {
      throw SpecError("unknown " + what + " key '" + k + "'");
    }
  }
}

json sampler_json(const SamplerConfig& s) {
  json j = s;
  j.erase("seed");
  return j;
}

}  // namespace

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["paths"] = json{{"donations", c.paths.donations}, {"districts", c.paths.districts},
                    {"merges", c.paths.merges},       {"drops", c.paths.drops},
                    {"covariates", c.paths.covariates}, {"adjacency", c.paths.adjacency},
                    {"dataset", c.paths.dataset},     {"selections", c.paths.selections},
                    {"out", c.paths.out}};
  j["prep"] = json{{"dropped_points", c.prep.discard_dropped_points ? "discard" : "error"},
                   {"floor", c.prep.floor ? json(*c.prep.floor) : json(nullptr)}};
  j["model"] = json{{"family", c.model.family},
                    {"spatial", c.model.spatial},
                    {"r", c.model.r},
                    {"hyper", c.model.hyper}};
  j["sampler"] = sampler_json(c.sampler);
  json scen = c.scenario.spec;
  scen["power"] = c.scenario.power;
  scen["power_options"] = json{{"n_replicates", c.scenario.power_options.n_replicates},
                               {"cutoff", c.scenario.power_options.cutoff},
                               {"refit", sampler_json(c.scenario.power_options.refit)}};
  j["scenario"] = scen;
  j["simulate"] = json{{"n", c.simulate.n},           {"J", c.simulate.J},
                       {"k", c.simulate.k},           {"graph", c.simulate.graph},
                       {"family", c.simulate.family}, {"spatial", c.simulate.spatial},
                       {"r", c.simulate.r},           {"sigma2", c.simulate.sigma2},
                       {"theta", c.simulate.theta}};
  j["strict"] = c.strict;
  j["strict_options"] = json{{"geweke_abs", c.strict_options.thresholds.geweke_abs},
                             {"rhat", c.strict_options.thresholds.rhat},
                             {"max_geweke_fraction", c.strict_options.max_geweke_fraction}};
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    reject_unknown(j, {"seed", "paths", "prep", "model", "sampler", "scenario", "simulate",
                       "strict", "strict_options"},
                   "config");
    get_if(j, "seed", c.seed);
    get_if(j, "strict", c.strict);
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      reject_unknown(p, {"donations", "districts", "merges", "drops", "covariates", "adjacency",
                         "dataset", "selections", "out"},
                     "paths");
      get_if(p, "donations", c.paths.donations);
      get_if(p, "districts", c.paths.districts);
      get_if(p, "merges", c.paths.merges);
      get_if(p, "drops", c.paths.drops);
      get_if(p, "covariates", c.paths.covariates);
      get_if(p, "adjacency", c.paths.adjacency);
      get_if(p, "dataset", c.paths.dataset);
      get_if(p, "selections", c.paths.selections);
      get_if(p, "out", c.paths.out);
    }
    if (j.contains("prep")) {
      const auto& p = j.at("prep");
      reject_unknown(p, {"dropped_points", "floor"}, "prep");
      if (p.contains("dropped_points")) {
        const auto v = p.at("dropped_points").get<std::string>();
        if (v != "error" && v != "discard") throw SpecError("dropped_points must be error or discard");
        c.prep.discard_dropped_points = v == "discard";
      }
      if (p.contains("floor") && !p.at("floor").is_null()) c.prep.floor = p.at("floor").get<double>();
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      reject_unknown(m, {"family", "spatial", "r", "hyper"}, "model");
      get_if(m, "family", c.model.family);
      get_if(m, "spatial", c.model.spatial);
      get_if(m, "r", c.model.r);
      if (m.contains("hyper")) c.model.hyper = m.at("hyper").get<Hyperparameters>();
    }
    if (j.contains("sampler")) c.sampler = j.at("sampler").get<SamplerConfig>();
    if (j.contains("scenario")) {
      json s = j.at("scenario");
      get_if(s, "power", c.scenario.power);
      if (s.contains("power_options")) {
        const auto& p = s.at("power_options");
        reject_unknown(p, {"n_replicates", "cutoff", "refit"}, "power_options");
        get_if(p, "n_replicates", c.scenario.power_options.n_replicates);
        get_if(p, "cutoff", c.scenario.power_options.cutoff);
        if (p.contains("refit")) c.scenario.power_options.refit = p.at("refit").get<SamplerConfig>();
      }
      s.erase("power");
      s.erase("power_options");
      c.scenario.spec = s.get<ScenarioSpec>();
    }
    if (j.contains("simulate")) {
      const auto& s = j.at("simulate");
      reject_unknown(s, {"n", "J", "k", "graph", "family", "spatial", "r", "sigma2", "theta"},
                     "simulate");
      get_if(s, "n", c.simulate.n);
      get_if(s, "J", c.simulate.J);
      get_if(s, "k", c.simulate.k);
      get_if(s, "graph", c.simulate.graph);
      get_if(s, "family", c.simulate.family);
      get_if(s, "spatial", c.simulate.spatial);
      get_if(s, "r", c.simulate.r);
      get_if(s, "sigma2", c.simulate.sigma2);
      get_if(s, "theta", c.simulate.theta);
    }
    if (j.contains("strict_options")) {
      const auto& s = j.at("strict_options");
      reject_unknown(s, {"geweke_abs", "rhat", "max_geweke_fraction"}, "strict_options");
      get_if(s, "geweke_abs", c.strict_options.thresholds.geweke_abs);
      get_if(s, "rhat", c.strict_options.thresholds.rhat);
      get_if(s, "max_geweke_fraction", c.strict_options.max_geweke_fraction);
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("invalid config: ") + e.what());
  }
  c.sampler.seed = c.seed;
  c.scenario.power_options.seed = c.seed;
  c.scenario.power_options.refit.seed = c.seed;
  return c;
}

std::string config_digest(const RunConfig& c) { return sha256_hex(to_json(c).dump()); }

namespace {

struct Context {
  RunConfig config;
  std::string digest;
  fs::path out;
};

void write_json(const fs::path& path, json j, const std::string& digest) {
  j["config_digest"] = digest;
  write_text(path, j.dump(2) + "\n");
}

std::string comment_line(const std::string& digest) { return "# config_digest=" + digest + "\n"; }

void require_path(const std::string& path, const std::string& what) {
  if (path.empty()) throw SpecError("missing required path: " + what);
  if (!fs::exists(path)) throw DataError(what + " not found: '" + path + "'");
}

ArealDataset load_dataset(const RunConfig& c) {
  require_path(c.dataset_path(), "dataset");
  try {
    ArealDataset d = dataset_from_json(json::parse(read_text(c.dataset_path())));
    validate(d, DatasetChecks{.require_positive_y = false});
    return d;
  } catch (const json::exception& e) {
    throw DataError("cannot parse dataset '" + c.dataset_path() + "': " + e.what());
  }
}

std::optional<MoranBasis> basis_for(const ModelSpec& spec, const ArealDataset& data) {
  if (!spec.spatial) return std::nullopt;
  return moran_basis(data.A, data.X, spec.r);
}

json diagnostics_json(const DiagnosticsReport& rep, const StrictOptions& strict) {
  json j;
  j["param_names"] = rep.param_names;
  json gz = json::array();
  for (Eigen::Index c = 0; c < rep.geweke_z.rows(); ++c) {
    std::vector<double> row(static_cast<std::size_t>(rep.geweke_z.cols()));
    for (Eigen::Index p = 0; p < rep.geweke_z.cols(); ++p) {
      row[static_cast<std::size_t>(p)] = rep.geweke_z(c, p);
    }
    gz.push_back(row);
  }
  j["geweke_z"] = gz;
  j["geweke_exceed_fraction"] = rep.geweke_exceed_fraction(strict.thresholds.geweke_abs);
  j["rhat_available"] = rep.rhat_available;
  j["rhat"] = std::vector<double>(rep.rhat_univariate.data(),
                                  rep.rhat_univariate.data() + rep.rhat_univariate.size());
  j["rhat_multivariate"] = rep.rhat_multivariate;
  j["mcse"] = std::vector<double>(rep.mcse.data(), rep.mcse.data() + rep.mcse.size());
  j["flags"] = rep.flags;
  return j;
}

bool strict_failure(const DiagnosticsReport& rep, const StrictOptions& s) {
  if (rep.geweke_exceed_fraction(s.thresholds.geweke_abs) > s.max_geweke_fraction) return true;
  if (rep.rhat_available) {
    for (Eigen::Index p = 0; p < rep.rhat_univariate.size(); ++p) {
      if (!(rep.rhat_univariate(p) < s.thresholds.rhat)) return true;
    }
  }
  return false;
}

int report_diagnostics(const Context& ctx, const PosteriorDraws& draws, const fs::path& dir) {
  const DiagnosticsReport rep = diagnose(draws, ctx.config.strict_options.thresholds);
  json j = diagnostics_json(rep, ctx.config.strict_options);
  j["warnings"] = draws.warnings();
  const bool failed = strict_failure(rep, ctx.config.strict_options);
  j["strict_failure"] = failed;
  write_json(dir / "diagnostics.json", j, ctx.digest);
  std::cout << "diagnostics: " << rep.flags.size() << " flag(s), geweke exceed fraction "
            << rep.geweke_exceed_fraction(ctx.config.strict_options.thresholds.geweke_abs);
  if (rep.rhat_available) std::cout << ", max rhat " << rep.rhat_univariate.maxCoeff();
  std::cout << "\n";
  for (const auto& f : rep.flags) std::cout << "  flag: " << f << "\n";
  for (const auto& w : draws.warnings()) std::cout << "  warning: " << w << "\n";
  if (ctx.config.strict && failed) {
    std::cerr << "convergence flags exceed the strict threshold\n";
    return ConvergenceFailure;
  }
  return Ok;
}

void write_coefficients(const fs::path& path, const CoefficientSummary& s, const std::string& digest) {
  std::string out = comment_line(digest);
  out += "sector,covariate,scale,mean,sd,mcse,prob_positive,flagged\n";
  for (const auto& e : s.entries) {
    out += csv_escape(e.sector) + "," + csv_escape(e.covariate) + "," + s.scale + "," +
           format_double(e.mean) + "," + format_double(e.sd) + "," + format_double(e.mcse) + "," +
           format_double(e.prob_positive) + "," + (e.flagged ? "1" : "0") + "\n";
  }
  write_text(path, out);
}

std::string cents_string(Money m) { return m.to_string(); }

int cmd_prep(const Context& ctx) {
  const auto& p = ctx.config.paths;
  require_path(p.donations, "donations");
  require_path(p.districts, "districts");
  require_path(p.covariates, "covariates");
  require_path(p.adjacency, "adjacency");
  if (!p.merges.empty()) require_path(p.merges, "merges");
  if (!p.drops.empty()) require_path(p.drops, "drops");

  const auto records = read_donations(p.donations);
  const DistrictRegistry registry = read_registry(p.districts, p.merges, p.drops);
  AggregateOptions opts;
  opts.dropped_points = ctx.config.prep.discard_dropped_points ? DroppedPointPolicy::Discard
                                                               : DroppedPointPolicy::Error;
  const AggregateResult agg = aggregate(records, registry, opts);
  const auto [raw, cov_names] = read_covariates(p.covariates, agg.district_names);
  const Eigen::MatrixXd A = adjacency_from_edges(read_edges(p.adjacency), resolve(registry));
  StandardizeOptions sopts;
  sopts.floor = ctx.config.prep.floor;
  const ArealDataset data = per_capita_standardize(agg, registry, raw, cov_names, A, sopts);

  write_json(ctx.config.dataset_path(), dataset_to_json(data), ctx.digest);
  const auto& r = agg.report;
  json rep;
  rep["records_in"] = r.records_in;
  rep["total_in"] = cents_string(r.total_in);
  rep["total_allocated"] = cents_string(r.total_allocated);
  rep["total_discarded"] = cents_string(r.total_discarded);
  rep["conserved"] = r.total_in == r.total_allocated + r.total_discarded;
  rep["discarded_projects"] = r.discarded_projects;
  rep["merged_districts"] = r.merged_districts;
  rep["dropped_districts"] = r.dropped_districts;
  rep["districts"] = data.n();
  rep["sectors"] = data.J();
  rep["cells"] = data.cells();
  write_json(ctx.out / "prep_report.json", rep, ctx.digest);
  std::cout << "prep: " << r.records_in << " records, " << r.total_in.to_string() << " in, "
            << r.total_allocated.to_string() << " allocated, " << r.total_discarded.to_string()
            << " discarded; " << data.n() << " districts x " << data.J() << " sectors = "
            << data.cells() << " cells\n";
  return Ok;
}

PosteriorDraws fit_model(const ModelSpec& spec, const ArealDataset& data, const SamplerConfig& cfg) {
  return run(spec, data, basis_for(spec, data), cfg);
}

int cmd_fit(const Context& ctx) {
  const ArealDataset data = load_dataset(ctx.config);
  const ModelSpec spec = ctx.config.model.resolve(data);
  const PosteriorDraws draws = fit_model(spec, data, ctx.config.sampler);
  const fs::path dir = ctx.config.fit_dir(spec.name());
  save_fit(dir, draws, ctx.digest);
  write_coefficients(dir / "coefficients.csv",
                     summarize_coefficients(draws, data.sector_names, data.covariate_names),
                     ctx.digest);
  std::cout << "fit " << spec.name() << ": " << draws.dimension() << " parameters, "
            << draws.n_chains() << " chains x " << draws.n_kept() << " kept draws -> "
            << dir.string() << "\n";
  return report_diagnostics(ctx, draws, dir);
}

PosteriorDraws load_matching_fit(const Context& ctx, const ModelSpec& spec, const ArealDataset& data) {
  const fs::path dir = ctx.config.fit_dir(spec.name());
  PosteriorDraws draws = load_fit(dir);
  if (draws.spec_hash != spec_digest(spec, data)) {
    throw DataError("fit at '" + dir.string() + "' was produced from a different dataset or model");
  }
  return draws;
}

int cmd_diagnose(const Context& ctx) {
  const ArealDataset data = load_dataset(ctx.config);
  const ModelSpec spec = ctx.config.model.resolve(data);
  const PosteriorDraws draws = load_matching_fit(ctx, spec, data);
  return report_diagnostics(ctx, draws, ctx.config.fit_dir(spec.name()));
}

int cmd_compare(const Context& ctx, bool fit_missing) {
  const ArealDataset data = load_dataset(ctx.config);
  std::vector<ModelSpec> specs;
  for (const char* fam : {"gamma", "lognormal", "normal", "weibull"}) {
    for (bool spatial : {false, true}) {
      ModelChoice choice = ctx.config.model;
      choice.family = fam;
      choice.spatial = spatial;
      specs.push_back(choice.resolve(data));
    }
  }
  std::vector<std::string> absent;
  for (const auto& s : specs) {
    if (!fs::exists(fs::path(ctx.config.fit_dir(s.name())) / "fit.json")) absent.push_back(s.name());
  }
  if (!absent.empty() && !fit_missing) {
    std::string msg = "missing fits (run fit or pass --fit-missing):";
    for (const auto& a : absent) msg += " " + a;
    throw DataError(msg);
  }
  std::vector<ComparisonReport> rows;
  for (const auto& s : specs) {
    const auto basis = basis_for(s, data);
    PosteriorDraws draws;
    if (std::find(absent.begin(), absent.end(), s.name()) != absent.end()) {
      draws = run(s, data, basis, ctx.config.sampler);
      save_fit(ctx.config.fit_dir(s.name()), draws, ctx.digest);
    } else {
      draws = load_matching_fit(ctx, s, data);
    }
    const PredictiveDraws pred = posterior_predict(s, data, basis, draws, ctx.config.seed);
    ComparisonReport r = dic(s, data, basis, draws);
    const ErrorSummary err = mae_mse(pred, data);
    r.model = s.name();
    r.mae = err.mae;
    r.mse = err.mse;
    rows.push_back(r);
  }
  auto argmin = [&](auto field) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (field(rows[i]) < field(rows[best])) best = i;
    }
    return best;
  };
  const auto best_mae = argmin([](const auto& r) { return r.mae; });
  const auto best_mse = argmin([](const auto& r) { return r.mse; });
  const auto best_dic = argmin([](const auto& r) { return r.dic; });
  std::string out = comment_line(ctx.digest);
  out += "model,mae,mse,dic,dbar,pd,min_mae,min_mse,min_dic\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out += r.model + "," + format_double(r.mae) + "," + format_double(r.mse) + "," +
           format_double(r.dic) + "," + format_double(r.dbar) + "," + format_double(r.pd) + "," +
           (i == best_mae ? "1" : "0") + "," + (i == best_mse ? "1" : "0") + "," +
           (i == best_dic ? "1" : "0") + "\n";
    std::printf("%-20s MAE %10.4f%s  MSE %12.4f%s  DIC %12.2f%s\n", r.model.c_str(), r.mae,
                i == best_mae ? "*" : " ", r.mse, i == best_mse ? "*" : " ", r.dic,
                i == best_dic ? "*" : " ");
  }
  write_text(ctx.out / "comparison.csv", out);
  return Ok;
}

std::string district_table(const Eigen::MatrixXd& m, const ArealDataset& data,
                           const std::string& digest) {
  std::string out = comment_line(digest) + "district";
  for (const auto& s : data.sector_names) out += "," + csv_escape(s);
  out += "\n";
  for (int i = 0; i < data.n(); ++i) {
    out += csv_escape(data.district_names[static_cast<std::size_t>(i)]);
    for (int j = 0; j < data.J(); ++j) out += "," + format_double(m(i, j));
    out += "\n";
  }
  return out;
}

int cmd_scenario(const Context& ctx) {
  const ArealDataset data = load_dataset(ctx.config);
  const ModelSpec spec = ctx.config.model.resolve(data);
  const PosteriorDraws draws = load_matching_fit(ctx, spec, data);
  ScenarioSpec scen = ctx.config.scenario.spec;
  if (!ctx.config.paths.selections.empty()) {
    require_path(ctx.config.paths.selections, "selections");
    scen.selections = read_selections(ctx.config.paths.selections);
  }
  const auto basis = basis_for(spec, data);
  const ScenarioResult result = simulate_scenario(spec, data, basis, draws, scen, ctx.config.seed);
  const Eigen::MatrixXd resid = standardized_residuals(result, data);
  const fs::path dir = ctx.out / "scenario";
  write_text(dir / "residuals.csv", district_table(resid, data, ctx.digest));
  write_text(dir / "scenario_mean.csv", district_table(result.mean, data, ctx.digest));
  json totals;
  json per_sector;
  for (int j = 0; j < data.J(); ++j) {
    per_sector[data.sector_names[static_cast<std::size_t>(j)]] = result.sector_totals_check(j);
  }
  totals["max_relative_deviation"] = per_sector;
  totals["tolerance"] = 1e-10;
  totals["pass"] = result.sector_totals_check.maxCoeff() <= 1e-10;
  totals["draws"] = result.n_draws();
  write_json(dir / "totals_check.json", totals, ctx.digest);
  std::cout << "scenario: " << result.n_draws() << " draws, max totals deviation "
            << result.sector_totals_check.maxCoeff() << ", mean residual " << resid.mean() << "\n";
  if (ctx.config.scenario.power) {
    const PowerResult power =
        power_diagnostic(spec, data, basis, result, scen, ctx.config.scenario.power_options);
    json pj;
    pj["detect_rate"] = power.detect_rate;
    pj["detections"] = power.detections;
    pj["sign_reversals"] = power.sign_reversals;
    pj["replicates_used"] = power.replicates_used;
    pj["warnings"] = power.warnings;
    write_json(dir / "power.json", pj, ctx.digest);
    std::cout << "power: detect rate " << power.detect_rate << ", sign reversals "
              << power.sign_reversals << " over " << power.replicates_used << " replicates\n";
  }
  return Ok;
}

int cmd_simulate(const Context& ctx) {
  const auto& o = ctx.config.simulate;
  SynthSpec s;
  s.n = o.n;
  s.J = o.J;
  s.k = o.k;
  s.graph = parse_graph_kind(o.graph);
  s.family = Family::parse(o.family);
  s.spatial = o.spatial;
  s.r = o.r;
  s.true_sigma2 = o.sigma2;
  s.true_theta = o.theta;
  s.seed = ctx.config.seed;
  const SyntheticData syn = generate(s);
  write_json(ctx.config.dataset_path(), dataset_to_json(syn.data), ctx.digest);
  const ParamLayout layout(s.model_spec());
  json truth;
  truth["model"] = s.model_spec();
  truth["param_names"] = layout.names(syn.data.sector_names, syn.data.covariate_names);
  truth["values"] = std::vector<double>(syn.truth.data(), syn.truth.data() + syn.truth.size());
  write_json(ctx.out / "truth.json", truth, ctx.digest);
  std::cout << "simulate: " << s.n << " districts x " << s.J << " sectors -> "
            << ctx.config.dataset_path() << "\n";
  return Ok;
}

void emit_error(const char* kind, const std::string& message, int code) {
  const json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Spatial generalized linear mixed models for areal donation data", "sglmm"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model;
  std::optional<int> r;
  std::optional<long> iters, keep;
  std::optional<int> thin, chains;
  std::optional<std::string> out;
  bool strict = false;
  bool fit_missing = false;
  bool power = false;
  std::optional<std::string> dataset, selections;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Seed for every random stream");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--dataset", dataset, "dataset.json path (default <out>/dataset.json)");
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", model, "Likelihood family")
        ->check(CLI::IsMember({"gamma", "lognormal", "normal", "weibull"}));
    sub->add_flag("--spatial,!--no-spatial", "Include the Moran-basis spatial effect");
    sub->add_option("--r", r, "Moran basis rank");
    sub->add_flag("--strict", strict, "Exit 4 when convergence flags exceed the thresholds");
  };
  auto add_sampler = [&](CLI::App* sub) {
    sub->add_option("--iters", iters, "Sweeps per chain");
    sub->add_option("--thin", thin, "Thinning interval");
    sub->add_option("--keep", keep, "Thinned draws kept per chain");
    sub->add_option("--chains", chains, "Number of chains");
  };

  auto* prep = app.add_subcommand("prep", "Aggregate donations into dataset.json");
  add_common(prep);
  auto* fit = app.add_subcommand("fit", "Fit one model variant");
  add_common(fit);
  add_model(fit);
  add_sampler(fit);
  auto* diag = app.add_subcommand("diagnose", "Recompute diagnostics for a stored fit");
  add_common(diag);
  add_model(diag);
  auto* cmp = app.add_subcommand("compare", "MAE/MSE/DIC table over the eight variants");
  add_common(cmp);
  add_model(cmp);
  add_sampler(cmp);
  cmp->add_flag("--fit-missing", fit_missing, "Fit variants that have no stored draws");
  auto* scen = app.add_subcommand("scenario", "Counterfactual scenario and power diagnostic");
  add_common(scen);
  add_model(scen);
  scen->add_option("--selections", selections, "Selection CSV (sector,covariate,relationship)");
  scen->add_flag("--power", power, "Run the power diagnostic");
  auto* sim = app.add_subcommand("simulate", "Write a synthetic dataset with known truth");
  add_common(sim);
  sim->add_option("--model", model, "Likelihood family")
      ->check(CLI::IsMember({"gamma", "lognormal", "normal", "weibull"}));
  sim->add_flag("--spatial,!--no-spatial", "Include a spatial effect");
  sim->add_option("--r", r, "Moran basis rank");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? Ok : Usage;
  }
  CLI::App* sub = app.get_subcommands().front();

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      try {
        cfg = config_from_json(json::parse(read_text(config_path)));
      } catch (const json::parse_error& e) {
        throw SpecError("cannot parse config '" + config_path + "': " + e.what());
      }
    }
    if (seed) cfg.seed = *seed;
    if (out) cfg.paths.out = *out;
    if (dataset) cfg.paths.dataset = *dataset;
    if (selections) cfg.paths.selections = *selections;
    if (power) cfg.scenario.power = true;
    if (strict) cfg.strict = true;
    const bool is_sim = sub == sim;
    if (model) (is_sim ? cfg.simulate.family : cfg.model.family) = *model;
    if (r) (is_sim ? cfg.simulate.r : cfg.model.r) = *r;
    if (auto* o = sub->get_option_no_throw("--spatial"); o && o->count() > 0) {
      (is_sim ? cfg.simulate.spatial : cfg.model.spatial) = o->as<bool>();
    }
    if (iters) cfg.sampler.n_iter = *iters;
    if (thin) cfg.sampler.thin = *thin;
    if (keep) cfg.sampler.keep = *keep;
    if (chains) cfg.sampler.n_chains = *chains;
    cfg = config_from_json(to_json(cfg));  // re-applies the seed to every stream

    Context ctx{cfg, config_digest(cfg), fs::path(cfg.paths.out)};
    fs::create_directories(ctx.out);
    write_text(ctx.out / ("resolved_config." + sub->get_name() + ".json"), to_json(cfg).dump(2) + "\n");

    if (sub == prep) return cmd_prep(ctx);
    if (sub == fit) return cmd_fit(ctx);
    if (sub == diag) return cmd_diagnose(ctx);
    if (sub == cmp) return cmd_compare(ctx, fit_missing);
    if (sub == scen) return cmd_scenario(ctx);
    if (sub == sim) return cmd_simulate(ctx);
  } catch (const DataError& e) {
    emit_error(e.kind(), e.what(), DataFailure);
    return DataFailure;
  } catch (const NumericalError& e) {
    emit_error(e.kind(), e.what(), NumericalFailure);
    return NumericalFailure;
  } catch (const fs::filesystem_error& e) {
    emit_error("io_error", e.what(), DataFailure);
    return DataFailure;
  }
  return Usage;
}

}  // namespace sglmm::cli
