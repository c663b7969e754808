#include "sglmm/cli.hpp"
#include "sglmm/errors.hpp"
#include "sglmm/io.hpp"

#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <set>
#include <sstream>

using namespace sglmm;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = SGLMM_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sglmm_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "sglmm");
  return cli::run(args);
}

std::vector<std::string> prep_args(const fs::path& out) {
  return {"prep", "--config", (out / "config.json").string(), "--out", out.string()};
}

void write_prep_config(const fs::path& fixture, const fs::path& out, const std::string& donations = "") {
  json j;
  j["paths"] = {{"donations", donations.empty() ? (fixture / "donations.csv").string() : donations},
                {"districts", (fixture / "districts.csv").string()},
                {"merges", (fixture / "merges.csv").string()},
                {"drops", (fixture / "drops.csv").string()},
                {"covariates", (fixture / "covariates.csv").string()},
                {"adjacency", (fixture / "adjacency.csv").string()}};
  write_text(out / "config.json", j.dump(2));
}

std::string drop_comment_lines(const std::string& text) {
  std::string out, line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) != 0) out += line + "\n";
  }
  return out;
}

std::size_t csv_columns(const fs::path& p) { return read_csv(p).header.size(); }

}  // namespace

TEST_SUITE("io_cli") {

TEST_CASE("csv parsing") {
  const auto t = parse_csv("# comment\na,b,c\n1,\"x, y\",\"say \"\"hi\"\"\"\n2,\"multi\nline\",z\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x, y");
  CHECK(t.rows[0][2] == "say \"hi\"");
  CHECK(t.rows[1][1] == "multi\nline");
  CHECK(t.column("c") == 2);
  CHECK_THROWS_AS(t.column("d"), DataError);
  CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n"), MalformedRecordError);
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(parse_csv("v\n" + csv_escape("q\"x,") + "\n").rows[0][0] == "q\"x,");
  CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("config round trip") {
  cli::RunConfig c;
  c.seed = 42;
  c.paths.donations = "d.csv";
  c.prep.floor = 0.5;
  c.prep.discard_dropped_points = true;
  c.model.family = "weibull";
  c.model.spatial = false;
  c.sampler.n_iter = 1234;
  c.sampler.start = StartMode::Prior;
  c.scenario.spec.shift_sd = 2.0;
  c.scenario.spec.selections = {{"Health", "poverty", Relationship::Negative}};
  c.scenario.power = true;
  c.scenario.power_options.cutoff = 0.8;
  c.simulate.graph = "lattice";
  c.strict = true;
  c.strict_options.max_geweke_fraction = 0.05;
  const json j = cli::to_json(c);
  const auto back = cli::config_from_json(j);
  CHECK(cli::to_json(back) == cli::to_json(cli::config_from_json(j)));
  CHECK(cli::to_json(back).dump() == cli::to_json(cli::config_from_json(cli::to_json(back))).dump());
  CHECK(back.sampler.seed == 42);
  CHECK(back.sampler.n_iter == 1234);
  CHECK(back.sampler.start == StartMode::Prior);
  CHECK(*back.prep.floor == 0.5);
  CHECK(back.scenario.spec.selections[0].relationship == Relationship::Negative);
  CHECK(back.scenario.power_options.refit.seed == 42);
  CHECK(cli::config_digest(back) == cli::config_digest(cli::config_from_json(cli::to_json(back))));
  json bad = j;
  bad["model"]["famliy"] = "gamma";
  CHECK_THROWS_AS(cli::config_from_json(bad), SpecError);
}

TEST_CASE("dataset json round trip") {
  ArealDataset d;
  d.y = Eigen::MatrixXd::Random(3, 2).array() + 2.0;
  d.X = Eigen::MatrixXd::Random(3, 2);
  d.A = Eigen::MatrixXd::Zero(3, 3);
  d.A(0, 1) = d.A(1, 0) = 1;
  d.district_names = {"a", "b", "c"};
  d.sector_names = {"s", "t"};
  d.covariate_names = {"Intercept", "x"};
  d.covariate_means = Eigen::VectorXd::Constant(1, 0.3);
  d.covariate_sds = Eigen::VectorXd::Constant(1, 1.7);
  const auto back = dataset_from_json(json::parse(dataset_to_json(d).dump()));
  CHECK(back.y == d.y);
  CHECK(back.X == d.X);
  CHECK(back.A == d.A);
  CHECK(back.district_names == d.district_names);
  CHECK(back.covariate_sds == d.covariate_sds);
}

TEST_CASE("selection file in the documented shape") {
  const auto dir = scratch("selections");
  write_text(dir / "sel.csv",
             "sector,covariate,relationship\n"
             "Agriculture,cultivated,Positive\n"
             "Education,school_km,Negative\n"
             "Governance,poverty,Positive\n"
             "Health,injured,Positive\n"
             "RD,poverty,Positive\n"
             "RPT,density,Positive\n"
             "WSI,lighting,Negative\n");
  const auto sel = read_selections(dir / "sel.csv");
  REQUIRE(sel.size() == 7);
  CHECK(sel[1].relationship == Relationship::Negative);
  CHECK(sel[6].covariate == "lighting");
  ScenarioSpec s;
  s.selections = sel;
  CHECK_NOTHROW(s.validate(default_sectors(), {"Intercept", "poverty", "school_km", "injured",
                                               "food_share", "cultivated", "lighting", "density"}));
  fs::remove_all(dir);
}

TEST_CASE("prep is byte stable and conserves currency") {
  const auto fixture = kFixtures / "paper_scale";
  const auto a = scratch("prep_a"), b = scratch("prep_b");
  write_prep_config(fixture, a);
  write_prep_config(fixture, b);
  REQUIRE(cli_run(prep_args(a)) == cli::Ok);
  const std::string first = read_text(a / "dataset.json");
  REQUIRE(cli_run(prep_args(a)) == cli::Ok);
  CHECK(read_text(a / "dataset.json") == first);

  const json rep = json::parse(read_text(a / "prep_report.json"));
  CHECK(rep["conserved"].get<bool>());
  CHECK(rep["cells"].get<int>() == 182);
  CHECK(rep["config_digest"].get<std::string>().size() == 64);
  CHECK(json::parse(first).contains("config_digest"));

  // Oracle: the input amounts in cents, once per project (subproject rows
  // repeat the project amount).
  long long cents = 0;
  const auto donations = read_csv(fixture / "donations.csv");
  const auto col = donations.column("amount_usd");
  const auto id = donations.column("project_id");
  std::set<std::string> seen;
  for (const auto& row : donations.rows) {
    if (seen.insert(row[id]).second) cents += Money::parse(row[col]).cents();
  }
  CHECK(Money::parse(rep["total_in"].get<std::string>()).cents() == cents);
  CHECK(Money::parse(rep["total_allocated"].get<std::string>()).cents() +
            Money::parse(rep["total_discarded"].get<std::string>()).cents() ==
        cents);

  // A different output directory gives the same numbers.
  REQUIRE(cli_run(prep_args(b)) == cli::Ok);
  const json ja = json::parse(first), jb = json::parse(read_text(b / "dataset.json"));
  CHECK(ja["y"] == jb["y"]);
  CHECK(ja["X"] == jb["X"]);

  const auto resolved = json::parse(read_text(a / "resolved_config.prep.json"));
  CHECK(cli::to_json(cli::config_from_json(resolved)) == resolved);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("prep error exits") {
  const auto fixture = kFixtures / "mixed";
  const auto dir = scratch("prep_err");
  write_text(dir / "empty.csv", "project_id,sector,amount_usd,precision,location_key,subproject_count\n");
  write_prep_config(fixture, dir, (dir / "empty.csv").string());
  CHECK(cli_run(prep_args(dir)) == cli::DataFailure);
  write_prep_config(fixture, dir, (dir / "missing.csv").string());
  CHECK(cli_run(prep_args(dir)) == cli::DataFailure);
  write_prep_config(fixture, dir);
  CHECK(cli_run(prep_args(dir)) == cli::Ok);
  CHECK(cli_run({"frobnicate"}) == cli::Usage);
  fs::remove_all(dir);
}

TEST_CASE("fit, diagnose, compare and scenario") {
  const auto fixture = kFixtures / "paper_scale";
  const auto dir = scratch("pipeline");
  write_prep_config(fixture, dir);
  REQUIRE(cli_run(prep_args(dir)) == cli::Ok);
  const std::vector<std::string> budget{"--iters", "2000", "--thin", "2", "--keep", "400",
                                        "--chains", "2", "--out", dir.string()};
  auto with = [&](std::vector<std::string> head) {
    head.insert(head.end(), budget.begin(), budget.end());
    return head;
  };

  REQUIRE(cli_run(with({"fit", "--model", "gamma", "--spatial", "--r", "7"})) == cli::Ok);
  const auto gamma_dir = dir / "fits" / "spatial-gamma";
  CHECK(csv_columns(gamma_dir / "chain_1.csv") == 107 + 1);
  CHECK(read_draws_csv(gamma_dir / "chain_1.csv").draws.cols() == 107);
  const std::string chain1 = read_text(gamma_dir / "chain_1.csv");
  REQUIRE(cli_run(with({"fit", "--model", "gamma", "--spatial", "--r", "7"})) == cli::Ok);
  CHECK(read_text(gamma_dir / "chain_1.csv") == chain1);
  CHECK(read_text(gamma_dir / "chain_1.csv").rfind("# config_digest=", 0) == 0);
  const auto coef = read_csv(gamma_dir / "coefficients.csv");
  CHECK(coef.rows.size() == 56);
  CHECK(json::parse(read_text(gamma_dir / "diagnostics.json")).contains("geweke_z"));

  REQUIRE(cli_run(with({"fit", "--model", "normal", "--no-spatial"})) == cli::Ok);
  CHECK(read_draws_csv(dir / "fits" / "nonspatial-normal" / "chain_1.csv").draws.cols() == 57);

  CHECK(cli_run({"diagnose", "--model", "gamma", "--spatial", "--out", dir.string()}) == cli::Ok);
  CHECK(cli_run({"diagnose", "--model", "weibull", "--out", dir.string()}) == cli::DataFailure);

  // r beyond n - k has no basis.
  CHECK(cli_run(with({"fit", "--model", "gamma", "--r", "30"})) == cli::NumericalFailure);

  json strict;
  strict["strict_options"] = {{"rhat", 1.0001}, {"max_geweke_fraction", 0.0}};
  write_text(dir / "strict.json", strict.dump());
  CHECK(cli_run(with({"fit", "--config", (dir / "strict.json").string(), "--model", "lognormal",
                      "--no-spatial", "--strict"})) == cli::ConvergenceFailure);

  CHECK(cli_run(with({"compare"})) == cli::DataFailure);
  REQUIRE(cli_run(with({"compare", "--fit-missing"})) == cli::Ok);
  const std::string table = read_text(dir / "comparison.csv");
  const auto parsed = read_csv(dir / "comparison.csv");
  CHECK(parsed.header == std::vector<std::string>{"model", "mae", "mse", "dic", "dbar", "pd",
                                                  "min_mae", "min_mse", "min_dic"});
  CHECK(parsed.rows.size() == 8);
  int min_dic = 0;
  for (const auto& row : parsed.rows) min_dic += row[8] == "1";
  CHECK(min_dic == 1);

  // Second run loads the stored draws instead of refitting.
  const auto stamp = fs::last_write_time(gamma_dir / "chain_1.csv");
  REQUIRE(cli_run(with({"compare"})) == cli::Ok);
  CHECK(fs::last_write_time(gamma_dir / "chain_1.csv") == stamp);
  CHECK(drop_comment_lines(read_text(dir / "comparison.csv")) == drop_comment_lines(table));

  write_text(dir / "sel.csv",
             "sector,covariate,relationship\n"
             "Agriculture,cultivated,Positive\nEducation,school_km,Negative\n"
             "Governance,poverty,Positive\nHealth,injured,Positive\nRD,poverty,Positive\n"
             "RPT,density,Positive\nWSI,lighting,Negative\n");
  REQUIRE(cli_run({"scenario", "--model", "gamma", "--spatial", "--out", dir.string(),
                   "--selections", (dir / "sel.csv").string()}) == cli::Ok);
  const json totals = json::parse(read_text(dir / "scenario" / "totals_check.json"));
  CHECK(totals["pass"].get<bool>());
  const auto resid = read_csv(dir / "scenario" / "residuals.csv");
  CHECK(resid.header.front() == "district");
  CHECK(resid.rows.size() == 26);
  fs::remove_all(dir);
}

TEST_CASE("null scenario residuals are centred") {
  const auto dir = scratch("null_scenario");
  REQUIRE(cli_run({"simulate", "--seed", "3", "--out", dir.string()}) == cli::Ok);
  CHECK(json::parse(read_text(dir / "truth.json"))["values"].size() == 107);
  REQUIRE(cli_run({"fit", "--seed", "3", "--out", dir.string(), "--iters", "30000", "--thin",
                   "5", "--keep", "3000", "--chains", "2"}) == cli::Ok);
  json cfg;
  cfg["scenario"] = {{"shift_sd", 0.0},
                     {"selections",
                      json::array({{{"sector", "Agriculture"}, {"covariate", "x1"}, {"relationship", "Positive"}},
                                   {{"sector", "Education"}, {"covariate", "x2"}, {"relationship", "Positive"}},
                                   {{"sector", "Governance"}, {"covariate", "x3"}, {"relationship", "Positive"}},
                                   {{"sector", "Health"}, {"covariate", "x4"}, {"relationship", "Positive"}},
                                   {{"sector", "RD"}, {"covariate", "x5"}, {"relationship", "Positive"}},
                                   {{"sector", "RPT"}, {"covariate", "x6"}, {"relationship", "Positive"}},
                                   {{"sector", "WSI"}, {"covariate", "x7"}, {"relationship", "Negative"}}})}};
  write_text(dir / "scen.json", cfg.dump());
  REQUIRE(cli_run({"scenario", "--config", (dir / "scen.json").string(), "--seed", "3", "--out",
                   dir.string()}) == cli::Ok);
  const auto resid = read_csv(dir / "scenario" / "residuals.csv");
  double sum = 0.0;
  int count = 0;
  for (const auto& row : resid.rows) {
    for (std::size_t c = 1; c < row.size(); ++c) sum += std::stod(row[c]), ++count;
  }
  CHECK(count == 182);
  CHECK(std::abs(sum / count) < 0.2);
  const json totals = json::parse(read_text(dir / "scenario" / "totals_check.json"));
  for (const auto& [sector, dev] : totals["max_relative_deviation"].items()) {
    CHECK(dev.get<double>() <= 1e-10);
  }
  fs::remove_all(dir);
}

}  // TEST_SUITE
