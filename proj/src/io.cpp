#include "sglmm/io.hpp"

#include "sglmm/errors.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sglmm {

namespace fs = std::filesystem;

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  throw DataError("missing CSV column '" + name + "'");
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> record_lines;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t row_line = 1;
  auto end_row = [&] {
    row.push_back(field);
    field.clear();
    const bool blank = row.size() == 1 && row[0].empty() && !field_started;
    const bool comment = records.empty() && !row[0].empty() && row[0][0] == '#';
    if (!blank && !comment) {
      records.push_back(row);
      record_lines.push_back(row_line);
    }
    row.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty()) {
          throw DataError(source + ":" + std::to_string(line) + ": stray quote inside field");
        }
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(field);
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default:
        field += ch;
        field_started = true;
    }
  }
  if (quoted) throw DataError(source + ": unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();

  CsvTable table;
  if (records.empty()) throw DataError(source + ": empty CSV (no header)");
  table.header = records.front();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw MalformedRecordError(source + ":" + std::to_string(record_lines[r]) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, got " +
                                 std::to_string(records[r].size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

double parse_double(const std::string& s, const std::string& where) {
  if (s.empty()) throw MalformedRecordError(where + ": empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw MalformedRecordError(where + ": not a number: '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& s, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw MalformedRecordError(where + ": not an integer: '" + s + "'");
  }
  return v;
}

std::string where(const fs::path& path, std::size_t row) {
  return path.string() + " row " + std::to_string(row + 1);
}

}  // namespace

std::vector<DonationRecord> read_donations(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.column("project_id"), c_sector = t.column("sector"),
             c_amount = t.column("amount_usd"), c_prec = t.column("precision"),
             c_loc = t.column("location_key"), c_sub = t.column("subproject_count");
  std::vector<DonationRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    DonationRecord rec;
    rec.project_id = row[c_id];
    rec.sector = row[c_sector];
    try {
      rec.amount = Money::parse(row[c_amount]);
      rec.precision = parse_precision(row[c_prec]);
    } catch (const Error& e) {
      throw MalformedRecordError(where(path, r) + ": " + e.what());
    }
    rec.location_key = row[c_loc];
    rec.subproject_count = static_cast<int>(parse_int(row[c_sub], where(path, r)));
    out.push_back(std::move(rec));
  }
  return out;
}

DistrictRegistry read_registry(const fs::path& districts, const fs::path& merges,
                               const fs::path& drops) {
  DistrictRegistry reg;
  const CsvTable t = read_csv(districts);
  const auto c_name = t.column("district"), c_region = t.column("region"),
             c_pop = t.column("population");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    reg.districts.push_back(District{t.rows[r][c_name], t.rows[r][c_region],
                                     parse_int(t.rows[r][c_pop], where(districts, r))});
  }
  if (!merges.empty()) {
    const CsvTable m = read_csv(merges);
    const auto c_from = m.column("from"), c_to = m.column("to");
    for (const auto& row : m.rows) reg.merge_map.emplace_back(row[c_from], row[c_to]);
  }
  if (!drops.empty()) {
    const CsvTable d = read_csv(drops);
    const auto c = d.column("district");
    for (const auto& row : d.rows) reg.drop_list.push_back(row[c]);
  }
  return reg;
}

std::pair<Eigen::MatrixXd, std::vector<std::string>> read_covariates(
    const fs::path& path, const std::vector<std::string>& district_names) {
  const CsvTable t = read_csv(path);
  const auto c_district = t.column("district");
  std::vector<std::string> names;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == c_district) continue;
    names.push_back(t.header[c]);
    cols.push_back(c);
  }
  std::map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!row_of.emplace(t.rows[r][c_district], r).second) {
      throw DataError(path.string() + ": duplicate district '" + t.rows[r][c_district] + "'");
    }
  }
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(district_names.size()),
                      static_cast<Eigen::Index>(cols.size()));
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < district_names.size(); ++i) {
    const auto it = row_of.find(district_names[i]);
    if (it == row_of.end()) {
      missing.push_back(district_names[i]);
      continue;
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          parse_double(t.rows[it->second][cols[c]], where(path, it->second));
    }
  }
  if (!missing.empty()) {
    std::string msg = path.string() + ": no covariates for district(s)";
    for (const auto& m : missing) msg += " '" + m + "'";
    throw ResolutionError(msg);
  }
  return {raw, names};
}

std::vector<std::pair<std::string, std::string>> read_edges(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto a = t.column("district_a"), b = t.column("district_b");
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& row : t.rows) out.emplace_back(row[a], row[b]);
  return out;
}

std::vector<Selection> read_selections(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto s = t.column("sector"), c = t.column("covariate"), r = t.column("relationship");
  std::vector<Selection> out;
  for (const auto& row : t.rows) out.push_back({row[s], row[c], parse_relationship(row[r])});
  return out;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw DataError("dataset field '" + name + "' must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError("dataset field '" + name + "' is ragged");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) throw SpecError(std::string(what) + " must be a JSON object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw SpecError(std::string("unknown ") + what + " key '" + k + "'");
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json dataset_to_json(const ArealDataset& d) {
  json j;
  j["district_names"] = d.district_names;
  j["sector_names"] = d.sector_names;
  j["covariate_names"] = d.covariate_names;
  j["covariate_means"] = vector_to_json(d.covariate_means);
  j["covariate_sds"] = vector_to_json(d.covariate_sds);
  j["y"] = matrix_to_json(d.y);
  j["X"] = matrix_to_json(d.X);
  j["A"] = matrix_to_json(d.A);
  return j;
}

ArealDataset dataset_from_json(const json& j) {
  ArealDataset d;
  try {
    d.district_names = j.at("district_names").get<std::vector<std::string>>();
    d.sector_names = j.at("sector_names").get<std::vector<std::string>>();
    d.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    d.covariate_means = vector_from_json(j.at("covariate_means"));
    d.covariate_sds = vector_from_json(j.at("covariate_sds"));
    d.y = matrix_from_json(j.at("y"), "y");
    d.X = matrix_from_json(j.at("X"), "X");
    d.A = matrix_from_json(j.at("A"), "A");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed dataset JSON: ") + e.what());
  }
  return d;
}

void to_json(json& j, const Hyperparameters& h) {
  j = json{{"a_theta", h.a_theta}, {"b_theta", h.b_theta}, {"s2_beta", h.s2_beta},
           {"a_sigma", h.a_sigma}, {"b_sigma", h.b_sigma}};
}

void from_json(const json& j, Hyperparameters& h) {
  reject_unknown(j, {"a_theta", "b_theta", "s2_beta", "a_sigma", "b_sigma"}, "hyperparameter");
  get_if(j, "a_theta", h.a_theta);
  get_if(j, "b_theta", h.b_theta);
  get_if(j, "s2_beta", h.s2_beta);
  get_if(j, "a_sigma", h.a_sigma);
  get_if(j, "b_sigma", h.b_sigma);
}

void to_json(json& j, const ModelSpec& m) {
  j = json{{"family", m.family.name()}, {"spatial", m.spatial}, {"r", m.r},
           {"k", m.k}, {"J", m.J}, {"hyper", m.hyper}};
}

void from_json(const json& j, ModelSpec& m) {
  reject_unknown(j, {"family", "spatial", "r", "k", "J", "hyper"}, "model");
  if (j.contains("family")) m.family = Family::parse(j.at("family").get<std::string>());
  get_if(j, "spatial", m.spatial);
  get_if(j, "r", m.r);
  get_if(j, "k", m.k);
  get_if(j, "J", m.J);
  if (j.contains("hyper")) m.hyper = j.at("hyper").get<Hyperparameters>();
}

void to_json(json& j, const SamplerConfig& c) {
  j = json{{"n_iter", c.n_iter},
           {"thin", c.thin},
           {"keep", c.keep},
           {"n_chains", c.n_chains},
           {"seed", c.seed},
           {"adapt_interval", c.adapt_interval},
           {"target_accept", c.target_accept},
           {"target_accept_scalar", c.target_accept_scalar},
           {"adapt_rate", c.adapt_rate},
           {"adapt_decay", c.adapt_decay},
           {"ridge", c.ridge},
           {"initial_proposal_sd", c.initial_proposal_sd},
           {"covariance_start", c.covariance_start},
           {"freeze_adaptation", c.freeze_adaptation},
           {"stuck_threshold", c.stuck_threshold},
           {"start", c.start == StartMode::Prior ? "prior" : "dispersed_least_squares"},
           {"parallel", c.parallel}};
}

void from_json(const json& j, SamplerConfig& c) {
  reject_unknown(j,
                 {"n_iter", "thin", "keep", "n_chains", "seed", "adapt_interval", "target_accept",
                  "target_accept_scalar", "adapt_rate", "adapt_decay", "ridge",
                  "initial_proposal_sd", "covariance_start", "freeze_adaptation",
                  "stuck_threshold", "start", "parallel"},
                 "sampler");
  get_if(j, "n_iter", c.n_iter);
  get_if(j, "thin", c.thin);
  get_if(j, "keep", c.keep);
  get_if(j, "n_chains", c.n_chains);
  get_if(j, "seed", c.seed);
  get_if(j, "adapt_interval", c.adapt_interval);
  get_if(j, "target_accept", c.target_accept);
  get_if(j, "target_accept_scalar", c.target_accept_scalar);
  get_if(j, "adapt_rate", c.adapt_rate);
  get_if(j, "adapt_decay", c.adapt_decay);
  get_if(j, "ridge", c.ridge);
  get_if(j, "initial_proposal_sd", c.initial_proposal_sd);
  get_if(j, "covariance_start", c.covariance_start);
  get_if(j, "freeze_adaptation", c.freeze_adaptation);
  get_if(j, "stuck_threshold", c.stuck_threshold);
  get_if(j, "parallel", c.parallel);
  if (j.contains("start")) {
    const auto s = j.at("start").get<std::string>();
    if (s == "prior") {
      c.start = StartMode::Prior;
    } else if (s == "dispersed_least_squares") {
      c.start = StartMode::DispersedLeastSquares;
    } else {
      throw SpecError("unknown start mode '" + s + "'");
    }
  }
}

void to_json(json& j, const ScenarioSpec& s) {
  json sel = json::array();
  for (const auto& x : s.selections) {
    sel.push_back(json{{"sector", x.sector},
                       {"covariate", x.covariate},
                       {"relationship", to_string(x.relationship)}});
  }
  j = json{{"selections", sel},
           {"shift_sd", s.shift_sd},
           {"diagonal_covariance", s.diagonal_covariance},
           {"covariance_scale", s.covariance_scale}};
}

void from_json(const json& j, ScenarioSpec& s) {
  reject_unknown(j, {"selections", "shift_sd", "diagonal_covariance", "covariance_scale"},
                 "scenario");
  get_if(j, "shift_sd", s.shift_sd);
  get_if(j, "diagonal_covariance", s.diagonal_covariance);
  get_if(j, "covariance_scale", s.covariance_scale);
  if (j.contains("selections")) {
    s.selections.clear();
    for (const auto& x : j.at("selections")) {
      reject_unknown(x, {"sector", "covariate", "relationship"}, "selection");
      s.selections.push_back({x.at("sector").get<std::string>(),
                              x.at("covariate").get<std::string>(),
                              parse_relationship(x.at("relationship").get<std::string>())});
    }
  }
}

void write_draws_csv(const fs::path& path, const ChainResult& chain,
                     const std::vector<std::string>& names, const std::string& digest) {
  if (static_cast<Eigen::Index>(names.size()) != chain.draws.cols()) {
    throw ShapeError("parameter names do not match draw columns");
  }
  std::string out = "# config_digest=" + digest + "\n";
  for (const auto& n : names) out += csv_escape(n) + ",";
  out += "log_posterior\n";
  for (Eigen::Index t = 0; t < chain.draws.rows(); ++t) {
    for (Eigen::Index c = 0; c < chain.draws.cols(); ++c) {
      out += format_double(chain.draws(t, c));
      out += ',';
    }
    out += format_double(chain.log_posterior(t));
    out += '\n';
  }
  write_text(path, out);
}

DrawsFile read_draws_csv(const fs::path& path) {
  const std::string text = read_text(path);
  DrawsFile f;
  const std::string tag = "# config_digest=";
  if (text.rfind(tag, 0) == 0) {
    f.digest = text.substr(tag.size(), text.find('\n') - tag.size());
  }
  const CsvTable t = parse_csv(text, path.string());
  if (t.header.empty() || t.header.back() != "log_posterior") {
    throw DataError(path.string() + ": draws file lacks a log_posterior column");
  }
  f.names.assign(t.header.begin(), t.header.end() - 1);
  const auto rows = static_cast<Eigen::Index>(t.rows.size());
  const auto cols = static_cast<Eigen::Index>(f.names.size());
  f.draws.resize(rows, cols);
  f.log_posterior.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = t.rows[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < cols; ++c) {
      f.draws(r, c) = parse_double(row[static_cast<std::size_t>(c)], where(path, r));
    }
    f.log_posterior(r) = parse_double(row.back(), where(path, r));
  }
  return f;
}

void save_fit(const fs::path& dir, const PosteriorDraws& draws, const std::string& digest) {
  fs::create_directories(dir);
  json manifest;
  manifest["config_digest"] = digest;
  manifest["spec_hash"] = draws.spec_hash;
  manifest["model"] = draws.spec;
  manifest["sampler"] = draws.config;
  manifest["param_names"] = draws.param_names;
  json chains = json::array();
  for (int c = 0; c < draws.n_chains(); ++c) {
    const auto& ch = draws.chains[static_cast<std::size_t>(c)];
    const std::string file = "chain_" + std::to_string(c + 1) + ".csv";
    write_draws_csv(dir / file, ch, draws.param_names, digest);
    chains.push_back(json{{"file", file},
                          {"seed", ch.seed},
                          {"acceptance", ch.acceptance},
                          {"acceptance_kept", ch.acceptance_kept},
                          {"log_scale", ch.log_scale},
                          {"last_log_scale_step", ch.last_log_scale_step},
                          {"start", vector_to_json(ch.start)},
                          {"warnings", ch.warnings}});
  }
  manifest["chains"] = chains;
  write_text(dir / "fit.json", manifest.dump(2) + "\n");
}

PosteriorDraws load_fit(const fs::path& dir) {
  const fs::path manifest_path = dir / "fit.json";
  if (!fs::exists(manifest_path)) throw DataError("no fit found at '" + dir.string() + "'");
  PosteriorDraws d;
  try {
    const json m = json::parse(read_text(manifest_path));
    d.spec = m.at("model").get<ModelSpec>();
    d.config = m.at("sampler").get<SamplerConfig>();
    d.param_names = m.at("param_names").get<std::vector<std::string>>();
    d.spec_hash = m.at("spec_hash").get<std::string>();
    for (const auto& c : m.at("chains")) {
      const DrawsFile f = read_draws_csv(dir / c.at("file").get<std::string>());
      if (f.names != d.param_names) {
        throw DataError(dir.string() + ": chain columns do not match fit.json");
      }
      ChainResult ch;
      ch.draws = f.draws;
      ch.log_posterior = f.log_posterior;
      ch.seed = c.at("seed").get<std::uint64_t>();
      ch.acceptance = c.at("acceptance").get<std::vector<double>>();
      ch.acceptance_kept = c.at("acceptance_kept").get<std::vector<double>>();
      ch.log_scale = c.at("log_scale").get<std::vector<double>>();
      ch.last_log_scale_step = c.at("last_log_scale_step").get<std::vector<double>>();
      ch.start = vector_from_json(c.at("start"));
      ch.warnings = c.at("warnings").get<std::vector<std::string>>();
      d.chains.push_back(std::move(ch));
    }
  } catch (const json::exception& e) {
    throw DataError("malformed fit manifest '" + manifest_path.string() + "': " + e.what());
  }
  return d;
}

}  // namespace sglmm
