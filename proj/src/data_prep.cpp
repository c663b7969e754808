#include "sglmm/data_prep.hpp"

#include "sglmm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

namespace sglmm {

const std::vector<std::string>& default_sectors() {
  static const std::vector<std::string> sectors = {"Agriculture", "Education", "Governance",
                                                   "Health",      "RD",        "RPT",
                                                   "WSI"};
  return sectors;
}

Precision parse_precision(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "country") return Precision::Country;
  if (t == "region") return Precision::Region;
  if (t == "district") return Precision::District;
  if (t == "point") return Precision::Point;
  throw MalformedRecordError("unknown precision '" + text + "'");
}

std::string to_string(Precision p) {
  switch (p) {
    case Precision::Country: return "country";
    case Precision::Region: return "region";
    case Precision::District: return "district";
    case Precision::Point: return "point";
  }
  return "?";
}

int ResolvedRegistry::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < districts.size(); ++i) {
    if (districts[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

ResolvedRegistry resolve(const DistrictRegistry& registry) {
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < registry.districts.size(); ++i) {
    const auto& d = registry.districts[i];
    if (d.population <= 0) {
      throw DataError("district '" + d.name + "' has non-positive population");
    }
    if (!position.emplace(d.name, i).second) {
      throw DataError("district '" + d.name + "' is listed twice");
    }
  }
  const std::set<std::string> dropped(registry.drop_list.begin(), registry.drop_list.end());
  for (const auto& name : dropped) {
    if (!position.count(name)) throw ResolutionError("dropped district '" + name + "' is unknown");
  }
  ResolvedRegistry out;
  for (const auto& [from, to] : registry.merge_map) {
    if (!position.count(from) || !position.count(to)) {
      throw ResolutionError("merge " + from + " -> " + to + " names an unknown district");
    }
    if (from == to) throw DataError("district '" + from + "' is merged into itself");
    if (dropped.count(to) || dropped.count(from)) {
      throw DataError("merge " + from + " -> " + to + " involves a dropped district");
    }
    if (!out.merged_into.emplace(from, to).second) {
      throw DataError("district '" + from + "' is merged twice");
    }
  }
  for (const auto& [from, to] : out.merged_into) {
    if (out.merged_into.count(to)) {
      throw DataError("merge target '" + to + "' is itself merged elsewhere");
    }
  }
  for (const auto& d : registry.districts) {
    if (dropped.count(d.name) || out.merged_into.count(d.name)) continue;
    out.districts.push_back(d);
  }
  for (const auto& [from, to] : out.merged_into) {
    const int target = out.index_of(to);
    out.districts[static_cast<std::size_t>(target)].population +=
        registry.districts[position.at(from)].population;
  }
  out.dropped.assign(registry.drop_list.begin(), registry.drop_list.end());
  if (out.districts.empty()) throw DataError("no districts remain after merges and drops");
  return out;
}

void validate(const DonationRecord& record) {
  if (record.amount <= Money{}) {
    throw MalformedRecordError("project '" + record.project_id + "' has non-positive amount");
  }
  if (record.subproject_count < 1) {
    throw MalformedRecordError("project '" + record.project_id +
                               "' has subproject_count < 1");
  }
  const bool country = record.precision == Precision::Country;
  if (country != record.location_key.empty()) {
    throw MalformedRecordError("project '" + record.project_id +
                               "': location_key must be empty exactly for country precision");
  }
}

std::vector<DonationRecord> split_subprojects(const DonationRecord& record) {
  validate(record);
  const std::vector<std::int64_t> ones(static_cast<std::size_t>(record.subproject_count), 1);
  const auto shares = apportion(record.amount, ones);
  std::vector<DonationRecord> out;
  out.reserve(shares.size());
  for (const auto& share : shares) {
    DonationRecord r = record;
    r.amount = share;
    r.subproject_count = 1;
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::vector<int> scope_members(const ResolvedRegistry& resolved, DispersalScope scope,
                               const std::string& region_key) {
  std::vector<int> members;
  for (std::size_t i = 0; i < resolved.districts.size(); ++i) {
    if (scope == DispersalScope::Country || resolved.districts[i].region == region_key) {
      members.push_back(static_cast<int>(i));
    }
  }
  return members;
}

std::vector<Money> disperse_over(Money amount, const ResolvedRegistry& resolved,
                                 const std::vector<int>& members) {
  std::vector<std::int64_t> weights;
  weights.reserve(members.size());
  for (int m : members) weights.push_back(resolved.districts[static_cast<std::size_t>(m)].population);
  return apportion(amount, weights);
}

}  // namespace

std::map<std::string, Money> disperse_by_population(Money amount, DispersalScope scope,
                                                    const DistrictRegistry& registry,
                                                    const std::string& region_key) {
  const auto resolved = resolve(registry);
  const auto members = scope_members(resolved, scope, region_key);
  if (members.empty()) throw ResolutionError("unknown region '" + region_key + "'");
  const auto shares = disperse_over(amount, resolved, members);
  std::map<std::string, Money> out;
  for (std::size_t m = 0; m < members.size(); ++m) {
    out[resolved.districts[static_cast<std::size_t>(members[m])].name] += shares[m];
  }
  return out;
}

AggregateResult aggregate(const std::vector<DonationRecord>& records,
                          const DistrictRegistry& registry, const AggregateOptions& options) {
  if (records.empty()) throw DataError("no donation records supplied");
  const auto resolved = resolve(registry);
  const std::set<std::string> dropped(resolved.dropped.begin(), resolved.dropped.end());
  std::set<std::string> known;
  for (const auto& d : registry.districts) known.insert(d.name);

  AggregateResult result;
  for (const auto& d : resolved.districts) result.district_names.push_back(d.name);
  result.sector_names = options.sectors;
  result.totals.assign(resolved.districts.size(),
                       std::vector<Money>(options.sectors.size(), Money{}));
  auto& report = result.report;
  report.records_in = records.size();
  for (const auto& [from, to] : resolved.merged_into) report.merged_districts.push_back(from + "->" + to);
  report.dropped_districts = resolved.dropped;

  // Group sibling subproject rows by project id, keeping first-seen order.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const DonationRecord*>> groups;
  for (const auto& rec : records) {
    validate(rec);
    auto [it, inserted] = groups.try_emplace(rec.project_id);
    if (inserted) order.push_back(rec.project_id);
    it->second.push_back(&rec);
  }

  std::vector<std::string> problems;
  auto sector_index = [&](const std::string& s) {
    const auto it = std::find(options.sectors.begin(), options.sectors.end(), s);
    return it == options.sectors.end() ? -1 : static_cast<int>(it - options.sectors.begin());
  };

  for (const auto& id : order) {
    const auto& rows = groups.at(id);
    const DonationRecord& first = *rows.front();
    report.total_in += first.amount;
    for (const auto* row : rows) {
      if (row->amount != first.amount || row->subproject_count != first.subproject_count ||
          row->sector != first.sector) {
        throw MalformedRecordError("project '" + id +
                                   "': subproject rows disagree on amount, count or sector");
      }
    }
    std::vector<DonationRecord> shares;
    if (rows.size() == 1) {
      shares = split_subprojects(first);
    } else if (static_cast<int>(rows.size()) == first.subproject_count) {
      const std::vector<std::int64_t> ones(rows.size(), 1);
      const auto amounts = apportion(first.amount, ones);
      for (std::size_t s = 0; s < rows.size(); ++s) {
        DonationRecord r = *rows[s];
        r.amount = amounts[s];
        r.subproject_count = 1;
        shares.push_back(std::move(r));
      }
    } else {
      throw MalformedRecordError("project '" + id + "' has " + std::to_string(rows.size()) +
                                 " rows but subproject_count " +
                                 std::to_string(first.subproject_count));
    }

    const int sector = sector_index(first.sector);
    if (sector < 0) {
      problems.push_back(id + ": unknown sector '" + first.sector + "'");
      continue;
    }
    for (const auto& share : shares) {
      switch (share.precision) {
        case Precision::Country:
        case Precision::Region: {
          const auto scope = share.precision == Precision::Country ? DispersalScope::Country
                                                                   : DispersalScope::Region;
          const auto members = scope_members(resolved, scope, share.location_key);
          if (members.empty()) {
            problems.push_back(id + ": unknown region '" + share.location_key + "'");
            break;
          }
          const auto parts = disperse_over(share.amount, resolved, members);
          for (std::size_t m = 0; m < members.size(); ++m) {
            result.totals[static_cast<std::size_t>(members[m])][static_cast<std::size_t>(sector)] +=
                parts[m];
            report.total_allocated += parts[m];
          }
          break;
        }
        case Precision::District:
        case Precision::Point: {
          std::string name = share.location_key;
          if (auto it = resolved.merged_into.find(name); it != resolved.merged_into.end()) {
            name = it->second;
          }
          if (dropped.count(name)) {
            if (share.precision == Precision::Point &&
                options.dropped_points == DroppedPointPolicy::Error) {
              problems.push_back(id + ": point-precision donation in dropped district '" + name +
                                 "'");
              break;
            }
            report.total_discarded += share.amount;
            report.discarded_projects.push_back(id);
            break;
          }
          const int idx = resolved.index_of(name);
          if (idx < 0) {
            problems.push_back(id + ": unresolvable location '" + share.location_key + "'");
            break;
          }
          result.totals[static_cast<std::size_t>(idx)][static_cast<std::size_t>(sector)] +=
              share.amount;
          report.total_allocated += share.amount;
          break;
        }
      }
    }
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << problems.size() << " record(s) could not be resolved:";
    for (const auto& p : problems) msg << "\n  " << p;
    throw ResolutionError(msg.str());
  }
  return result;
}

Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& raw, Eigen::VectorXd& means,
                                    Eigen::VectorXd& sds) {
  const Eigen::Index n = raw.rows();
  if (n < 2) throw DataError("standardization needs at least two rows");
  means = raw.colwise().mean().transpose();
  sds.resize(raw.cols());
  Eigen::MatrixXd out(n, raw.cols());
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const Eigen::ArrayXd centered = raw.col(c).array() - means(c);
    const double var = centered.square().sum() / static_cast<double>(n - 1);
    if (!(var > 0.0)) {
      throw DataError("covariate column " + std::to_string(c) + " has zero variance");
    }
    sds(c) = std::sqrt(var);
    out.col(c) = centered / sds(c);
  }
  return out;
}

ArealDataset per_capita_standardize(const AggregateResult& totals,
                                    const DistrictRegistry& registry,
                                    const Eigen::MatrixXd& raw_covariates,
                                    const std::vector<std::string>& covariate_names,
                                    const Eigen::MatrixXd& adjacency,
                                    const StandardizeOptions& options) {
  const auto resolved = resolve(registry);
  const auto n = static_cast<Eigen::Index>(totals.district_names.size());
  const auto J = static_cast<Eigen::Index>(totals.sector_names.size());
  if (raw_covariates.rows() != n) throw ShapeError("covariate rows do not match districts");
  if (static_cast<Eigen::Index>(covariate_names.size()) != raw_covariates.cols()) {
    throw ShapeError("covariate names do not match covariate columns");
  }
  if (adjacency.rows() != n || adjacency.cols() != n) throw ShapeError("adjacency must be n x n");

  ArealDataset out;
  out.y.resize(n, J);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int r = resolved.index_of(totals.district_names[static_cast<std::size_t>(i)]);
    if (r < 0) {
      throw ResolutionError("district '" + totals.district_names[static_cast<std::size_t>(i)] +
                            "' is not in the resolved registry");
    }
    const double pop = static_cast<double>(resolved.districts[static_cast<std::size_t>(r)].population);
    for (Eigen::Index j = 0; j < J; ++j) {
      double v = totals.totals[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].dollars() / pop;
      if (v <= 0.0) {
        if (!options.floor) {
          throw DataError("domain error: cell (" + totals.district_names[static_cast<std::size_t>(i)] +
                          ", " + totals.sector_names[static_cast<std::size_t>(j)] +
                          ") has no positive donation total; fix the data or configure a floor");
        }
        v = *options.floor;
      }
      out.y(i, j) = v;
    }
  }
  const Eigen::MatrixXd z = standardize_columns(raw_covariates, out.covariate_means, out.covariate_sds);
  out.X.resize(n, z.cols() + 1);
  out.X.col(0).setOnes();
  out.X.rightCols(z.cols()) = z;
  out.A = adjacency;
  out.district_names = totals.district_names;
  out.sector_names = totals.sector_names;
  out.covariate_names.push_back("Intercept");
  out.covariate_names.insert(out.covariate_names.end(), covariate_names.begin(),
                             covariate_names.end());
  validate(out);
  return out;
}

Eigen::MatrixXd adjacency_from_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                                     const ResolvedRegistry& resolved) {
  const auto n = static_cast<Eigen::Index>(resolved.districts.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  const std::set<std::string> dropped(resolved.dropped.begin(), resolved.dropped.end());
  auto map_name = [&](const std::string& name) {
    auto it = resolved.merged_into.find(name);
    return it == resolved.merged_into.end() ? name : it->second;
  };
  for (const auto& [a_raw, b_raw] : edges) {
    const std::string a = map_name(a_raw);
    const std::string b = map_name(b_raw);
    if (dropped.count(a) || dropped.count(b) || a == b) continue;
    const int ia = resolved.index_of(a);
    const int ib = resolved.index_of(b);
    if (ia < 0 || ib < 0) {
      throw ResolutionError("adjacency edge " + a_raw + " - " + b_raw + " names an unknown district");
    }
    A(ia, ib) = 1.0;
    A(ib, ia) = 1.0;
  }
  return A;
}

}  // namespace sglmm
