#pragma once

#include "sglmm/dataset.hpp"
#include "sglmm/money.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sglmm {

/// The seven project sectors used by default.
const std::vector<std::string>& default_sectors();

enum class Precision { Country, Region, District, Point };

Precision parse_precision(const std::string& text);
std::string to_string(Precision p);

/// One row of a donation table. A project split into several subprojects is
/// represented either by one row per subproject (each repeating the project
/// total and the subproject count) or by a single row whose subprojects all
/// share its location.
struct DonationRecord {
  std::string project_id;
  std::string sector;
  Money amount;
  Precision precision = Precision::District;
  std::string location_key;
  int subproject_count = 1;
};

struct District {
  std::string name;
  std::string region;
  std::int64_t population = 0;
};

struct DistrictRegistry {
  std::vector<District> districts;
  std::vector<std::pair<std::string, std::string>> merge_map;  // source -> target
  std::vector<std::string> drop_list;
};

/// Registry after merges and drops: the modeled district set, in the order of
/// the original registry. A merged source's population is added to its target.
struct ResolvedRegistry {
  std::vector<District> districts;
  std::map<std::string, std::string> merged_into;
  std::vector<std::string> dropped;

  int index_of(const std::string& name) const;  // -1 if absent
};

ResolvedRegistry resolve(const DistrictRegistry& registry);

/// Throws MalformedRecordError for non-positive amounts, bad subproject
/// counts, or a missing/extra location key.
void validate(const DonationRecord& record);

std::vector<DonationRecord> split_subprojects(const DonationRecord& record);

enum class DispersalScope { Country, Region };

/// Population-proportional dispersal of `amount` across the modeled districts
/// (all of them for Country, those in `region_key` for Region).
std::map<std::string, Money> disperse_by_population(Money amount, DispersalScope scope,
                                                    const DistrictRegistry& registry,
                                                    const std::string& region_key = "");

enum class DroppedPointPolicy { Error, Discard };

struct AggregateOptions {
  std::vector<std::string> sectors = default_sectors();
  DroppedPointPolicy dropped_points = DroppedPointPolicy::Error;
};

struct AggregateReport {
  std::size_t records_in = 0;
  Money total_in;
  Money total_allocated;
  Money total_discarded;
  std::vector<std::string> discarded_projects;
  std::vector<std::string> merged_districts;
  std::vector<std::string> dropped_districts;
};

struct AggregateResult {
  std::vector<std::string> district_names;
  std::vector<std::string> sector_names;
  std::vector<std::vector<Money>> totals;  // [district][sector]
  AggregateReport report;
};

/// Allocates every record to modeled districts: subproject splitting first,
/// then country/region dispersal, merges, and drops. District-level records
/// to dropped districts are discarded and reported. Throws ResolutionError
/// listing all offending records if any location cannot be resolved.
AggregateResult aggregate(const std::vector<DonationRecord>& records,
                          const DistrictRegistry& registry,
                          const AggregateOptions& options = {});

struct StandardizeOptions {
  /// Replaces non-positive per-capita cells with this value when set.
  std::optional<double> floor;
};

/// Divides totals by district population, standardizes covariate columns
/// (denominator n - 1) and prepends the intercept. `raw_covariates` rows
/// follow `totals.district_names`.
ArealDataset per_capita_standardize(const AggregateResult& totals,
                                    const DistrictRegistry& registry,
                                    const Eigen::MatrixXd& raw_covariates,
                                    const std::vector<std::string>& covariate_names,
                                    const Eigen::MatrixXd& adjacency,
                                    const StandardizeOptions& options = {});

/// Column-wise (x - mean) / sd with sample sd. Throws DataError on zero variance.
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& raw, Eigen::VectorXd& means,
                                    Eigen::VectorXd& sds);

/// Builds an adjacency over the modeled districts from an edge list over the
/// original registry: merged endpoints map to their targets, edges touching
/// dropped districts vanish, and self-loops created by merging are removed.
Eigen::MatrixXd adjacency_from_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                                     const ResolvedRegistry& resolved);

}  // namespace sglmm
