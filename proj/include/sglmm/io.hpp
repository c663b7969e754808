#pragma once

#include "sglmm/data_prep.hpp"
#include "sglmm/dataset.hpp"
#include "sglmm/model.hpp"
#include "sglmm/sampler.hpp"
#include "sglmm/scenario.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sglmm {

using json = nlohmann::ordered_json;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws DataError when absent.
  std::size_t column(const std::string& name) const;
};

/// RFC 4180 style: quoted fields may hold commas, doubled quotes and
/// newlines. Lines starting with '#' before the header are skipped. Rows
/// must have as many fields as the header.
CsvTable parse_csv(const std::string& text, const std::string& source = "<string>");
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(const std::string& field);
std::string format_double(double v);  ///< %.17g

std::string read_text(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate then write.
void write_text(const std::filesystem::path& path, const std::string& text);

std::vector<DonationRecord> read_donations(const std::filesystem::path& path);
/// `merges` and `drops` may be empty paths.
DistrictRegistry read_registry(const std::filesystem::path& districts,
                               const std::filesystem::path& merges,
                               const std::filesystem::path& drops);
/// Rows aligned to `district_names`; extra districts in the file (merged or
/// dropped ones) are ignored, missing ones are an error.
std::pair<Eigen::MatrixXd, std::vector<std::string>> read_covariates(
    const std::filesystem::path& path, const std::vector<std::string>& district_names);
std::vector<std::pair<std::string, std::string>> read_edges(const std::filesystem::path& path);
std::vector<Selection> read_selections(const std::filesystem::path& path);

json dataset_to_json(const ArealDataset& data);
ArealDataset dataset_from_json(const json& j);

void to_json(json& j, const Hyperparameters& h);
void from_json(const json& j, Hyperparameters& h);
void to_json(json& j, const ModelSpec& m);
void from_json(const json& j, ModelSpec& m);
void to_json(json& j, const SamplerConfig& c);
void from_json(const json& j, SamplerConfig& c);
void to_json(json& j, const ScenarioSpec& s);
void from_json(const json& j, ScenarioSpec& s);

/// One chain's kept draws: a "# config_digest=" line, a header of parameter
/// names plus log_posterior, then one row per draw.
void write_draws_csv(const std::filesystem::path& path, const ChainResult& chain,
                     const std::vector<std::string>& names, const std::string& digest);
struct DrawsFile {
  std::string digest;
  std::vector<std::string> names;
  Eigen::MatrixXd draws;
  Eigen::VectorXd log_posterior;
};
DrawsFile read_draws_csv(const std::filesystem::path& path);

/// Writes fit.json plus chain_<c>.csv into `dir`.
void save_fit(const std::filesystem::path& dir, const PosteriorDraws& draws,
              const std::string& digest);
PosteriorDraws load_fit(const std::filesystem::path& dir);

}  // namespace sglmm
