#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridsim/analytics.hpp"
#include "gridsim/dispatch.hpp"
#include "gridsim/grid.hpp"
#include "gridsim/scenario.hpp"
#include "gridsim/scenario_gen.hpp"

namespace gridsim {

// Relative paths inside config and recipe documents resolve against the
// directory of the document that names them.

// Scenario generation recipe (JSON):
//   { "grid"?, "start", "hours", "seed",
//     "synthetic":  { "peak_load", "zone_peak_load": {zone: MW}, "mean_wind_speed_10m",
//                     "with_reference", "with_load_training" },
//     "conversion": { "reference_height", "hub_height", "shear_exponent", "summer_scale",
//                     "winter_scale", "wind_grouping": "month_hour"|"month",
//                     "solar_grouping", "hydro_period", "small_hydro_factors": [12] },
//     "weather":    { <WeatherInputs series name>: CSV path, ... },
//     "hydro_period_energy": { unit id: [MWh per period] },
//     "output_dir"? }
// Synthetic weather fills every input; files listed under "weather" replace
// the matching synthetic series.
struct GenerationRecipe {
  std::optional<std::filesystem::path> grid;
  std::string start = "2030-01-01T00:00";
  std::size_t hours = 24;
  SyntheticOptions synthetic;
  ScenarioRecipe conversion;
  std::map<std::string, std::filesystem::path> weather_files;
  SeriesMap hydro_period_energy;
  std::optional<std::filesystem::path> output_dir;
};

GenerationRecipe parse_recipe(std::string_view text, const std::filesystem::path& base_dir,
                              const std::string& source = "<memory>");
GenerationRecipe load_recipe(const std::filesystem::path& path);

WeatherInputs recipe_weather(const Grid& grid, const GenerationRecipe& recipe);
ScenarioSeries generate_scenario(const Grid& grid, const GenerationRecipe& recipe);

// Scenario CSVs, one per ScenarioSeries field; absent files contribute
// nothing.
struct ScenarioFiles {
  std::optional<std::filesystem::path> available_renewable;
  std::optional<std::filesystem::path> load;
  std::optional<std::filesystem::path> negative_load;
  std::optional<std::filesystem::path> tie_prices;
};

// Reads the files and aligns them on one calendar. Throws Error when their
// spans differ or no file sets the span.
ScenarioSeries load_scenario(const ScenarioFiles& files);

// Writes available_renewable.csv, load.csv, negative_load.csv and, when
// present, tie_prices.csv. Returns the written paths.
std::vector<std::filesystem::path> save_scenario(const ScenarioSeries& scenario, const std::filesystem::path& dir);

struct ScenarioSource {
  std::string name;
  std::optional<ScenarioFiles> files;
  std::optional<GenerationRecipe> recipe;
};

// Simulation config (JSON):
//   { "grid", "output_dir",
//     "scenario": { "available_renewable", "load", "negative_load", "tie_prices" }
//       | "recipe": <recipe object or path>
//       | "scenarios": [{ "name", "scenario" | "recipe" }],
//     "horizon": { "horizon_hours", "advance_hours" },
//     "analytics": { "curtailment", "congestion", "price_spikes", "deviation", "lmp_cv",
//                    "battery", "spike_percentile", "congestion_rel_tol" },
//     "seed"?, "jobs"? }
// A top-level seed overrides every recipe's seed.
struct RunConfig {
  std::filesystem::path grid;
  std::filesystem::path output_dir;
  std::vector<ScenarioSource> scenarios;
  HorizonConfig horizon;
  AnalyticsOptions analytics;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string config_sha256;  // of the config document bytes
};

// Throws Error on malformed documents and on referenced files that do not
// exist.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           const std::string& source = "<memory>");
RunConfig load_run_config(const std::filesystem::path& path);

struct OutputFile {
  std::string name;
  std::string sha256;
  std::size_t bytes = 0;
};

struct Manifest {
  std::string version;
  std::string config_sha256;
  std::string grid_sha256;
  std::string grid;  // path relative to the output directory
  std::string start;
  std::size_t hours = 0;
  HorizonConfig horizon;
  std::size_t lp_iterations = 0;
  std::vector<OutputFile> files;
};

std::string manifest_to_json(const Manifest& manifest);
Manifest parse_manifest(std::string_view text, const std::string& source = "<memory>");

// Long-form CSVs; columns hour,timestamp,entity,quantity,value and
// hour,timestamp,bus,price_usd_per_mwh.
std::string dispatch_csv(const Grid& grid, const ScenarioSeries& scenario, const DispatchSolution& solution);
std::string lmp_csv(const LmpSeries& lmps);

struct WriteContext {
  std::filesystem::path grid_path;
  std::string grid_sha256;
  std::string config_sha256;
  HorizonConfig horizon;
  std::size_t lp_iterations = 0;
};

// Creates out_dir when needed and writes dispatch.csv, lmp.csv,
// analytics.json, deviation_table.csv, then manifest.json listing them with
// content hashes. Throws Error naming the path on I/O failure.
Manifest write_results(const Grid& grid, const ScenarioSeries& scenario, const DispatchSolution& solution,
                       const LmpSeries& lmps, const AnalyticsReport& report, const std::filesystem::path& out_dir,
                       const WriteContext& context);

struct StoredRun {
  Manifest manifest;
  Grid grid;
  ScenarioSeries scenario;  // load, negative load and availability as written
  DispatchSolution dispatch;
  LmpSeries lmps;
};

// Reads a result directory back; the grid is located through the manifest.
StoredRun read_results(const std::filesystem::path& dir);

struct RunSummary {
  std::string name;
  std::filesystem::path output_dir;
  Manifest manifest;
  double total_cost = 0.0;
  double unmet_mwh = 0.0;
};

// Loads everything the config names, simulates every scenario (in parallel
// up to config.jobs) and writes one result directory per scenario: the
// output_dir itself for a single scenario, output_dir/<name> otherwise.
std::vector<RunSummary> run_simulation(const RunConfig& config);

std::string_view version_string();

}  // namespace gridsim
