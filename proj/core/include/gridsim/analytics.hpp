#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridsim/calendar.hpp"
#include "gridsim/dispatch.hpp"
#include "gridsim/grid.hpp"
#include "gridsim/scenario.hpp"

namespace gridsim {

// Post-run statistics over a DispatchSolution and its LMPs. Statistics that
// are undefined (zero mean, no data) are NaN and serialise as null.

struct ShareStat {
  double curtailed = 0.0;  // MWh
  double available = 0.0;  // MWh
  double fraction = 0.0;   // curtailed / available, 0 when nothing was available
};

struct CurtailmentReport {
  std::map<std::string, ShareStat> by_kind;  // "wind", "solar", "hydro"
  std::map<std::string, ShareStat> by_zone;
  ShareStat total;
  std::map<std::string, double> dispatched_by_kind;  // MWh
  double hours_fraction = 0.0;  // hours whose total curtailment exceeds the tolerance
};

CurtailmentReport curtailment_report(const DispatchSolution& solution, const Grid& grid, double tolerance = 1e-6);

struct CongestionStat {
  double at_lower = 0.0;  // fraction of hours
  double at_upper = 0.0;
  double fraction = 0.0;  // at either bound
};

struct CongestionReport {
  std::map<std::string, CongestionStat> lines;
  std::map<std::string, CongestionStat> interfaces;
};

// A flow is at a bound when |flow - limit| <= max(rel_tol * |limit|, abs_tol).
// The absolute floor covers zero limits.
CongestionReport congestion_frequency(const DispatchSolution& solution, const Grid& grid, double rel_tol = 1e-5,
                                      double abs_tol = 1e-6);

// Nearest rank: the ceil(p * n)-th smallest value (1-based, at least the
// first). Throws Error on an empty sample or p outside (0, 1].
double nearest_rank_percentile(std::span<const double> values, double percentile);

// Hourly load-weighted average LMP over the given buses. Hours with no load
// fall back to the unweighted mean. Buses absent from `load` weigh zero.
std::vector<double> weighted_price(const LmpSeries& lmps, const SeriesMap& load,
                                   const std::vector<std::string>& buses);
std::vector<double> state_price(const LmpSeries& lmps, const SeriesMap& load);

struct SpikeStats {
  double percentile = 0.95;
  double threshold = 0.0;  // $/MWh
  std::size_t hours = 0;
  std::size_t spikes = 0;  // hours strictly above the threshold
  std::map<int, std::size_t> per_year;
};

SpikeStats price_spike_stats(const LmpSeries& lmps, double percentile, const SeriesMap& load);

enum class DeviationLevel { Yearly, Monthly, Daily, Hourly };

std::string_view to_string(DeviationLevel level);
Period period_of(DeviationLevel level);

struct DeviationStats {
  std::size_t periods = 0;
  double mean = 0.0;       // mean of per-period sums
  double upper_pct = 0.0;  // max (x_p - mean) / |mean| * 100
  double lower_pct = 0.0;  // max (mean - x_p) / |mean| * 100
  double max_pct = 0.0;    // larger of the two
  bool defined = true;     // false when the mean is zero
};

// Sums the series per calendar period, then measures the spread of those
// sums around their mean. Throws Error when the series does not cover whole
// periods or its length differs from the calendar.
DeviationStats deviation_from_average(std::span<const double> series, const HourlyCalendar& calendar,
                                      DeviationLevel level);

struct VariabilityStats {
  double mean = 0.0;
  double std_dev = 0.0;  // population
  double cv = 0.0;       // NaN when the mean is zero
};

// Per zone (and "state") coefficient of variation of the load-weighted hourly
// LMP. Zones without buses in the series are skipped.
std::map<std::string, VariabilityStats> lmp_variability(const LmpSeries& lmps, const SeriesMap& load,
                                                        const Grid& grid);

struct BatteryUsage {
  double charged = 0.0;     // MWh drawn from the grid
  double discharged = 0.0;  // MWh delivered to the grid
  double load = 0.0;        // zone load, MWh
  double load_share = 0.0;  // discharged / load
  double full_fraction = 0.0;   // unit-hours with SoC at energy_max
  double empty_fraction = 0.0;  // unit-hours with SoC at energy_min
  double losses = 0.0;          // MWh lost in conversion
};

// Losses count both conversion legs: (1 - sqrt(SE)) of every charged MWh and
// (1 / sqrt(SE) - 1) of every discharged MWh.
std::map<std::string, BatteryUsage> battery_usage(const DispatchSolution& solution, const Grid& grid,
                                                  const SeriesMap& load, double soc_tol = 1e-6);

struct EnergyTotals {
  double total = 0.0;
  std::map<std::string, double> by_zone;
};

EnergyTotals unmet_energy(const DispatchSolution& solution, const Grid& grid);

struct AnalyticsOptions {
  bool curtailment = true;
  bool congestion = true;
  bool price_spikes = true;
  bool deviation = true;
  bool lmp_cv = true;
  bool battery = true;
  double spike_percentile = 0.95;
  double congestion_rel_tol = 1e-5;
  double curtailment_tol = 1e-6;
};

struct AnalyticsReport {
  std::size_t hours = 0;
  double total_cost = 0.0;
  std::optional<CurtailmentReport> curtailment;
  std::optional<CongestionReport> congestion;
  std::optional<SpikeStats> price_spikes;
  // quantity -> level -> stats; levels the run does not cover whole are omitted
  std::map<std::string, std::map<DeviationLevel, DeviationStats>> deviation;
  std::map<std::string, VariabilityStats> lmp_cv;
  std::map<std::string, BatteryUsage> battery_usage;
  EnergyTotals unmet;
  EnergyTotals excess;
};

// Hourly system totals the deviation table is built from: thermal, load,
// storage discharge, imports, exports and dispatched energy per renewable kind.
SeriesMap deviation_quantities(const DispatchSolution& solution, const Grid& grid, const SeriesMap& load);

AnalyticsReport analyze(const Grid& grid, const ScenarioSeries& scenario, const DispatchSolution& solution,
                        const LmpSeries& lmps, const AnalyticsOptions& options = {});

// Stable key order and shortest round-trip numbers.
std::string report_to_json(const AnalyticsReport& report);

// One row per quantity and level: mean and upper/lower max deviation in %.
std::string deviation_table_csv(const AnalyticsReport& report);

}  // namespace gridsim
