#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "gridsim/calendar.hpp"
#include "gridsim/grid.hpp"
#include "gridsim/lp.hpp"
#include "gridsim/scenario.hpp"

namespace gridsim {

struct HorizonConfig {
  std::size_t horizon_hours = 24;
  std::size_t advance_hours = 24;  // the first advance_hours of each window are committed

  // Throws Error unless 1 <= advance_hours <= horizon_hours.
  void check() const;
};

struct SystemState {
  std::map<std::string, double> storage_soc;    // MWh by storage id
  std::map<std::string, double> prev_dispatch;  // MW by thermal id; absent ids are not ramp-coupled
};

// SoC from each unit's initial_soc clamped into [energy_min, energy_max]; no
// previous dispatch.
SystemState initial_state(const Grid& grid);

// Variable and row positions of one window LP. Per-entity blocks are laid out
// entity-major: index(entity, hour) = entity * hours + hour.
struct IndexMap {
  std::size_t hours = 0;
  HourlyCalendar calendar;

  std::vector<std::size_t> thermal;      // p
  std::vector<std::size_t> curtailment;  // dispatchable renewables, grid order
  std::vector<std::size_t> flow;
  std::vector<std::size_t> angle;
  std::vector<std::size_t> unmet;
  std::vector<std::size_t> excess;  // over-generation spill per bus
  std::vector<std::size_t> charge;  // psc <= 0
  std::vector<std::size_t> discharge;
  std::vector<std::size_t> net_storage;
  std::vector<std::size_t> soc;  // end-of-hour
  std::vector<std::size_t> imports;
  std::vector<std::size_t> exports;

  std::vector<std::size_t> balance_row;  // per (bus, hour)
  std::vector<std::size_t> flow_row;
  std::vector<std::size_t> storage_row;

  std::vector<std::size_t> renewable_units;  // grid positions of dispatchable renewables
  std::vector<double> available;             // P-bar per (dispatchable renewable, hour)
  std::vector<double> net_demand;            // load - negative load per (bus, hour)

  std::size_t at(const std::vector<std::size_t>& block, std::size_t entity, std::size_t hour) const {
    return block[entity * hours + hour];
  }
};

struct WindowModel {
  LinearProgram lp;
  IndexMap index;
};

// One horizon window as an LP. The window may be shorter than
// cfg.horizon_hours (the tail of a run). Throws Error on length mismatches,
// unknown ids or availability above capacity.
WindowModel build_opf(const Grid& grid, const ScenarioSeries& window, const SystemState& state,
                      const HorizonConfig& cfg = {});

// Entity-by-hour matrices; rows follow the grid's element order.
struct DispatchSolution {
  HourlyCalendar calendar;

  std::vector<std::vector<double>> thermal;
  std::vector<std::string> renewable_ids;  // dispatchable units only
  std::vector<std::vector<double>> available;
  std::vector<std::vector<double>> curtailment;
  std::vector<std::vector<double>> dispatched_renewable;
  std::vector<std::vector<double>> flow;
  std::vector<std::vector<double>> angle;
  std::vector<std::vector<double>> charge;
  std::vector<std::vector<double>> discharge;
  std::vector<std::vector<double>> net_storage;
  std::vector<std::vector<double>> soc;  // end of hour
  std::vector<double> initial_soc;       // per storage unit, before the first hour
  std::vector<std::vector<double>> unmet;
  std::vector<std::vector<double>> excess;
  std::vector<std::vector<double>> imports;
  std::vector<std::vector<double>> exports;

  std::vector<double> hourly_cost;        // every objective term attributed to its hour
  std::vector<double> window_objectives;  // full LP objective per solved window
  std::vector<std::size_t> window_starts;

  std::size_t hours() const noexcept { return calendar.size(); }
  double total_cost() const;

  // Keeps hours [begin, begin + count) of every matrix.
  DispatchSolution slice(std::size_t begin, std::size_t count) const;
  // Appends another span; calendars must be contiguous.
  void append(const DispatchSolution& next);
};

struct LmpSeries {
  HourlyCalendar calendar;
  std::vector<std::string> bus_ids;
  std::vector<std::vector<double>> price;  // $/MWh, [bus][hour]

  LmpSeries slice(std::size_t begin, std::size_t count) const;
  void append(const LmpSeries& next);
};

// Throws Error naming the window start when the status is not Optimal.
DispatchSolution extract_solution(const Grid& grid, const LinearProgram& lp, const LpSolution& solution,
                                  const IndexMap& index);
LmpSeries extract_lmps(const Grid& grid, const LpSolution& solution, const IndexMap& index);

struct SimulationResult {
  DispatchSolution dispatch;
  LmpSeries lmps;
  SystemState final_state;
  std::size_t lp_iterations = 0;
};

// Rolling horizon: solve, commit the first advance_hours, carry SoC and the
// last committed dispatch forward, repeat. The final window is clamped to the
// hours that remain.
SimulationResult simulate(const Grid& grid, const ScenarioSeries& scenario, const HorizonConfig& cfg,
                          const SystemState& initial, const SolveOptions& solve = {});

// Independent runs over a shared grid on up to `jobs` threads (0 = hardware
// concurrency). Results keep the input order; the first failure is rethrown
// after all workers finish.
std::vector<SimulationResult> simulate_batch(const Grid& grid, const std::vector<ScenarioSeries>& scenarios,
                                             const HorizonConfig& cfg, const SystemState& initial,
                                             std::size_t jobs = 0, const SolveOptions& solve = {});

}  // namespace gridsim
