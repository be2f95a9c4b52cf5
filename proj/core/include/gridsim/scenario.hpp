#pragma once

#include <map>
#include <string>
#include <vector>

#include "gridsim/calendar.hpp"
#include "gridsim/grid.hpp"

namespace gridsim {

using SeriesMap = std::map<std::string, std::vector<double>>;

// Hourly exogenous data for one simulation span. Entities absent from a map
// contribute zero (or, for tie prices, fall back to the tie's fixed prices).
struct ScenarioSeries {
  HourlyCalendar calendar;
  SeriesMap available_renewable;  // dispatchable renewable unit id -> MW
  SeriesMap load;                 // bus id -> MW
  SeriesMap negative_load;        // bus id -> MW (distributed PV, small hydro)
  SeriesMap tie_prices;           // external tie id -> $/MWh for import and export

  std::size_t hours() const noexcept { return calendar.size(); }

  ScenarioSeries slice(std::size_t begin, std::size_t count) const;

  // Invariant violations against a grid: unknown ids, misaligned lengths,
  // availability outside [0, capacity], negative load, non-finite values.
  std::vector<std::string> check(const Grid& grid) const;
};

}  // namespace gridsim
