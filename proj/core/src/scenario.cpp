#include "gridsim/scenario.hpp"

#include <cmath>

#include "gridsim/error.hpp"

namespace gridsim {

namespace {

SeriesMap slice_map(const SeriesMap& in, std::size_t begin, std::size_t count) {
  SeriesMap out;
  for (const auto& [id, values] : in) {
    if (begin + count > values.size()) throw Error("series '" + id + "' shorter than requested slice");
    out.emplace(id, std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(begin),
                                        values.begin() + static_cast<std::ptrdiff_t>(begin + count)));
  }
  return out;
}

}  // namespace

ScenarioSeries ScenarioSeries::slice(std::size_t begin, std::size_t count) const {
  ScenarioSeries out;
  out.calendar = calendar.slice(begin, count);
  out.available_renewable = slice_map(available_renewable, begin, count);
  out.load = slice_map(load, begin, count);
  out.negative_load = slice_map(negative_load, begin, count);
  out.tie_prices = slice_map(tie_prices, begin, count);
  return out;
}

std::vector<std::string> ScenarioSeries::check(const Grid& grid) const {
  std::vector<std::string> issues;
  const auto buses = bus_index(grid);
  std::map<std::string, const RenewableUnit*> units;
  for (const auto& unit : grid.renewable_units) units.emplace(unit.id, &unit);
  std::map<std::string, bool> ties;
  for (const auto& tie : grid.external_ties) ties.emplace(tie.id, true);

  const auto n = hours();
  auto check_values = [&](const std::string& label, const std::vector<double>& values, bool non_negative) {
    if (values.size() != n) {
      issues.push_back(label + ": length " + std::to_string(values.size()) + " != " + std::to_string(n) + " hours");
      return;
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (!std::isfinite(values[t])) {
        issues.push_back(label + ": non-finite value at hour " + std::to_string(t));
        return;
      }
      if (non_negative && values[t] < 0.0) {
        issues.push_back(label + ": negative value at hour " + std::to_string(t));
        return;
      }
    }
  };

  for (const auto& [id, values] : available_renewable) {
    auto it = units.find(id);
    if (it == units.end()) {
      issues.push_back("available_renewable: unknown unit '" + id + "'");
      continue;
    }
    if (!it->second->dispatchable)
      issues.push_back("available_renewable: unit '" + id + "' is not dispatchable (belongs in negative_load)");
    check_values("available_renewable '" + id + "'", values, true);
    const double cap = it->second->capacity;
    for (std::size_t t = 0; t < values.size(); ++t) {
      if (values[t] > cap * (1.0 + 1e-9)) {
        issues.push_back("available_renewable '" + id + "': " + std::to_string(values[t]) + " MW exceeds capacity " +
                         std::to_string(cap) + " at hour " + std::to_string(t));
        break;
      }
    }
  }
  for (const auto& [id, values] : load) {
    if (!buses.contains(id)) issues.push_back("load: unknown bus '" + id + "'");
    check_values("load '" + id + "'", values, true);
  }
  for (const auto& [id, values] : negative_load) {
    if (!buses.contains(id)) issues.push_back("negative_load: unknown bus '" + id + "'");
    check_values("negative_load '" + id + "'", values, true);
  }
  for (const auto& [id, values] : tie_prices) {
    if (!ties.contains(id)) issues.push_back("tie_prices: unknown tie '" + id + "'");
    check_values("tie_prices '" + id + "'", values, false);
  }
  return issues;
}

}  // namespace gridsim
