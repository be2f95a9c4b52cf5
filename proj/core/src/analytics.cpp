#include "gridsim/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "gridsim/error.hpp"
#include "gridsim/io.hpp"

namespace gridsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::map<std::string, std::string> bus_zones(const Grid& grid) {
  std::map<std::string, std::string> out;
  for (const auto& b : grid.buses) out[b.id] = b.zone;
  return out;
}

double fraction(double part, double whole) { return whole > 0.0 ? std::clamp(part / whole, 0.0, 1.0) : 0.0; }

double series_value(const SeriesMap& m, const std::string& id, std::size_t t) {
  auto it = m.find(id);
  return it == m.end() ? 0.0 : it->second.at(t);
}

void require_hours(const DispatchSolution& solution, const Grid& grid) {
  if (solution.thermal.size() != grid.thermal_generators.size() || solution.flow.size() != grid.lines.size() ||
      solution.charge.size() != grid.storage_units.size() || solution.unmet.size() != grid.buses.size())
    throw Error("solution does not match the grid's element counts");
}

EnergyTotals bus_totals(const std::vector<std::vector<double>>& per_bus, const Grid& grid) {
  EnergyTotals out;
  for (const auto& b : grid.buses) out.by_zone.try_emplace(b.zone, 0.0);
  for (std::size_t b = 0; b < grid.buses.size(); ++b) {
    const double sum = std::accumulate(per_bus[b].begin(), per_bus[b].end(), 0.0);
    out.by_zone[grid.buses[b].zone] += sum;
    out.total += sum;
  }
  return out;
}

VariabilityStats variability(const std::vector<double>& x) {
  VariabilityStats s;
  if (x.empty()) return {kNaN, kNaN, kNaN};
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(ss / static_cast<double>(x.size()));
  s.cv = s.mean != 0.0 ? s.std_dev / std::abs(s.mean) : kNaN;
  return s;
}

}  // namespace

CurtailmentReport curtailment_report(const DispatchSolution& solution, const Grid& grid, double tolerance) {
  const auto zone_of = bus_zones(grid);
  std::map<std::string, const RenewableUnit*> units;
  for (const auto& u : grid.renewable_units) units[u.id] = &u;

  CurtailmentReport out;
  std::vector<double> hourly(solution.hours(), 0.0);
  for (std::size_t r = 0; r < solution.renewable_ids.size(); ++r) {
    auto it = units.find(solution.renewable_ids[r]);
    if (it == units.end()) throw Error("solution names unknown renewable unit '" + solution.renewable_ids[r] + "'");
    const std::string kind(to_string(it->second->kind));
    const auto& zone = zone_of.at(it->second->bus_id);
    auto& k = out.by_kind[kind];
    auto& z = out.by_zone[zone];
    double& dispatched = out.dispatched_by_kind[kind];
    for (std::size_t t = 0; t < solution.hours(); ++t) {
      const double c = solution.curtailment[r][t];
      const double a = solution.available[r][t];
      k.curtailed += c;
      k.available += a;
      z.curtailed += c;
      z.available += a;
      out.total.curtailed += c;
      out.total.available += a;
      dispatched += solution.dispatched_renewable[r][t];
      hourly[t] += c;
    }
  }
  for (auto* m : {&out.by_kind, &out.by_zone})
    for (auto& [key, s] : *m) s.fraction = fraction(s.curtailed, s.available);
  out.total.fraction = fraction(out.total.curtailed, out.total.available);
  const auto curtailed_hours = std::count_if(hourly.begin(), hourly.end(), [&](double c) { return c > tolerance; });
  out.hours_fraction = solution.hours() ? static_cast<double>(curtailed_hours) / static_cast<double>(solution.hours())
                                        : 0.0;
  return out;
}

CongestionReport congestion_frequency(const DispatchSolution& solution, const Grid& grid, double rel_tol,
                                      double abs_tol) {
  require_hours(solution, grid);
  const std::size_t T = solution.hours();
  auto tally = [&](const std::vector<double>& flow, double lo, double hi) {
    CongestionStat s;
    if (T == 0) return s;
    std::size_t n_lo = 0, n_hi = 0, n_any = 0;
    for (double f : flow) {
      const bool at_lo = std::isfinite(lo) && std::abs(f - lo) <= std::max(rel_tol * std::abs(lo), abs_tol);
      const bool at_hi = std::isfinite(hi) && std::abs(f - hi) <= std::max(rel_tol * std::abs(hi), abs_tol);
      n_lo += at_lo;
      n_hi += at_hi;
      n_any += at_lo || at_hi;
    }
    const double n = static_cast<double>(T);
    s.at_lower = static_cast<double>(n_lo) / n;
    s.at_upper = static_cast<double>(n_hi) / n;
    s.fraction = static_cast<double>(n_any) / n;
    return s;
  };

  CongestionReport out;
  const auto lines = line_index(grid);
  for (std::size_t l = 0; l < grid.lines.size(); ++l)
    out.lines[grid.lines[l].id] = tally(solution.flow[l], grid.lines[l].flow_min, grid.lines[l].flow_max);
  for (const auto& itf : grid.interfaces) {
    std::vector<double> flow(T, 0.0);
    for (const auto& m : itf.members) {
      const auto& f = solution.flow[lines.at(m.line_id)];
      for (std::size_t t = 0; t < T; ++t) flow[t] += m.direction * f[t];
    }
    out.interfaces[itf.id] = tally(flow, itf.flow_min, itf.flow_max);
  }
  return out;
}

double nearest_rank_percentile(std::span<const double> values, double percentile) {
  if (values.empty()) throw Error("percentile of an empty sample");
  if (!(percentile > 0.0 && percentile <= 1.0)) throw Error("percentile must lie in (0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  // Guard against p * n landing a rounding step above an integer.
  const double exact = percentile * static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::vector<double> weighted_price(const LmpSeries& lmps, const SeriesMap& load, const std::vector<std::string>& buses) {
  std::map<std::string, std::size_t> row;
  for (std::size_t b = 0; b < lmps.bus_ids.size(); ++b) row[lmps.bus_ids[b]] = b;
  const std::size_t T = lmps.calendar.size();
  std::vector<double> out(T, kNaN);
  for (std::size_t t = 0; t < T; ++t) {
    double weighted = 0.0, weight = 0.0, plain = 0.0;
    std::size_t count = 0;
    for (const auto& id : buses) {
      auto it = row.find(id);
      if (it == row.end()) continue;
      const double p = lmps.price[it->second][t];
      const double w = series_value(load, id, t);
      weighted += w * p;
      weight += w;
      plain += p;
      ++count;
    }
    if (weight > 0.0) out[t] = weighted / weight;
    else if (count > 0) out[t] = plain / static_cast<double>(count);
  }
  return out;
}

std::vector<double> state_price(const LmpSeries& lmps, const SeriesMap& load) {
  return weighted_price(lmps, load, lmps.bus_ids);
}

SpikeStats price_spike_stats(const LmpSeries& lmps, double percentile, const SeriesMap& load) {
  const auto price = state_price(lmps, load);
  SpikeStats s;
  s.percentile = percentile;
  s.hours = price.size();
  s.threshold = nearest_rank_percentile(price, percentile);
  for (std::size_t t = 0; t < price.size(); ++t) {
    auto& n = s.per_year[lmps.calendar.year(t)];
    if (price[t] > s.threshold) {
      ++n;
      ++s.spikes;
    }
  }
  return s;
}

std::string_view to_string(DeviationLevel level) {
  switch (level) {
    case DeviationLevel::Yearly: return "yearly";
    case DeviationLevel::Monthly: return "monthly";
    case DeviationLevel::Daily: return "daily";
    case DeviationLevel::Hourly: return "hourly";
  }
  return "?";
}

Period period_of(DeviationLevel level) {
  switch (level) {
    case DeviationLevel::Yearly: return Period::Year;
    case DeviationLevel::Monthly: return Period::Month;
    case DeviationLevel::Daily: return Period::Day;
    case DeviationLevel::Hourly: return Period::Hour;
  }
  return Period::Hour;
}

DeviationStats deviation_from_average(std::span<const double> series, const HourlyCalendar& calendar,
                                      DeviationLevel level) {
  if (series.size() != calendar.size())
    throw Error("series has " + std::to_string(series.size()) + " hours, calendar " + std::to_string(calendar.size()));
  if (series.empty()) throw Error("deviation of an empty series");
  const Period period = period_of(level);
  if (!calendar.covers_whole_periods(period))
    throw Error("series does not cover whole " + std::string(to_string(level)) + " periods");

  std::vector<double> sums;
  for (const auto& [begin, end] : calendar.periods(period))
    sums.push_back(std::accumulate(series.begin() + static_cast<std::ptrdiff_t>(begin),
                                   series.begin() + static_cast<std::ptrdiff_t>(end), 0.0));
  DeviationStats s;
  s.periods = sums.size();
  s.mean = std::accumulate(sums.begin(), sums.end(), 0.0) / static_cast<double>(sums.size());
  if (s.mean == 0.0) {
    s.defined = false;
    s.upper_pct = s.lower_pct = s.max_pct = kNaN;
    return s;
  }
  const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
  s.upper_pct = std::max(0.0, (*hi - s.mean) / std::abs(s.mean) * 100.0);
  s.lower_pct = std::max(0.0, (s.mean - *lo) / std::abs(s.mean) * 100.0);
  s.max_pct = std::max(s.upper_pct, s.lower_pct);
  return s;
}

std::map<std::string, VariabilityStats> lmp_variability(const LmpSeries& lmps, const SeriesMap& load,
                                                        const Grid& grid) {
  std::map<std::string, std::vector<std::string>> zone_buses;
  const auto zone_of = bus_zones(grid);
  for (const auto& id : lmps.bus_ids) {
    auto it = zone_of.find(id);
    if (it != zone_of.end()) zone_buses[it->second].push_back(id);
  }
  std::map<std::string, VariabilityStats> out;
  for (const auto& [zone, buses] : zone_buses) out[zone] = variability(weighted_price(lmps, load, buses));
  out["state"] = variability(state_price(lmps, load));
  return out;
}

std::map<std::string, BatteryUsage> battery_usage(const DispatchSolution& solution, const Grid& grid,
                                                  const SeriesMap& load, double soc_tol) {
  require_hours(solution, grid);
  const auto zone_of = bus_zones(grid);
  std::map<std::string, BatteryUsage> out;
  std::map<std::string, std::size_t> unit_hours;
  for (std::size_t k = 0; k < grid.storage_units.size(); ++k) {
    const auto& unit = grid.storage_units[k];
    const auto& zone = zone_of.at(unit.bus_id);
    auto& u = out[zone];
    const double root = std::sqrt(unit.round_trip_efficiency);
    for (std::size_t t = 0; t < solution.hours(); ++t) {
      const double charged = -solution.charge[k][t];
      const double discharged = solution.discharge[k][t];
      u.charged += charged;
      u.discharged += discharged;
      u.losses += (1.0 - root) * charged + (1.0 / root - 1.0) * discharged;
      const double soc = solution.soc[k][t];
      const double tol = soc_tol * std::max(1.0, unit.energy_max);
      u.full_fraction += soc >= unit.energy_max - tol ? 1.0 : 0.0;
      u.empty_fraction += soc <= unit.energy_min + tol ? 1.0 : 0.0;
    }
    unit_hours[zone] += solution.hours();
  }
  for (auto& [zone, u] : out) {
    for (std::size_t b = 0; b < grid.buses.size(); ++b)
      if (grid.buses[b].zone == zone)
        if (auto it = load.find(grid.buses[b].id); it != load.end())
          u.load += std::accumulate(it->second.begin(), it->second.end(), 0.0);
    u.load_share = u.load > 0.0 ? u.discharged / u.load : 0.0;
    const double n = static_cast<double>(unit_hours[zone]);
    u.full_fraction = n > 0.0 ? u.full_fraction / n : 0.0;
    u.empty_fraction = n > 0.0 ? u.empty_fraction / n : 0.0;
  }
  return out;
}

EnergyTotals unmet_energy(const DispatchSolution& solution, const Grid& grid) {
  require_hours(solution, grid);
  return bus_totals(solution.unmet, grid);
}

SeriesMap deviation_quantities(const DispatchSolution& solution, const Grid& grid, const SeriesMap& load) {
  const std::size_t T = solution.hours();
  SeriesMap out;
  auto sum_into = [&](const std::string& name, const std::vector<std::vector<double>>& rows, double sign) {
    auto& dst = out[name];
    dst.assign(T, 0.0);
    for (const auto& row : rows)
      for (std::size_t t = 0; t < T; ++t) dst[t] += sign * row[t];
  };
  sum_into("thermal", solution.thermal, 1.0);
  sum_into("storage_discharge", solution.discharge, 1.0);
  sum_into("imports", solution.imports, 1.0);
  sum_into("exports", solution.exports, 1.0);
  auto& total_load = out["load"];
  total_load.assign(T, 0.0);
  for (const auto& [bus, series] : load)
    for (std::size_t t = 0; t < T; ++t) total_load[t] += series.at(t);

  std::map<std::string, RenewableKind> kind_of;
  for (const auto& u : grid.renewable_units) kind_of[u.id] = u.kind;
  for (std::size_t r = 0; r < solution.renewable_ids.size(); ++r) {
    auto& dst = out[std::string(to_string(kind_of.at(solution.renewable_ids[r])))];
    dst.resize(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) dst[t] += solution.dispatched_renewable[r][t];
  }
  return out;
}

AnalyticsReport analyze(const Grid& grid, const ScenarioSeries& scenario, const DispatchSolution& solution,
                        const LmpSeries& lmps, const AnalyticsOptions& options) {
  if (!(solution.calendar == scenario.calendar) || !(lmps.calendar == solution.calendar))
    throw Error("solution, LMPs and scenario must span the same hours");
  require_hours(solution, grid);

  AnalyticsReport r;
  r.hours = solution.hours();
  r.total_cost = solution.total_cost();
  if (options.curtailment) r.curtailment = curtailment_report(solution, grid, options.curtailment_tol);
  if (options.congestion) r.congestion = congestion_frequency(solution, grid, options.congestion_rel_tol);
  if (options.price_spikes && r.hours > 0)
    r.price_spikes = price_spike_stats(lmps, options.spike_percentile, scenario.load);
  if (options.deviation && r.hours > 0) {
    for (const auto& [name, series] : deviation_quantities(solution, grid, scenario.load))
      for (auto level : {DeviationLevel::Yearly, DeviationLevel::Monthly, DeviationLevel::Daily, DeviationLevel::Hourly})
        if (solution.calendar.covers_whole_periods(period_of(level)))
          r.deviation[name][level] = deviation_from_average(series, solution.calendar, level);
  }
  if (options.lmp_cv && r.hours > 0) r.lmp_cv = lmp_variability(lmps, scenario.load, grid);
  if (options.battery) r.battery_usage = battery_usage(solution, grid, scenario.load);
  r.unmet = unmet_energy(solution, grid);
  r.excess = bus_totals(solution.excess, grid);
  return r;
}

namespace {

using ordered_json = nlohmann::ordered_json;

// NaN becomes null; -0 becomes 0 so reruns stay byte-identical.
ordered_json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v == 0.0 ? 0.0 : v;
}

ordered_json share_json(const ShareStat& s) {
  return {{"curtailed_mwh", num(s.curtailed)}, {"available_mwh", num(s.available)}, {"fraction", num(s.fraction)}};
}

ordered_json congestion_json(const std::map<std::string, CongestionStat>& m) {
  ordered_json o = ordered_json::object();
  for (const auto& [id, s] : m)
    o[id] = {{"fraction", num(s.fraction)}, {"at_lower", num(s.at_lower)}, {"at_upper", num(s.at_upper)}};
  return o;
}

ordered_json totals_json(const EnergyTotals& e) {
  ordered_json zones = ordered_json::object();
  for (const auto& [z, v] : e.by_zone) zones[z] = num(v);
  return {{"total_mwh", num(e.total)}, {"by_zone_mwh", zones}};
}

}  // namespace

std::string report_to_json(const AnalyticsReport& r) {
  ordered_json doc;
  doc["hours"] = r.hours;
  doc["total_cost_usd"] = num(r.total_cost);
  if (r.curtailment) {
    const auto& c = *r.curtailment;
    ordered_json kinds = ordered_json::object(), zones = ordered_json::object(), dispatched = ordered_json::object();
    for (const auto& [k, s] : c.by_kind) kinds[k] = share_json(s);
    for (const auto& [z, s] : c.by_zone) zones[z] = share_json(s);
    for (const auto& [k, v] : c.dispatched_by_kind) dispatched[k] = num(v);
    doc["curtailment"] = {{"total", share_json(c.total)},
                          {"by_kind", kinds},
                          {"by_zone", zones},
                          {"dispatched_by_kind_mwh", dispatched},
                          {"curtailment_hours_fraction", num(c.hours_fraction)}};
  }
  if (r.congestion)
    doc["congestion"] = {{"interfaces", congestion_json(r.congestion->interfaces)},
                         {"lines", congestion_json(r.congestion->lines)}};
  if (r.price_spikes) {
    const auto& s = *r.price_spikes;
    ordered_json years = ordered_json::object();
    for (const auto& [y, n] : s.per_year) years[std::to_string(y)] = n;
    doc["price_spikes"] = {{"percentile", num(s.percentile)},
                           {"threshold_usd_per_mwh", num(s.threshold)},
                           {"hours", s.hours},
                           {"spikes", s.spikes},
                           {"per_year", years}};
  }
  if (!r.deviation.empty()) {
    ordered_json dev = ordered_json::object();
    for (const auto& [name, levels] : r.deviation) {
      ordered_json q = ordered_json::object();
      for (const auto& [level, s] : levels)
        q[std::string(to_string(level))] = {{"periods", s.periods},
                                            {"mean_mwh", num(s.mean)},
                                            {"upper_pct", num(s.upper_pct)},
                                            {"lower_pct", num(s.lower_pct)},
                                            {"max_pct", num(s.max_pct)},
                                            {"defined", s.defined}};
      dev[name] = q;
    }
    doc["deviation"] = dev;
  }
  if (!r.lmp_cv.empty()) {
    ordered_json cv = ordered_json::object();
    for (const auto& [zone, s] : r.lmp_cv)
      cv[zone] = {{"mean_usd_per_mwh", num(s.mean)}, {"std_usd_per_mwh", num(s.std_dev)}, {"cv", num(s.cv)}};
    doc["lmp_cv"] = cv;
  }
  if (!r.battery_usage.empty()) {
    ordered_json bat = ordered_json::object();
    for (const auto& [zone, u] : r.battery_usage)
      bat[zone] = {{"charged_mwh", num(u.charged)},       {"discharged_mwh", num(u.discharged)},
                   {"load_mwh", num(u.load)},             {"load_share", num(u.load_share)},
                   {"full_fraction", num(u.full_fraction)}, {"empty_fraction", num(u.empty_fraction)},
                   {"losses_mwh", num(u.losses)}};
    doc["battery_usage"] = bat;
  }
  doc["unmet_energy"] = totals_json(r.unmet);
  doc["excess_energy"] = totals_json(r.excess);
  return doc.dump(2) + "\n";
}

std::string deviation_table_csv(const AnalyticsReport& r) {
  std::ostringstream out;
  out << "quantity,level,periods,mean_mwh,upper_pct,lower_pct,max_pct\n";
  for (const auto& [name, levels] : r.deviation)
    for (const auto& [level, s] : levels)
      out << name << ',' << to_string(level) << ',' << s.periods << ',' << format_number(s.mean) << ','
          << format_number(s.upper_pct) << ',' << format_number(s.lower_pct) << ',' << format_number(s.max_pct)
          << '\n';
  return out.str();
}

}  // namespace gridsim
