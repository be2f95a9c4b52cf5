#include "gridsim/scenario_gen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gridsim/error.hpp"

namespace gridsim {

PowerCurve PowerCurve::standard(double cut_in, double rated, double cut_out) {
  PowerCurve curve;
  curve.cut_in = cut_in;
  curve.rated = rated;
  curve.cut_out = cut_out;
  const double denom = rated * rated * rated - cut_in * cut_in * cut_in;
  for (double v = cut_in; v < rated; v += 1.0)
    curve.points.push_back({v, (v * v * v - cut_in * cut_in * cut_in) / denom});
  curve.points.push_back({rated, 1.0});
  return curve;
}

std::vector<std::string> PowerCurve::problems() const {
  std::vector<std::string> out;
  if (!(cut_in >= 0.0 && cut_in < rated && rated < cut_out)) out.push_back("requires 0 <= cut_in < rated < cut_out");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.power < 0.0 || p.power > 1.0) out.push_back("breakpoint power outside [0, 1]");
    if (p.speed < cut_in || p.speed > rated) out.push_back("breakpoint speed outside [cut_in, rated]");
    if (i > 0) {
      if (p.speed <= points[i - 1].speed) out.push_back("breakpoint speeds must be strictly increasing");
      if (p.power < points[i - 1].power) out.push_back("power must be non-decreasing up to rated speed");
    }
  }
  return out;
}

double extrapolate_wind_speed(double v_ref, double h_ref, double h_target, double alpha) {
  if (v_ref < 0.0 || std::isnan(v_ref)) throw Error("wind speed must be non-negative");
  if (!(h_ref > 0.0) || !(h_target > 0.0)) throw Error("heights must be positive");
  return v_ref * std::pow(h_target / h_ref, alpha);
}

double wind_power(double speed, const PowerCurve& curve, double capacity) {
  if (!(speed >= curve.cut_in) || speed >= curve.cut_out) return 0.0;
  if (speed >= curve.rated) return capacity;

  // Implicit endpoints (cut_in, 0) and (rated, 1) around the breakpoints.
  double lo_speed = curve.cut_in, lo_power = 0.0;
  double hi_speed = curve.rated, hi_power = 1.0;
  for (const auto& p : curve.points) {
    if (p.speed <= speed) {
      lo_speed = p.speed;
      lo_power = p.power;
    } else {
      hi_speed = p.speed;
      hi_power = p.power;
      break;
    }
  }
  if (hi_speed <= lo_speed) return capacity * lo_power;
  const double w = (speed - lo_speed) / (hi_speed - lo_speed);
  return capacity * std::clamp(lo_power + w * (hi_power - lo_power), 0.0, 1.0);
}

namespace {

int group_key(const HourlyCalendar& cal, std::size_t t, BiasGrouping grouping) {
  const int month = static_cast<int>(cal.month(t));
  return grouping == BiasGrouping::Month ? month : month * 24 + static_cast<int>(cal.hour_of_day(t));
}

std::string describe_group(int key, BiasGrouping grouping) {
  if (grouping == BiasGrouping::Month) return "(month " + std::to_string(key) + ")";
  return "(month " + std::to_string(key / 24) + ", hour " + std::to_string(key % 24) + ")";
}

}  // namespace

BiasCoefficients stability_coefficients(const HourlySeries& raw, const HourlySeries& reference,
                                        BiasGrouping grouping) {
  if (raw.values.size() != raw.calendar.size() || reference.values.size() != reference.calendar.size())
    throw Error("bias correction: series length does not match its calendar");

  struct Sums {
    double raw = 0.0;
    double ref = 0.0;
    std::size_t count = 0;
  };
  std::map<int, Sums> groups;
  std::set<int> raw_groups;
  const auto ref_start = reference.calendar.start();
  for (std::size_t t = 0; t < raw.values.size(); ++t) {
    const int key = group_key(raw.calendar, t, grouping);
    raw_groups.insert(key);
    const auto offset = std::chrono::duration_cast<std::chrono::hours>(raw.calendar.at(t) - ref_start).count();
    if (offset < 0 || static_cast<std::size_t>(offset) >= reference.values.size()) continue;
    auto& g = groups[key];
    g.raw += raw.values[t];
    g.ref += reference.values[static_cast<std::size_t>(offset)];
    ++g.count;
  }

  BiasCoefficients out;
  out.grouping = grouping;
  for (int key : raw_groups) {
    auto it = groups.find(key);
    if (it == groups.end() || it->second.count == 0)
      throw Error("bias correction: no overlapping samples for group " + describe_group(key, grouping));
    if (it->second.raw == 0.0) throw Error("bias correction: zero raw mean in group " + describe_group(key, grouping));
    // Ratio of sums equals ratio of means over the same sample count.
    out.factor[key] = it->second.ref / it->second.raw;
  }
  return out;
}

std::vector<double> apply_coefficients(const HourlySeries& raw, const BiasCoefficients& coefficients) {
  std::vector<double> out(raw.values.size());
  for (std::size_t t = 0; t < raw.values.size(); ++t) {
    const int key = group_key(raw.calendar, t, coefficients.grouping);
    auto it = coefficients.factor.find(key);
    if (it == coefficients.factor.end())
      throw Error("bias correction: no coefficient for group " + describe_group(key, coefficients.grouping));
    out[t] = raw.values[t] * it->second;
  }
  return out;
}

std::vector<double> stability_bias_correct(const HourlySeries& raw, const HourlySeries& reference,
                                           BiasGrouping grouping) {
  return apply_coefficients(raw, stability_coefficients(raw, reference, grouping));
}

std::vector<double> default_quantile_levels() {
  std::vector<double> levels(201);
  for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = static_cast<double>(i) / 200.0;
  return levels;
}

double sample_quantile(std::vector<double> sorted_values, double level) {
  if (sorted_values.empty()) throw Error("quantile of an empty sample");
  if (!std::is_sorted(sorted_values.begin(), sorted_values.end()))
    std::sort(sorted_values.begin(), sorted_values.end());
  const double h = static_cast<double>(sorted_values.size() - 1) * std::clamp(level, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted_values.size() - 1);
  return sorted_values[lo] + (h - static_cast<double>(lo)) * (sorted_values[hi] - sorted_values[lo]);
}

std::vector<double> quantile_map(std::span<const double> pred_train, std::span<const double> obs_train,
                                 std::span<const double> pred_apply, std::span<const double> levels) {
  if (pred_train.empty() || obs_train.empty()) throw Error("quantile_map: empty training series");
  if (levels.size() < 2) throw Error("quantile_map: need at least two quantile levels");
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (levels[j] < 0.0 || levels[j] > 1.0) throw Error("quantile_map: levels must lie in [0, 1]");
    if (j > 0 && levels[j] <= levels[j - 1]) throw Error("quantile_map: levels must be strictly increasing");
  }

  std::vector<double> pred_sorted(pred_train.begin(), pred_train.end());
  std::vector<double> obs_sorted(obs_train.begin(), obs_train.end());
  std::sort(pred_sorted.begin(), pred_sorted.end());
  std::sort(obs_sorted.begin(), obs_sorted.end());

  const std::size_t J = levels.size();
  std::vector<double> q_pred(J), q_obs(J);
  for (std::size_t j = 0; j < J; ++j) {
    q_pred[j] = sample_quantile(pred_sorted, levels[j]);
    q_obs[j] = sample_quantile(obs_sorted, levels[j]);
  }

  auto level_of = [&](double v) {
    const auto a = static_cast<std::size_t>(std::lower_bound(q_pred.begin(), q_pred.end(), v) - q_pred.begin());
    const auto b = static_cast<std::size_t>(std::upper_bound(q_pred.begin(), q_pred.end(), v) - q_pred.begin());
    if (a < b) return 0.5 * (levels[a] + levels[b - 1]);  // v sits on a (possibly flat) run of grid values
    if (a == 0) return levels.front();
    if (a == J) return levels.back();
    const double w = (v - q_pred[a - 1]) / (q_pred[a] - q_pred[a - 1]);
    return levels[a - 1] + w * (levels[a] - levels[a - 1]);
  };

  auto observed_at = [&](double tau) {
    const auto it = std::upper_bound(levels.begin(), levels.end(), tau);
    if (it == levels.begin()) return q_obs.front();
    if (it == levels.end()) return q_obs.back();
    const auto j = static_cast<std::size_t>(it - levels.begin());
    const double w = (tau - levels[j - 1]) / (levels[j] - levels[j - 1]);
    return q_obs[j - 1] + w * (q_obs[j] - q_obs[j - 1]);
  };

  std::vector<double> out(pred_apply.size());
  for (std::size_t i = 0; i < pred_apply.size(); ++i) out[i] = observed_at(level_of(pred_apply[i]));
  return out;
}

std::vector<double> quantile_map(std::span<const double> pred_train, std::span<const double> obs_train,
                                 std::span<const double> pred_apply) {
  const auto levels = default_quantile_levels();
  return quantile_map(pred_train, obs_train, pred_apply, levels);
}

double solar_power(double irradiance, double temp_ambient, const PvParameters& pv) {
  if (irradiance < 0.0) throw Error("irradiance must be non-negative");
  if (irradiance == 0.0) return 0.0;
  const double cell_temp = temp_ambient + (pv.noct - 20.0) / 800.0 * irradiance;
  const double p =
      pv.capacity * (irradiance / pv.reference_irradiance) * (1.0 + pv.temp_coefficient * (cell_temp - 25.0));
  return std::clamp(p, 0.0, pv.capacity);
}

std::vector<double> disaggregate_periods(std::span<const double> period_energy,
                                         std::span<const std::size_t> hours_per_period) {
  if (period_energy.size() != hours_per_period.size())
    throw Error("disaggregation: " + std::to_string(period_energy.size()) + " energies for " +
                std::to_string(hours_per_period.size()) + " periods");
  std::vector<double> out;
  for (std::size_t p = 0; p < period_energy.size(); ++p) {
    if (hours_per_period[p] == 0) throw Error("disaggregation: period " + std::to_string(p) + " has zero length");
    if (period_energy[p] < 0.0) throw Error("disaggregation: negative energy in period " + std::to_string(p));
    out.insert(out.end(), hours_per_period[p], period_energy[p] / static_cast<double>(hours_per_period[p]));
  }
  return out;
}

std::vector<double> disaggregate_hydro(std::span<const double> period_energy, const HourlyCalendar& calendar,
                                       Period period) {
  std::vector<std::size_t> lengths;
  for (const auto& [begin, end] : calendar.periods(period)) lengths.push_back(end - begin);
  return disaggregate_periods(period_energy, lengths);
}

std::vector<double> small_hydro_series(double capacity, std::span<const double> monthly_factors,
                                       const HourlyCalendar& calendar) {
  if (monthly_factors.size() != 12) throw Error("small hydro: expected 12 monthly capacity factors");
  for (std::size_t m = 0; m < 12; ++m)
    if (!(monthly_factors[m] >= 0.0 && monthly_factors[m] <= 1.0))
      throw Error("small hydro: capacity factor for month " + std::to_string(m + 1) + " outside [0, 1]");
  std::vector<double> out(calendar.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = capacity * monthly_factors[calendar.month(t) - 1];
  return out;
}

std::vector<double> scale_load_to_peaks(std::span<const double> load, double summer_scale, double winter_scale,
                                        const HourlyCalendar& calendar) {
  if (!(summer_scale > -1.0) || !(winter_scale > -1.0)) throw Error("load scaling factors must exceed -1");
  if (load.size() != calendar.size()) throw Error("load scaling: series length does not match calendar");
  std::vector<double> out(load.size());
  for (std::size_t t = 0; t < load.size(); ++t) {
    const unsigned m = calendar.month(t);
    const bool summer = m >= 4 && m <= 9;
    out[t] = load[t] * (1.0 + (summer ? summer_scale : winter_scale));
  }
  return out;
}

SeriesMap disaggregate_zonal(const SeriesMap& zonal, const std::vector<BusShare>& shares) {
  std::map<std::string, double> sums;
  for (const auto& share : shares) {
    if (share.ratio < 0.0) throw Error("zonal disaggregation: negative ratio for bus '" + share.bus_id + "'");
    sums[share.zone] += share.ratio;
  }
  for (const auto& [zone, total] : sums)
    if (std::abs(total - 1.0) > 1e-9)
      throw Error("zonal disaggregation: ratios of zone '" + zone + "' sum to " + std::to_string(total));

  SeriesMap out;
  for (const auto& share : shares) {
    auto it = zonal.find(share.zone);
    if (it == zonal.end()) throw Error("zonal disaggregation: no series for zone '" + share.zone + "'");
    auto& dest = out[share.bus_id];
    dest.resize(it->second.size());
    for (std::size_t t = 0; t < dest.size(); ++t) dest[t] = it->second[t] * share.ratio;
  }
  return out;
}

std::vector<BusShare> load_shares(const Grid& grid) {
  std::vector<BusShare> out;
  for (const auto& bus : grid.buses)
    if (bus.load_share > 0.0) out.push_back({bus.id, bus.zone, bus.load_share});
  return out;
}

namespace {

void add_into(std::vector<double>& dest, const std::vector<double>& add) {
  if (dest.empty()) dest.assign(add.size(), 0.0);
  for (std::size_t t = 0; t < add.size(); ++t) dest[t] += add[t];
}

const std::vector<double>& require_series(const SeriesMap& map, const std::string& id, const char* what,
                                          std::size_t hours) {
  auto it = map.find(id);
  if (it == map.end()) throw Error(std::string("scenario: missing ") + what + " for '" + id + "'");
  if (it->second.size() != hours)
    throw Error(std::string("scenario: ") + what + " for '" + id + "' has " + std::to_string(it->second.size()) +
                " values, expected " + std::to_string(hours));
  return it->second;
}

}  // namespace

ScenarioSeries build_scenario(const Grid& grid, const WeatherInputs& inputs, const ScenarioRecipe& recipe) {
  if (auto issues = recipe.power_curve.problems(); !issues.empty()) throw ValidationError(issues);

  ScenarioSeries out;
  out.calendar = inputs.calendar;
  const auto& cal = inputs.calendar;
  const std::size_t n = cal.size();
  const auto buses = bus_index(grid);

  auto emit = [&](const RenewableUnit& unit, std::vector<double> series) {
    if (unit.dispatchable) {
      out.available_renewable[unit.id] = std::move(series);
    } else {
      add_into(out.negative_load[unit.bus_id], series);
    }
  };

  for (const auto& unit : grid.renewable_units) {
    switch (unit.kind) {
      case RenewableKind::Wind: {
        const auto& raw10 = require_series(inputs.wind_speed_10m, unit.id, "wind speed", n);
        HourlySeries hub{cal, std::vector<double>(n)};
        for (std::size_t t = 0; t < n; ++t)
          hub.values[t] =
              extrapolate_wind_speed(raw10[t], recipe.reference_height, recipe.hub_height, recipe.shear_exponent);
        if (auto ref = inputs.wind_speed_reference.find(unit.id); ref != inputs.wind_speed_reference.end()) {
          HourlySeries reference{inputs.reference_calendar, ref->second};
          hub.values = stability_bias_correct(hub, reference, recipe.wind_grouping);
        }
        std::vector<double> power(n);
        for (std::size_t t = 0; t < n; ++t) power[t] = wind_power(hub.values[t], recipe.power_curve, unit.capacity);
        emit(unit, std::move(power));
        break;
      }
      case RenewableKind::Solar: {
        const auto& ghi = require_series(inputs.irradiance, unit.id, "irradiance", n);
        const auto& temp = require_series(inputs.temperature, unit.id, "temperature", n);
        PvParameters pv = recipe.pv;
        pv.capacity = unit.capacity;
        HourlySeries power{cal, std::vector<double>(n)};
        for (std::size_t t = 0; t < n; ++t) power.values[t] = solar_power(ghi[t], temp[t], pv);
        if (auto ref = inputs.solar_reference.find(unit.id); ref != inputs.solar_reference.end()) {
          HourlySeries reference{inputs.reference_calendar, ref->second};
          power.values = stability_bias_correct(power, reference, recipe.solar_grouping);
          for (auto& v : power.values) v = std::clamp(v, 0.0, unit.capacity);
        }
        emit(unit, std::move(power.values));
        break;
      }
      case RenewableKind::Hydro: {
        if (!unit.dispatchable) {
          emit(unit, small_hydro_series(unit.capacity, recipe.small_hydro_factors, cal));
          break;
        }
        auto it = inputs.hydro_period_energy.find(unit.id);
        if (it == inputs.hydro_period_energy.end())
          throw Error("scenario: missing hydro period energy for '" + unit.id + "'");
        auto hourly = disaggregate_hydro(it->second, cal, recipe.hydro_period);
        for (std::size_t t = 0; t < hourly.size(); ++t)
          if (hourly[t] > unit.capacity * (1.0 + 1e-9))
            throw Error("scenario: hydro unit '" + unit.id + "' period energy implies " + std::to_string(hourly[t]) +
                        " MW above capacity at hour " + std::to_string(t));
        emit(unit, std::move(hourly));
        break;
      }
    }
  }

  SeriesMap zonal;
  for (const auto& [zone, series] : inputs.zonal_load) {
    if (series.size() != n) throw Error("scenario: zonal load for '" + zone + "' does not match calendar length");
    std::vector<double> corrected = series;
    auto pred = inputs.load_pred_train.find(zone);
    auto obs = inputs.load_obs_train.find(zone);
    if (pred != inputs.load_pred_train.end() && obs != inputs.load_obs_train.end())
      corrected = quantile_map(pred->second, obs->second, series);
    zonal[zone] = scale_load_to_peaks(corrected, recipe.summer_scale, recipe.winter_scale, cal);
  }
  auto shares = load_shares(grid);
  if (!shares.empty()) out.load = disaggregate_zonal(zonal, shares);

  for (const auto& [id, series] : inputs.tie_prices) out.tie_prices[id] = series;
  for (const auto& [bus, series] : out.negative_load)
    if (!buses.contains(bus)) throw Error("scenario: negative load on unknown bus '" + bus + "'");
  return out;
}

}  // namespace gridsim
