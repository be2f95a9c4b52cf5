#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "gridsim/error.hpp"
#include "gridsim/scenario_gen.hpp"

namespace gridsim {

namespace {

constexpr double kPi = std::numbers::pi;

// Bit-level draws so the same seed gives the same series on every standard
// library (distribution objects are implementation-defined).
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
    rng_.seed(seq);
  }

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t salt_of(std::string_view tag, std::string_view id) {
  // FNV-1a; std::hash is not stable across implementations.
  std::uint64_t h = 1469598103934665603ull;
  for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  h = (h ^ 0xffu) * 1099511628211ull;
  for (char c : id) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  return h;
}

double day_of_year(const HourlyCalendar& cal, std::size_t t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(cal.at(t));
  const year_month_day ymd{day_point};
  const sys_days jan1{ymd.year() / January / 1};
  return static_cast<double>((day_point - jan1).count());
}

// +1 mid-January, -1 mid-July.
double winterness(const HourlyCalendar& cal, std::size_t t) {
  return std::cos(2.0 * kPi * (day_of_year(cal, t) - 15.0) / 365.0);
}

std::vector<double> wind_speeds(const HourlyCalendar& cal, double mean, Stream& s) {
  std::vector<double> out(cal.size());
  double ar = 0.0;
  for (std::size_t t = 0; t < out.size(); ++t) {
    ar = 0.9 * ar + std::sqrt(1.0 - 0.81) * s.normal();
    const double hour = cal.hour_of_day(t);
    const double shape = 1.0 + 0.2 * winterness(cal, t) + 0.1 * std::cos(2.0 * kPi * (hour - 15.0) / 24.0);
    out[t] = std::max(0.0, mean * shape * std::exp(0.35 * ar - 0.06));
  }
  return out;
}

std::vector<double> irradiance(const HourlyCalendar& cal, Stream& s) {
  std::vector<double> out(cal.size());
  double cloud = 0.0;
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (cal.hour_of_day(t) == 0) cloud = s.uniform();
    const double half_day = 6.0 - 2.0 * winterness(cal, t);  // hours from noon to sunset
    const double from_noon = static_cast<double>(cal.hour_of_day(t)) + 0.5 - 12.0;
    const double elevation = std::cos(kPi / 2.0 * from_noon / half_day);
    const double peak = 950.0 - 300.0 * winterness(cal, t);
    const double clearness = 1.0 - 0.7 * cloud * (0.8 + 0.2 * s.uniform());
    out[t] = std::abs(from_noon) < half_day ? std::max(0.0, peak * elevation * clearness) : 0.0;
  }
  return out;
}

std::vector<double> temperature(const HourlyCalendar& cal, Stream& s) {
  std::vector<double> out(cal.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const double hour = cal.hour_of_day(t);
    out[t] = 10.0 - 13.0 * winterness(cal, t) + 5.0 * std::cos(2.0 * kPi * (hour - 15.0) / 24.0) + 1.5 * s.normal();
  }
  return out;
}

// Normalised to a peak near 1: evening peak, summer cooling and winter heating.
std::vector<double> load_shape(const HourlyCalendar& cal, Stream& s) {
  std::vector<double> out(cal.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const double hour = cal.hour_of_day(t);
    const double w = winterness(cal, t);
    const double daily = 0.12 * std::cos(2.0 * kPi * (hour - 17.0) / 24.0) + 0.05 * std::cos(4.0 * kPi * (hour - 9.0) / 24.0);
    const double seasonal = 0.1 * w * w + 0.05 * std::max(0.0, -w);
    out[t] = std::max(0.0, 0.72 + daily + seasonal + 0.02 * s.normal());
  }
  return out;
}

std::map<std::string, double> zone_peaks(const Grid& grid, const SyntheticOptions& options) {
  std::set<std::string> zones;
  for (const auto& bus : grid.buses)
    if (bus.load_share > 0.0) zones.insert(bus.zone);
  if (zones.empty()) return {};

  double total = options.peak_load;
  if (total <= 0.0) {
    double supply = 0.0;
    for (const auto& g : grid.thermal_generators) supply += g.p_max;
    for (const auto& r : grid.renewable_units) supply += 0.3 * r.capacity;
    for (const auto& tie : grid.external_ties) supply += tie.import_max;
    total = 0.6 * supply;
  }
  std::map<std::string, double> out;
  for (const auto& zone : zones) {
    auto it = options.zone_peak_load.find(zone);
    out[zone] = it != options.zone_peak_load.end() ? it->second : total / static_cast<double>(zones.size());
  }
  return out;
}

}  // namespace

WeatherInputs synthesize_weather(const Grid& grid, const HourlyCalendar& calendar, const SyntheticOptions& options) {
  if (options.peak_load < 0.0) throw Error("synthetic weather: peak_load must be non-negative");
  for (const auto& [zone, peak] : options.zone_peak_load)
    if (peak < 0.0) throw Error("synthetic weather: negative peak load for zone '" + zone + "'");

  WeatherInputs in;
  in.calendar = calendar;
  in.reference_calendar = calendar;
  const std::size_t n = calendar.size();
  const auto recipe_curve = ScenarioRecipe{};

  for (const auto& unit : grid.renewable_units) {
    Stream s(options.seed, salt_of(to_string(unit.kind), unit.id));
    switch (unit.kind) {
      case RenewableKind::Wind: {
        auto speeds = wind_speeds(calendar, options.mean_wind_speed_10m, s);
        if (options.with_reference) {
          // Reference hub-height speeds run a few percent faster than the
          // plain extrapolation, with a mild diurnal stability signature.
          std::vector<double> ref(n);
          for (std::size_t t = 0; t < n; ++t) {
            const double hour = calendar.hour_of_day(t);
            const double factor = 1.06 + 0.04 * std::cos(2.0 * kPi * hour / 24.0);
            ref[t] = factor * extrapolate_wind_speed(speeds[t], recipe_curve.reference_height, recipe_curve.hub_height,
                                                     recipe_curve.shear_exponent);
          }
          in.wind_speed_reference[unit.id] = std::move(ref);
        }
        in.wind_speed_10m[unit.id] = std::move(speeds);
        break;
      }
      case RenewableKind::Solar: {
        auto ghi = irradiance(calendar, s);
        auto temp = temperature(calendar, s);
        if (options.with_reference && unit.dispatchable) {
          PvParameters pv;
          pv.capacity = unit.capacity;
          std::vector<double> ref(n);
          for (std::size_t t = 0; t < n; ++t) ref[t] = 0.95 * solar_power(ghi[t], temp[t], pv);
          in.solar_reference[unit.id] = std::move(ref);
        }
        in.irradiance[unit.id] = std::move(ghi);
        in.temperature[unit.id] = std::move(temp);
        break;
      }
      case RenewableKind::Hydro: {
        if (!unit.dispatchable) break;
        std::vector<double> energy;
        for (const auto& [begin, end] : calendar.periods(Period::QuarterMonth)) {
          const double w = winterness(calendar, begin);
          // Spring freshet peak, late-summer low.
          const double cf = std::clamp(0.62 + 0.12 * std::sin(2.0 * kPi * (day_of_year(calendar, begin) - 60.0) / 365.0) +
                                           0.03 * w + 0.04 * s.normal(),
                                       0.2, 0.95);
          energy.push_back(cf * unit.capacity * static_cast<double>(end - begin));
        }
        in.hydro_period_energy[unit.id] = std::move(energy);
        break;
      }
    }
  }

  for (const auto& [zone, peak] : zone_peaks(grid, options)) {
    Stream s(options.seed, salt_of("load", zone));
    auto shape = load_shape(calendar, s);
    std::vector<double> obs(n), pred(n), forecast(n);
    for (std::size_t t = 0; t < n; ++t) {
      obs[t] = peak * shape[t];
      // A biased, smoothed model output: under-predicts peaks, over-predicts troughs.
      pred[t] = peak * (0.74 + 0.85 * (shape[t] - 0.72)) * (1.0 + 0.01 * s.normal());
      forecast[t] = peak * (0.74 + 0.85 * (shape[t] - 0.72)) * (1.0 + 0.01 * s.normal());
    }
    if (options.with_load_training) {
      in.load_pred_train[zone] = std::move(pred);
      in.load_obs_train[zone] = std::move(obs);
      in.zonal_load[zone] = std::move(forecast);
    } else {
      in.zonal_load[zone] = std::move(obs);
    }
  }

  for (const auto& tie : grid.external_ties) {
    Stream s(options.seed, salt_of("tie", tie.id));
    std::vector<double> price(n);
    const double base = 0.5 * (tie.import_price + tie.export_price);
    for (std::size_t t = 0; t < n; ++t) {
      const double hour = calendar.hour_of_day(t);
      price[t] = base * (1.0 + 0.25 * std::cos(2.0 * kPi * (hour - 17.0) / 24.0)) + 2.0 * s.normal();
    }
    in.tie_prices[tie.id] = std::move(price);
  }
  return in;
}

}  // namespace gridsim
