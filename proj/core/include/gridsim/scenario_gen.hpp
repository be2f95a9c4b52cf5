#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridsim/calendar.hpp"
#include "gridsim/grid.hpp"
#include "gridsim/scenario.hpp"

namespace gridsim {

// ---------------------------------------------------------------------------
// Wind

// Piecewise-linear normalised power curve. Breakpoints between cut_in and
// rated are interpolated; output is 0 below cut_in and from cut_out on, and 1
// on the [rated, cut_out) plateau.
struct PowerCurve {
  struct Point {
    double speed;  // m/s
    double power;  // normalised, [0, 1]
  };
  std::vector<Point> points;
  double cut_in = 3.0;
  double rated = 12.0;
  double cut_out = 25.0;

  // Cubic-shaped curve sampled every 1 m/s between cut-in and rated.
  static PowerCurve standard(double cut_in = 3.0, double rated = 12.0, double cut_out = 25.0);

  // Empty when valid.
  std::vector<std::string> problems() const;
};

// v_ref * (h_target / h_ref)^alpha. Throws Error on a negative speed or a
// non-positive height.
double extrapolate_wind_speed(double v_ref, double h_ref, double h_target, double alpha = 1.0 / 7.0);

double wind_power(double speed, const PowerCurve& curve, double capacity);

// ---------------------------------------------------------------------------
// Bias correction

enum class BiasGrouping { MonthHour, Month };

struct HourlySeries {
  HourlyCalendar calendar;
  std::vector<double> values;
};

struct BiasCoefficients {
  BiasGrouping grouping = BiasGrouping::MonthHour;
  // Keyed by month * 24 + hour (MonthHour) or month (Month); month is 1..12.
  std::map<int, double> factor;
};

// Multiplicative per-group ratios mean(reference)/mean(raw) over the
// timestamps both series share. Throws Error naming the group when a group of
// raw has no overlap or a zero raw mean.
BiasCoefficients stability_coefficients(const HourlySeries& raw, const HourlySeries& reference,
                                        BiasGrouping grouping = BiasGrouping::MonthHour);

std::vector<double> apply_coefficients(const HourlySeries& raw, const BiasCoefficients& coefficients);

std::vector<double> stability_bias_correct(const HourlySeries& raw, const HourlySeries& reference,
                                           BiasGrouping grouping = BiasGrouping::MonthHour);

// 0, 0.005, ..., 1.
std::vector<double> default_quantile_levels();

// Empirical quantile mapping: each value is placed on the predicted-training
// CDF (linear between grid levels, clamped to [0,1] outside the training
// range) and read back through the observed-training quantile function.
std::vector<double> quantile_map(std::span<const double> pred_train, std::span<const double> obs_train,
                                 std::span<const double> pred_apply, std::span<const double> levels);

std::vector<double> quantile_map(std::span<const double> pred_train, std::span<const double> obs_train,
                                 std::span<const double> pred_apply);

// Linear-interpolated sample quantile (order statistic at (n-1) * level).
double sample_quantile(std::vector<double> sorted_values, double level);

// ---------------------------------------------------------------------------
// Solar

struct PvParameters {
  double capacity = 0.0;                   // MW
  double reference_irradiance = 1000.0;    // W/m^2
  double temp_coefficient = -0.004;        // per deg C
  double noct = 45.0;                      // deg C
};

// Linear irradiance model with NOCT cell temperature, clipped to [0, capacity].
double solar_power(double irradiance, double temp_ambient, const PvParameters& pv);

// ---------------------------------------------------------------------------
// Hydro and load shaping

// Spreads each period's energy evenly across its hours. Throws on a
// zero-length period or negative energy.
std::vector<double> disaggregate_periods(std::span<const double> period_energy,
                                         std::span<const std::size_t> hours_per_period);

// Same, with periods taken from the calendar (quarter-months or months).
std::vector<double> disaggregate_hydro(std::span<const double> period_energy, const HourlyCalendar& calendar,
                                       Period period = Period::QuarterMonth);

// Monthly capacity factors of aggregated small hydro, January first.
inline constexpr std::array<double, 12> kSmallHydroCapacityFactors = {0.576, 0.551, 0.642, 0.663, 0.567, 0.397,
                                                                      0.388, 0.328, 0.278, 0.371, 0.523, 0.564};

std::vector<double> small_hydro_series(double capacity, std::span<const double> monthly_factors,
                                       const HourlyCalendar& calendar);

// Apr-Sep hours scaled by (1 + summer_scale), Oct-Mar by (1 + winter_scale).
std::vector<double> scale_load_to_peaks(std::span<const double> load, double summer_scale, double winter_scale,
                                        const HourlyCalendar& calendar);

struct BusShare {
  std::string bus_id;
  std::string zone;
  double ratio = 0.0;
};

// Per-bus series = zonal series * ratio. Ratios within each zone must sum to
// 1 within 1e-9.
SeriesMap disaggregate_zonal(const SeriesMap& zonal, const std::vector<BusShare>& shares);

std::vector<BusShare> load_shares(const Grid& grid);

// ---------------------------------------------------------------------------
// Scenario assembly

// Raw hourly inputs the conversion pipelines start from.
struct WeatherInputs {
  HourlyCalendar calendar;
  SeriesMap wind_speed_10m;        // wind unit id -> m/s at reference height
  SeriesMap wind_speed_reference;  // wind unit id -> m/s at hub height, overlap period
  HourlyCalendar reference_calendar;
  SeriesMap irradiance;            // solar unit id -> W/m^2
  SeriesMap temperature;           // solar unit id -> deg C
  SeriesMap solar_reference;       // solar unit id -> MW, overlap period
  SeriesMap hydro_period_energy;   // dispatchable hydro unit id -> MWh per period
  SeriesMap zonal_load;            // zone -> MW
  SeriesMap load_pred_train;       // zone -> MW, model predictions on the training span
  SeriesMap load_obs_train;        // zone -> MW, observations on the training span
  SeriesMap tie_prices;            // tie id -> $/MWh
};

struct ScenarioRecipe {
  double reference_height = 10.0;
  double hub_height = 100.0;
  double shear_exponent = 1.0 / 7.0;
  PowerCurve power_curve = PowerCurve::standard();
  BiasGrouping wind_grouping = BiasGrouping::MonthHour;
  BiasGrouping solar_grouping = BiasGrouping::Month;
  PvParameters pv;  // capacity overridden per unit
  Period hydro_period = Period::QuarterMonth;
  std::array<double, 12> small_hydro_factors = kSmallHydroCapacityFactors;
  double summer_scale = 0.04;
  double winter_scale = 0.03;
};

// Runs every conversion: wind (extrapolate, bias-correct if a reference is
// present, power curve), solar (PV model, optional bias correction; units
// that are not dispatchable go to negative load), dispatchable hydro
// (disaggregation), small hydro (monthly factors, negative load), load
// (optional quantile mapping, peak scaling, zonal disaggregation).
ScenarioSeries build_scenario(const Grid& grid, const WeatherInputs& inputs, const ScenarioRecipe& recipe);

// Seeded synthetic weather for desk-scale experiments: diurnal/seasonal wind,
// clear-sky irradiance with cloud noise, temperature, quarter-monthly hydro
// energy, zonal load, and a reference overlap for bias correction.
struct SyntheticOptions {
  std::uint64_t seed = 1;
  double peak_load = 0.0;  // MW, state-wide; 0 derives it from grid capacity
  std::map<std::string, double> zone_peak_load;  // MW per zone, overrides the even split of peak_load
  double mean_wind_speed_10m = 5.5;
  bool with_reference = true;
  bool with_load_training = true;
};

WeatherInputs synthesize_weather(const Grid& grid, const HourlyCalendar& calendar, const SyntheticOptions& options);

}  // namespace gridsim
