#include "gridsim/run.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridsim/error.hpp"
#include "gridsim/io.hpp"

#ifndef GRIDSIM_VERSION
#define GRIDSIM_VERSION "0.0.0"
#endif

namespace gridsim {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view version_string() { return GRIDSIM_VERSION; }

namespace {

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(source + ": malformed JSON: " + e.what());
  }
}

// Typed access with the document name in every message.
struct Doc {
  const json& j;
  std::string source;

  const json* get(const char* key) const {
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
  }
  [[noreturn]] void fail(const std::string& what) const { throw Error(source + ": " + what); }

  double number(const char* key, double fallback) const {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(std::string("\"") + key + "\" must be a number");
    return v->get<double>();
  }
  std::size_t count(const char* key, std::size_t fallback) const {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) fail(std::string("\"") + key + "\" must be a non-negative integer");
    return v->get<std::size_t>();
  }
  bool flag(const char* key, bool fallback) const {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(std::string("\"") + key + "\" must be true or false");
    return v->get<bool>();
  }
  std::string text(const char* key, const std::string& fallback) const {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(std::string("\"") + key + "\" must be a string");
    return v->get<std::string>();
  }
  const json& object(const char* key) const {
    const json* v = get(key);
    static const json empty = json::object();
    if (!v) return empty;
    if (!v->is_object()) fail(std::string("\"") + key + "\" must be an object");
    return *v;
  }
  Doc sub(const char* key) const { return {object(key), source + "." + key}; }
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

fs::path existing(const Doc& d, const fs::path& base, const std::string& p, const std::string& what) {
  auto path = resolve(base, p);
  if (!fs::exists(path)) d.fail(what + " not found: " + path.string());
  return path;
}

BiasGrouping parse_grouping(const Doc& d, const char* key, BiasGrouping fallback) {
  const auto s = d.text(key, "");
  if (s.empty()) return fallback;
  if (s == "month_hour") return BiasGrouping::MonthHour;
  if (s == "month") return BiasGrouping::Month;
  d.fail(std::string("\"") + key + "\" must be \"month_hour\" or \"month\"");
}

const std::vector<std::string>& weather_names() {
  static const std::vector<std::string> names = {"wind_speed_10m", "wind_speed_reference", "irradiance",
                                                 "temperature",    "solar_reference",      "zonal_load",
                                                 "load_pred_train", "load_obs_train",      "tie_prices"};
  return names;
}

GenerationRecipe recipe_from_json(const json& j, const fs::path& base, const std::string& source) {
  if (!j.is_object()) throw Error(source + ": recipe must be a JSON object");
  Doc d{j, source};
  GenerationRecipe r;
  if (const auto g = d.text("grid", ""); !g.empty()) r.grid = existing(d, base, g, "grid");
  r.start = d.text("start", r.start);
  if (!parse_iso_hour(r.start)) d.fail("\"start\" is not an ISO hour: " + r.start);
  r.hours = d.count("hours", r.hours);
  if (r.hours == 0) d.fail("\"hours\" must be positive");
  r.synthetic.seed = d.count("seed", r.synthetic.seed);

  const Doc syn = d.sub("synthetic");
  r.synthetic.peak_load = syn.number("peak_load", r.synthetic.peak_load);
  r.synthetic.mean_wind_speed_10m = syn.number("mean_wind_speed_10m", r.synthetic.mean_wind_speed_10m);
  r.synthetic.with_reference = syn.flag("with_reference", r.synthetic.with_reference);
  r.synthetic.with_load_training = syn.flag("with_load_training", r.synthetic.with_load_training);
  for (const auto& [zone, v] : syn.object("zone_peak_load").items()) {
    if (!v.is_number()) syn.fail("zone_peak_load." + zone + " must be a number");
    r.synthetic.zone_peak_load[zone] = v.get<double>();
  }

  const Doc conv = d.sub("conversion");
  auto& c = r.conversion;
  c.reference_height = conv.number("reference_height", c.reference_height);
  c.hub_height = conv.number("hub_height", c.hub_height);
  c.shear_exponent = conv.number("shear_exponent", c.shear_exponent);
  c.summer_scale = conv.number("summer_scale", c.summer_scale);
  c.winter_scale = conv.number("winter_scale", c.winter_scale);
  c.wind_grouping = parse_grouping(conv, "wind_grouping", c.wind_grouping);
  c.solar_grouping = parse_grouping(conv, "solar_grouping", c.solar_grouping);
  if (const auto p = conv.text("hydro_period", ""); !p.empty()) {
    auto period = parse_period(p);
    if (!period) conv.fail("unknown hydro_period \"" + p + "\"");
    c.hydro_period = *period;
  }
  if (const json* f = conv.get("small_hydro_factors")) {
    if (!f->is_array() || f->size() != 12) conv.fail("small_hydro_factors must list 12 monthly values");
    for (std::size_t m = 0; m < 12; ++m) {
      if (!(*f)[m].is_number()) conv.fail("small_hydro_factors must be numbers");
      c.small_hydro_factors[m] = (*f)[m].get<double>();
    }
  }

  const Doc weather = d.sub("weather");
  for (const auto& [name, v] : weather.j.items()) {
    const auto& names = weather_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) weather.fail("unknown weather series \"" + name + "\"");
    if (!v.is_string()) weather.fail(name + " must be a file path");
    r.weather_files[name] = existing(weather, base, v.get<std::string>(), name + " file");
  }
  const Doc hydro = d.sub("hydro_period_energy");
  for (const auto& [id, v] : hydro.j.items()) {
    if (!v.is_array()) hydro.fail(id + " must be an array of MWh values");
    auto& dst = r.hydro_period_energy[id];
    for (const auto& e : v) {
      if (!e.is_number()) hydro.fail(id + " must be an array of MWh values");
      dst.push_back(e.get<double>());
    }
  }
  if (const auto out = d.text("output_dir", ""); !out.empty()) r.output_dir = resolve(base, out);
  return r;
}

ScenarioFiles scenario_files_from_json(const Doc& d, const fs::path& base) {
  ScenarioFiles f;
  for (const auto& [key, v] : d.j.items()) {
    if (!v.is_string()) d.fail(key + " must be a file path");
    auto path = existing(d, base, v.get<std::string>(), key + " file");
    if (key == "available_renewable") f.available_renewable = path;
    else if (key == "load") f.load = path;
    else if (key == "negative_load") f.negative_load = path;
    else if (key == "tie_prices") f.tie_prices = path;
    else d.fail("unknown scenario series \"" + key + "\"");
  }
  return f;
}

ScenarioSource source_from_json(const Doc& d, const fs::path& base, std::string name) {
  ScenarioSource s;
  s.name = std::move(name);
  const json* files = d.get("scenario");
  const json* recipe = d.get("recipe");
  if ((files != nullptr) == (recipe != nullptr)) d.fail("give exactly one of \"scenario\" or \"recipe\"");
  if (files) {
    s.files = scenario_files_from_json(d.sub("scenario"), base);
  } else if (recipe->is_string()) {
    s.recipe = load_recipe(existing(d, base, recipe->get<std::string>(), "recipe"));
  } else {
    s.recipe = recipe_from_json(*recipe, base, d.source + ".recipe");
  }
  return s;
}

void put_row(std::string& out, std::size_t hour, const std::string& stamp, const std::string& entity,
             const char* quantity, double value) {
  out += std::to_string(hour);
  out += ',';
  out += stamp;
  out += ',';
  out += entity;
  out += ',';
  out += quantity;
  out += ',';
  out += format_number(value);
  out += '\n';
}

double parse_double(std::string_view s, const std::string& source, std::size_t row) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError(source, row, "malformed number \"" + std::string(s) + "\"");
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

struct LongTable {
  std::optional<TimePoint> start;
  std::size_t hours = 0;
  // quantity -> entity -> hourly values
  std::map<std::string, std::map<std::string, std::vector<double>>> data;
};

LongTable read_long_csv(const fs::path& path, const std::string& header, bool with_quantity) {
  const auto text = read_file(path);
  const auto source = path.string();
  LongTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line) || line != header) throw ParseError(source, 1, "expected header \"" + header + "\"");
  const std::size_t width = with_quantity ? 5 : 4;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != width) throw ParseError(source, row, "expected " + std::to_string(width) + " fields");
    std::size_t hour = 0;
    if (std::from_chars(f[0].data(), f[0].data() + f[0].size(), hour).ec != std::errc{})
      throw ParseError(source, row, "malformed hour");
    const auto stamp = parse_iso_hour(f[1]);
    if (!stamp) throw ParseError(source, row, "malformed timestamp");
    const auto origin = *stamp - std::chrono::hours(hour);
    if (!table.start) table.start = origin;
    else if (*table.start != origin) throw ParseError(source, row, "hour index does not match timestamp");
    const std::string quantity = with_quantity ? std::string(f[3]) : "price";
    auto& series = table.data[quantity][std::string(f[2])];
    if (series.size() != hour) throw ParseError(source, row, "rows out of hour order");
    series.push_back(parse_double(f[width - 1], source, row));
    table.hours = std::max(table.hours, hour + 1);
  }
  if (!table.start) throw ParseError(source, row, "no data rows");
  return table;
}

std::vector<std::vector<double>> matrix(const LongTable& t, const std::string& quantity,
                                        const std::vector<std::string>& ids, const std::string& source) {
  std::vector<std::vector<double>> out;
  auto q = t.data.find(quantity);
  for (const auto& id : ids) {
    if (q == t.data.end()) throw Error(source + ": missing quantity " + quantity);
    auto it = q->second.find(id);
    if (it == q->second.end() || it->second.size() != t.hours)
      throw Error(source + ": " + quantity + " for '" + id + "' is missing or incomplete");
    out.push_back(it->second);
  }
  return out;
}

template <typename T>
std::vector<std::string> ids_of(const std::vector<T>& items) {
  std::vector<std::string> out;
  for (const auto& i : items) out.push_back(i.id);
  return out;
}

}  // namespace

GenerationRecipe parse_recipe(std::string_view text, const fs::path& base_dir, const std::string& source) {
  return recipe_from_json(parse_json(text, source), base_dir, source);
}

GenerationRecipe load_recipe(const fs::path& path) {
  return parse_recipe(read_file(path), path.parent_path(), path.string());
}

WeatherInputs recipe_weather(const Grid& grid, const GenerationRecipe& recipe) {
  const auto calendar = HourlyCalendar::from_iso(recipe.start, recipe.hours);
  WeatherInputs in = synthesize_weather(grid, calendar, recipe.synthetic);

  std::optional<HourlyCalendar> reference_calendar;
  std::set<std::string> given;
  for (const auto& [name, path] : recipe.weather_files) {
    auto table = load_timeseries(path);
    given.insert(name);
    const bool reference = name == "wind_speed_reference" || name == "solar_reference";
    const bool training = name == "load_pred_train" || name == "load_obs_train";
    if (reference) {
      if (reference_calendar && !(*reference_calendar == table.calendar))
        throw Error(path.string() + ": reference series must share one span");
      reference_calendar = table.calendar;
    } else if (!training && !(table.calendar == calendar)) {
      throw Error(path.string() + ": span " + table.calendar.iso(0) + " + " + std::to_string(table.calendar.size()) +
                  " h does not match the recipe (" + recipe.start + " + " + std::to_string(recipe.hours) + " h)");
    }
    SeriesMap* dst = nullptr;
    if (name == "wind_speed_10m") dst = &in.wind_speed_10m;
    else if (name == "wind_speed_reference") dst = &in.wind_speed_reference;
    else if (name == "irradiance") dst = &in.irradiance;
    else if (name == "temperature") dst = &in.temperature;
    else if (name == "solar_reference") dst = &in.solar_reference;
    else if (name == "zonal_load") dst = &in.zonal_load;
    else if (name == "load_pred_train") dst = &in.load_pred_train;
    else if (name == "load_obs_train") dst = &in.load_obs_train;
    else dst = &in.tie_prices;
    *dst = std::move(table.values);
  }
  // Synthetic companions of file-backed reference or training data would be
  // misaligned with it, so they are dropped.
  if (reference_calendar) {
    in.reference_calendar = *reference_calendar;
    if (!given.contains("wind_speed_reference")) in.wind_speed_reference.clear();
    if (!given.contains("solar_reference")) in.solar_reference.clear();
  }
  if (given.contains("load_pred_train") != given.contains("load_obs_train")) {
    in.load_pred_train.clear();
    in.load_obs_train.clear();
  }
  for (const auto& [id, energy] : recipe.hydro_period_energy) in.hydro_period_energy[id] = energy;
  return in;
}

ScenarioSeries generate_scenario(const Grid& grid, const GenerationRecipe& recipe) {
  return build_scenario(grid, recipe_weather(grid, recipe), recipe.conversion);
}

ScenarioSeries load_scenario(const ScenarioFiles& files) {
  ScenarioSeries s;
  std::optional<HourlyCalendar> calendar;
  auto take = [&](const std::optional<fs::path>& path, SeriesMap& dst) {
    if (!path) return;
    auto table = load_timeseries(*path);
    if (calendar && !(*calendar == table.calendar))
      throw Error(path->string() + ": span does not match the other scenario files");
    calendar = table.calendar;
    dst = std::move(table.values);
  };
  take(files.available_renewable, s.available_renewable);
  take(files.load, s.load);
  take(files.negative_load, s.negative_load);
  take(files.tie_prices, s.tie_prices);
  if (!calendar) throw Error("scenario names no series files");
  s.calendar = *calendar;
  return s;
}

std::vector<fs::path> save_scenario(const ScenarioSeries& scenario, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto put = [&](const char* name, const SeriesMap& m) {
    if (m.empty()) return;
    auto path = dir / name;
    save_timeseries(path, scenario.calendar, m);
    written.push_back(path);
  };
  put("available_renewable.csv", scenario.available_renewable);
  put("load.csv", scenario.load);
  put("negative_load.csv", scenario.negative_load);
  put("tie_prices.csv", scenario.tie_prices);
  return written;
}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir, const std::string& source) {
  const json j = parse_json(text, source);
  if (!j.is_object()) throw Error(source + ": config must be a JSON object");
  Doc d{j, source};
  RunConfig c;
  c.config_sha256 = sha256_hex(text);
  const auto grid = d.text("grid", "");
  if (grid.empty()) d.fail("missing \"grid\"");
  c.grid = existing(d, base_dir, grid, "grid");
  const auto out = d.text("output_dir", "");
  if (out.empty()) d.fail("missing \"output_dir\"");
  c.output_dir = resolve(base_dir, out);

  if (const json* list = d.get("scenarios")) {
    if (d.get("scenario") || d.get("recipe")) d.fail("\"scenarios\" excludes \"scenario\" and \"recipe\"");
    if (!list->is_array() || list->empty()) d.fail("\"scenarios\" must be a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < list->size(); ++i) {
      Doc item{(*list)[i], source + ".scenarios[" + std::to_string(i) + "]"};
      if (!item.j.is_object()) item.fail("must be an object");
      auto name = item.text("name", "");
      if (name.empty() || name.find_first_of("/\\") != std::string::npos || name == "." || name == "..")
        item.fail("needs a plain \"name\"");
      if (!names.insert(name).second) item.fail("duplicate name \"" + name + "\"");
      c.scenarios.push_back(source_from_json(item, base_dir, name));
    }
  } else {
    c.scenarios.push_back(source_from_json(d, base_dir, "run"));
  }

  const Doc h = d.sub("horizon");
  c.horizon.horizon_hours = h.count("horizon_hours", c.horizon.horizon_hours);
  c.horizon.advance_hours = h.count("advance_hours", c.horizon.advance_hours);
  c.horizon.check();

  const Doc a = d.sub("analytics");
  auto& o = c.analytics;
  o.curtailment = a.flag("curtailment", o.curtailment);
  o.congestion = a.flag("congestion", o.congestion);
  o.price_spikes = a.flag("price_spikes", o.price_spikes);
  o.deviation = a.flag("deviation", o.deviation);
  o.lmp_cv = a.flag("lmp_cv", o.lmp_cv);
  o.battery = a.flag("battery", o.battery);
  o.spike_percentile = a.number("spike_percentile", o.spike_percentile);
  o.congestion_rel_tol = a.number("congestion_rel_tol", o.congestion_rel_tol);
  if (!(o.spike_percentile > 0.0 && o.spike_percentile <= 1.0)) a.fail("spike_percentile must lie in (0, 1]");
  if (!(o.congestion_rel_tol >= 0.0)) a.fail("congestion_rel_tol must be non-negative");

  if (d.get("seed")) c.seed = d.count("seed", 0);
  c.jobs = d.count("jobs", c.jobs);
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  return parse_run_config(read_file(path), path.parent_path(), path.string());
}

std::string manifest_to_json(const Manifest& m) {
  ordered_json doc;
  doc["gridsim_version"] = m.version;
  doc["config_sha256"] = m.config_sha256;
  doc["grid"] = m.grid;
  doc["grid_sha256"] = m.grid_sha256;
  doc["start"] = m.start;
  doc["hours"] = m.hours;
  doc["horizon"] = {{"horizon_hours", m.horizon.horizon_hours}, {"advance_hours", m.horizon.advance_hours}};
  doc["lp_iterations"] = m.lp_iterations;
  auto& files = doc["files"] = ordered_json::array();
  for (const auto& f : m.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return doc.dump(2) + "\n";
}

Manifest parse_manifest(std::string_view text, const std::string& source) {
  const json j = parse_json(text, source);
  try {
    Manifest m;
    m.version = j.at("gridsim_version").get<std::string>();
    m.config_sha256 = j.at("config_sha256").get<std::string>();
    m.grid = j.at("grid").get<std::string>();
    m.grid_sha256 = j.at("grid_sha256").get<std::string>();
    m.start = j.at("start").get<std::string>();
    m.hours = j.at("hours").get<std::size_t>();
    m.horizon.horizon_hours = j.at("horizon").at("horizon_hours").get<std::size_t>();
    m.horizon.advance_hours = j.at("horizon").at("advance_hours").get<std::size_t>();
    m.lp_iterations = j.at("lp_iterations").get<std::size_t>();
    for (const auto& f : j.at("files"))
      m.files.push_back({f.at("name").get<std::string>(), f.at("sha256").get<std::string>(),
                         f.at("bytes").get<std::size_t>()});
    return m;
  } catch (const json::exception& e) {
    throw Error(source + ": malformed manifest: " + e.what());
  }
}

std::string dispatch_csv(const Grid& grid, const ScenarioSeries& scenario, const DispatchSolution& s) {
  std::string out = "hour,timestamp,entity,quantity,value\n";
  out.reserve(s.hours() * 64 *
              (grid.thermal_generators.size() + 3 * s.renewable_ids.size() + grid.lines.size() +
               5 * grid.buses.size() + 4 * grid.storage_units.size() + 2 * grid.external_ties.size() + 1));
  auto series = [](const SeriesMap& m, const std::string& id, std::size_t t) {
    auto it = m.find(id);
    return it == m.end() ? 0.0 : it->second.at(t);
  };
  for (std::size_t t = 0; t < s.hours(); ++t) {
    const auto stamp = s.calendar.iso(t);
    for (std::size_t g = 0; g < grid.thermal_generators.size(); ++g)
      put_row(out, t, stamp, grid.thermal_generators[g].id, "thermal_mw", s.thermal[g][t]);
    for (std::size_t r = 0; r < s.renewable_ids.size(); ++r) {
      put_row(out, t, stamp, s.renewable_ids[r], "available_mw", s.available[r][t]);
      put_row(out, t, stamp, s.renewable_ids[r], "dispatched_mw", s.dispatched_renewable[r][t]);
      put_row(out, t, stamp, s.renewable_ids[r], "curtailment_mw", s.curtailment[r][t]);
    }
    for (std::size_t l = 0; l < grid.lines.size(); ++l) put_row(out, t, stamp, grid.lines[l].id, "flow_mw", s.flow[l][t]);
    for (std::size_t k = 0; k < grid.storage_units.size(); ++k) {
      const auto& id = grid.storage_units[k].id;
      put_row(out, t, stamp, id, "charge_mw", s.charge[k][t]);
      put_row(out, t, stamp, id, "discharge_mw", s.discharge[k][t]);
      put_row(out, t, stamp, id, "net_storage_mw", s.net_storage[k][t]);
      put_row(out, t, stamp, id, "soc_mwh", s.soc[k][t]);
    }
    for (std::size_t k = 0; k < grid.external_ties.size(); ++k) {
      put_row(out, t, stamp, grid.external_ties[k].id, "import_mw", s.imports[k][t]);
      put_row(out, t, stamp, grid.external_ties[k].id, "export_mw", s.exports[k][t]);
    }
    for (std::size_t b = 0; b < grid.buses.size(); ++b) {
      const auto& id = grid.buses[b].id;
      put_row(out, t, stamp, id, "angle_rad", s.angle[b][t]);
      put_row(out, t, stamp, id, "load_mw", series(scenario.load, id, t));
      put_row(out, t, stamp, id, "negative_load_mw", series(scenario.negative_load, id, t));
      put_row(out, t, stamp, id, "unmet_mw", s.unmet[b][t]);
      put_row(out, t, stamp, id, "excess_mw", s.excess[b][t]);
    }
    put_row(out, t, stamp, "system", "cost_usd", s.hourly_cost[t]);
  }
  return out;
}

std::string lmp_csv(const LmpSeries& lmps) {
  std::string out = "hour,timestamp,bus,price_usd_per_mwh\n";
  for (std::size_t t = 0; t < lmps.calendar.size(); ++t) {
    const auto stamp = lmps.calendar.iso(t);
    for (std::size_t b = 0; b < lmps.bus_ids.size(); ++b) {
      out += std::to_string(t);
      out += ',';
      out += stamp;
      out += ',';
      out += lmps.bus_ids[b];
      out += ',';
      out += format_number(lmps.price[b][t]);
      out += '\n';
    }
  }
  return out;
}

Manifest write_results(const Grid& grid, const ScenarioSeries& scenario, const DispatchSolution& solution,
                       const LmpSeries& lmps, const AnalyticsReport& report, const fs::path& out_dir,
                       const WriteContext& context) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest m;
  m.version = std::string(version_string());
  m.config_sha256 = context.config_sha256;
  m.grid_sha256 = context.grid_sha256;
  m.grid = fs::relative(fs::absolute(context.grid_path), fs::absolute(out_dir)).generic_string();
  m.start = solution.hours() ? solution.calendar.iso(0) : "";
  m.hours = solution.hours();
  m.horizon = context.horizon;
  m.lp_iterations = context.lp_iterations;

  const std::pair<const char*, std::string> files[] = {
      {"dispatch.csv", dispatch_csv(grid, scenario, solution)},
      {"lmp.csv", lmp_csv(lmps)},
      {"analytics.json", report_to_json(report)},
      {"deviation_table.csv", deviation_table_csv(report)},
  };
  for (const auto& [name, content] : files) {
    write_file(out_dir / name, content);
    m.files.push_back({name, sha256_hex(content), content.size()});
  }
  write_file(out_dir / "manifest.json", manifest_to_json(m));
  return m;
}

StoredRun read_results(const fs::path& dir) {
  StoredRun run;
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw Error("no manifest.json in " + dir.string());
  run.manifest = parse_manifest(read_file(manifest_path), manifest_path.string());
  const auto grid_path = (dir / run.manifest.grid).lexically_normal();
  const auto grid_text = read_file(grid_path);
  if (sha256_hex(grid_text) != run.manifest.grid_sha256)
    throw Error(grid_path.string() + " changed since the run (hash mismatch)");
  run.grid = parse_grid(grid_text, grid_path.string());
  const Grid& grid = run.grid;

  const auto dispatch_path = dir / "dispatch.csv";
  const auto table = read_long_csv(dispatch_path, "hour,timestamp,entity,quantity,value", true);
  const auto src = dispatch_path.string();
  auto& s = run.dispatch;
  s.calendar = HourlyCalendar(*table.start, table.hours);
  for (const auto& u : grid.renewable_units)
    if (u.dispatchable) s.renewable_ids.push_back(u.id);
  const auto buses = ids_of(grid.buses);
  const auto storage = ids_of(grid.storage_units);
  const auto ties = ids_of(grid.external_ties);
  s.thermal = matrix(table, "thermal_mw", ids_of(grid.thermal_generators), src);
  s.available = matrix(table, "available_mw", s.renewable_ids, src);
  s.dispatched_renewable = matrix(table, "dispatched_mw", s.renewable_ids, src);
  s.curtailment = matrix(table, "curtailment_mw", s.renewable_ids, src);
  s.flow = matrix(table, "flow_mw", ids_of(grid.lines), src);
  s.angle = matrix(table, "angle_rad", buses, src);
  s.charge = matrix(table, "charge_mw", storage, src);
  s.discharge = matrix(table, "discharge_mw", storage, src);
  s.net_storage = matrix(table, "net_storage_mw", storage, src);
  s.soc = matrix(table, "soc_mwh", storage, src);
  s.imports = matrix(table, "import_mw", ties, src);
  s.exports = matrix(table, "export_mw", ties, src);
  s.unmet = matrix(table, "unmet_mw", buses, src);
  s.excess = matrix(table, "excess_mw", buses, src);
  s.hourly_cost = matrix(table, "cost_usd", {"system"}, src).front();
  // Invert the first hour's storage dynamics for the opening SoC.
  for (std::size_t k = 0; k < storage.size(); ++k) {
    const double root = std::sqrt(grid.storage_units[k].round_trip_efficiency);
    s.initial_soc.push_back(table.hours ? s.soc[k][0] + root * s.charge[k][0] + s.discharge[k][0] / root : 0.0);
  }

  run.scenario.calendar = s.calendar;
  const auto load = matrix(table, "load_mw", buses, src);
  const auto negative = matrix(table, "negative_load_mw", buses, src);
  for (std::size_t b = 0; b < buses.size(); ++b) {
    run.scenario.load[buses[b]] = load[b];
    run.scenario.negative_load[buses[b]] = negative[b];
  }
  for (std::size_t r = 0; r < s.renewable_ids.size(); ++r) run.scenario.available_renewable[s.renewable_ids[r]] = s.available[r];

  const auto lmp_path = dir / "lmp.csv";
  const auto prices = read_long_csv(lmp_path, "hour,timestamp,bus,price_usd_per_mwh", false);
  run.lmps.calendar = HourlyCalendar(*prices.start, prices.hours);
  if (!(run.lmps.calendar == s.calendar)) throw Error(lmp_path.string() + ": span differs from dispatch.csv");
  run.lmps.bus_ids = buses;
  run.lmps.price = matrix(prices, "price", buses, lmp_path.string());
  return run;
}

std::vector<RunSummary> run_simulation(const RunConfig& config) {
  const auto grid_text = read_file(config.grid);
  const Grid grid = parse_grid(grid_text, config.grid.string());
  const auto grid_sha = sha256_hex(grid_text);

  std::vector<ScenarioSeries> scenarios;
  for (const auto& source : config.scenarios) {
    ScenarioSeries scenario;
    if (source.files) {
      scenario = load_scenario(*source.files);
    } else {
      auto recipe = *source.recipe;
      if (config.seed) recipe.synthetic.seed = *config.seed;
      scenario = generate_scenario(grid, recipe);
    }
    if (auto issues = scenario.check(grid); !issues.empty()) {
      for (auto& i : issues) i = source.name + ": " + i;
      throw ValidationError(std::move(issues));
    }
    scenarios.push_back(std::move(scenario));
  }

  const auto results = simulate_batch(grid, scenarios, config.horizon, initial_state(grid), config.jobs);

  std::vector<RunSummary> out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto dir = config.scenarios.size() == 1 ? config.output_dir : config.output_dir / config.scenarios[i].name;
    const auto report = analyze(grid, scenarios[i], r.dispatch, r.lmps, config.analytics);
    WriteContext ctx{config.grid, grid_sha, config.config_sha256, config.horizon, r.lp_iterations};
    RunSummary summary;
    summary.name = config.scenarios[i].name;
    summary.output_dir = dir;
    summary.manifest = write_results(grid, scenarios[i], r.dispatch, r.lmps, report, dir, ctx);
    summary.total_cost = r.dispatch.total_cost();
    summary.unmet_mwh = report.unmet.total;
    out.push_back(std::move(summary));
  }
  return out;
}

}  // namespace gridsim
