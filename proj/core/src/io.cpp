#include "gridsim/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gridsim/error.hpp"

namespace gridsim {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

// Collects every schema fault in one pass so the caller sees them all.
class Reader {
public:
  explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

  const json* field(const json& obj, const std::string& where, const char* key, bool required) {
    if (!obj.is_object()) {
      issues_.push_back(where + ": expected an object");
      return nullptr;
    }
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
      if (required) issues_.push_back(where + ": missing \"" + key + "\"");
      return nullptr;
    }
    return &*it;
  }

  std::string str(const json& obj, const std::string& where, const char* key, std::string fallback = {},
                  bool required = true) {
    const json* v = field(obj, where, key, required);
    if (!v) return fallback;
    if (!v->is_string()) {
      issues_.push_back(where + ": \"" + key + "\" must be a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  double num(const json& obj, const std::string& where, const char* key, double fallback = 0.0,
             bool required = true) {
    const json* v = field(obj, where, key, required);
    if (!v) return fallback;
    if (!v->is_number()) {
      issues_.push_back(where + ": \"" + key + "\" must be a number");
      return fallback;
    }
    return v->get<double>();
  }

  bool flag(const json& obj, const std::string& where, const char* key, bool fallback) {
    const json* v = field(obj, where, key, false);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      issues_.push_back(where + ": \"" + key + "\" must be true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  const json* array(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    if (!it->is_array()) {
      issues_.push_back(std::string("\"") + key + "\" must be an array");
      return nullptr;
    }
    return &*it;
  }

  static std::string where(const char* section, std::size_t i, const json& item) {
    std::string w = std::string(section) + "[" + std::to_string(i) + "]";
    if (item.is_object()) {
      auto it = item.find("id");
      if (it != item.end() && it->is_string()) w += " '" + it->get<std::string>() + "'";
    }
    return w;
  }

private:
  std::vector<std::string>& issues_;
};

template <typename F>
void each(Reader& r, const json& doc, const char* key, F&& f) {
  if (const json* arr = r.array(doc, key))
    for (std::size_t i = 0; i < arr->size(); ++i) f((*arr)[i], Reader::where(key, i, (*arr)[i]));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Grid parse_grid(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(source + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) throw Error(source + ": grid document must be a JSON object");

  std::vector<std::string> issues;
  Reader r(issues);
  Grid g;
  g.name = r.str(doc, "grid", "name", "", false);
  g.base_mva = r.num(doc, "grid", "base_mva", 100.0, false);
  g.unserved_energy_penalty = r.num(doc, "grid", "unserved_energy_penalty", 10'000.0, false);

  each(r, doc, "buses", [&](const json& b, const std::string& w) {
    g.buses.push_back({r.str(b, w, "id"), r.str(b, w, "zone"), r.flag(b, w, "reference", false),
                       r.num(b, w, "load_share", 0.0, false)});
  });
  each(r, doc, "lines", [&](const json& l, const std::string& w) {
    g.lines.push_back({r.str(l, w, "id"), r.str(l, w, "from"), r.str(l, w, "to"), r.num(l, w, "susceptance"),
                       r.num(l, w, "flow_min"), r.num(l, w, "flow_max")});
  });
  each(r, doc, "interfaces", [&](const json& i, const std::string& w) {
    Interface itf;
    itf.id = r.str(i, w, "id");
    itf.flow_min = r.num(i, w, "flow_min");
    itf.flow_max = r.num(i, w, "flow_max");
    if (const json* members = r.field(i, w, "members", true)) {
      if (!members->is_array()) {
        issues.push_back(w + ": \"members\" must be an array");
      } else {
        for (std::size_t k = 0; k < members->size(); ++k) {
          const auto mw = w + ".members[" + std::to_string(k) + "]";
          itf.members.push_back({r.str((*members)[k], mw, "line"),
                                 static_cast<int>(r.num((*members)[k], mw, "direction", 1.0, false))});
        }
      }
    }
    g.interfaces.push_back(std::move(itf));
  });
  each(r, doc, "thermal_generators", [&](const json& t, const std::string& w) {
    ThermalGenerator gen;
    gen.id = r.str(t, w, "id");
    gen.bus_id = r.str(t, w, "bus");
    gen.p_min = r.num(t, w, "p_min");
    gen.p_max = r.num(t, w, "p_max");
    gen.ramp_down = r.num(t, w, "ramp_down", -std::numeric_limits<double>::infinity(), false);
    gen.ramp_up = r.num(t, w, "ramp_up", std::numeric_limits<double>::infinity(), false);
    gen.cost_const = r.num(t, w, "cost_const", 0.0, false);
    gen.cost_linear = r.num(t, w, "cost_linear");
    gen.category = r.str(t, w, "category", "thermal", false);
    g.thermal_generators.push_back(std::move(gen));
  });
  each(r, doc, "renewable_units", [&](const json& u, const std::string& w) {
    RenewableUnit unit;
    unit.id = r.str(u, w, "id");
    unit.bus_id = r.str(u, w, "bus");
    const auto kind = r.str(u, w, "kind");
    if (auto k = parse_renewable_kind(kind)) unit.kind = *k;
    else if (!kind.empty()) issues.push_back(w + ": unknown kind \"" + kind + "\"");
    unit.capacity = r.num(u, w, "capacity");
    unit.dispatch_cost = r.num(u, w, "dispatch_cost", 0.0, false);
    unit.dispatchable = r.flag(u, w, "dispatchable", true);
    g.renewable_units.push_back(std::move(unit));
  });
  each(r, doc, "storage_units", [&](const json& s, const std::string& w) {
    StorageUnit st;
    st.id = r.str(s, w, "id");
    st.bus_id = r.str(s, w, "bus");
    st.energy_min = r.num(s, w, "energy_min");
    st.energy_max = r.num(s, w, "energy_max");
    st.power_limit = r.num(s, w, "power_limit");
    st.round_trip_efficiency = r.num(s, w, "round_trip_efficiency");
    st.cycle_cost = r.num(s, w, "cycle_cost", 1.0, false);
    st.initial_soc = r.num(s, w, "initial_soc", st.energy_min, false);
    g.storage_units.push_back(std::move(st));
  });
  each(r, doc, "external_ties", [&](const json& t, const std::string& w) {
    g.external_ties.push_back({r.str(t, w, "id"), r.str(t, w, "bus"), r.num(t, w, "import_max"),
                               r.num(t, w, "export_max"), r.num(t, w, "import_price"), r.num(t, w, "export_price")});
  });

  if (issues.empty()) {
    const auto report = validate_grid(g);
    for (const auto& issue : report.issues) issues.push_back(issue.element + ": " + issue.message);
  }
  if (!issues.empty()) {
    for (auto& issue : issues) issue = source + ": " + issue;
    throw ValidationError(std::move(issues));
  }
  return g;
}

Grid load_grid(const std::filesystem::path& path) { return parse_grid(read_file(path), path.string()); }

std::string grid_to_json(const Grid& g) {
  ordered_json doc;
  doc["name"] = g.name;
  doc["base_mva"] = g.base_mva;
  doc["unserved_energy_penalty"] = g.unserved_energy_penalty;
  auto& buses = doc["buses"] = ordered_json::array();
  for (const auto& b : g.buses)
    buses.push_back({{"id", b.id}, {"zone", b.zone}, {"reference", b.is_reference}, {"load_share", b.load_share}});
  auto& lines = doc["lines"] = ordered_json::array();
  for (const auto& l : g.lines)
    lines.push_back({{"id", l.id}, {"from", l.from_bus}, {"to", l.to_bus}, {"susceptance", l.susceptance},
                     {"flow_min", l.flow_min}, {"flow_max", l.flow_max}});
  auto& interfaces = doc["interfaces"] = ordered_json::array();
  for (const auto& i : g.interfaces) {
    ordered_json members = ordered_json::array();
    for (const auto& m : i.members) members.push_back({{"line", m.line_id}, {"direction", m.direction}});
    interfaces.push_back({{"id", i.id}, {"members", members}, {"flow_min", i.flow_min}, {"flow_max", i.flow_max}});
  }
  auto& thermal = doc["thermal_generators"] = ordered_json::array();
  for (const auto& t : g.thermal_generators) {
    ordered_json o = {{"id", t.id}, {"bus", t.bus_id}, {"p_min", t.p_min}, {"p_max", t.p_max}};
    if (std::isfinite(t.ramp_down)) o["ramp_down"] = t.ramp_down;
    if (std::isfinite(t.ramp_up)) o["ramp_up"] = t.ramp_up;
    o["cost_const"] = t.cost_const;
    o["cost_linear"] = t.cost_linear;
    o["category"] = t.category;
    thermal.push_back(std::move(o));
  }
  auto& renewables = doc["renewable_units"] = ordered_json::array();
  for (const auto& u : g.renewable_units)
    renewables.push_back({{"id", u.id}, {"bus", u.bus_id}, {"kind", std::string(to_string(u.kind))},
                          {"capacity", u.capacity}, {"dispatch_cost", u.dispatch_cost},
                          {"dispatchable", u.dispatchable}});
  auto& storage = doc["storage_units"] = ordered_json::array();
  for (const auto& s : g.storage_units)
    storage.push_back({{"id", s.id}, {"bus", s.bus_id}, {"energy_min", s.energy_min}, {"energy_max", s.energy_max},
                       {"power_limit", s.power_limit}, {"round_trip_efficiency", s.round_trip_efficiency},
                       {"cycle_cost", s.cycle_cost}, {"initial_soc", s.initial_soc}});
  auto& ties = doc["external_ties"] = ordered_json::array();
  for (const auto& t : g.external_ties)
    ties.push_back({{"id", t.id}, {"bus", t.bus_id}, {"import_max", t.import_max}, {"export_max", t.export_max},
                    {"import_price", t.import_price}, {"export_price", t.export_price}});
  return doc.dump(1) + "\n";
}

void save_grid(const Grid& grid, const std::filesystem::path& path) { write_file(path, grid_to_json(grid)); }

TimeSeriesTable parse_timeseries(std::istream& in, const std::string& source, const std::set<std::string>* known_ids) {
  struct Run {
    TimePoint start;
    std::size_t first_row = 0;
    std::vector<double> values;
  };
  std::map<std::string, Run> runs;

  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "empty file");
  ++row;
  if (trim(line) != "timestamp,entity_id,value_mw")
    throw ParseError(source, row, "expected header \"timestamp,entity_id,value_mw\"");

  while (std::getline(in, line)) {
    ++row;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string_view::npos || text.find(',', c2 + 1) != std::string_view::npos)
      throw ParseError(source, row, "expected 3 comma-separated fields");
    const auto stamp = trim(text.substr(0, c1));
    const std::string id(trim(text.substr(c1 + 1, c2 - c1 - 1)));
    const auto value_text = trim(text.substr(c2 + 1));

    const auto t = parse_iso_hour(stamp);
    if (!t) throw ParseError(source, row, "malformed timestamp \"" + std::string(stamp) + "\"");
    if (id.empty()) throw ParseError(source, row, "empty entity_id");
    if (known_ids && !known_ids->contains(id)) throw ParseError(source, row, "unknown entity_id \"" + id + "\"");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc{} || ptr != value_text.data() + value_text.size() || !std::isfinite(value))
      throw ParseError(source, row, "malformed value \"" + std::string(value_text) + "\"");

    auto [it, fresh] = runs.try_emplace(id);
    auto& run = it->second;
    if (fresh) {
      run.start = *t;
      run.first_row = row;
    } else {
      const auto expected = run.start + std::chrono::hours(run.values.size());
      if (*t < expected) throw ParseError(source, row, "duplicate or out-of-order timestamp for \"" + id + "\"");
      if (*t > expected)
        throw ParseError(source, row, "gap before " + format_iso_hour(*t) + " for \"" + id + "\" (expected " +
                                          format_iso_hour(expected) + ")");
    }
    run.values.push_back(value);
  }
  if (runs.empty()) throw ParseError(source, row, "no data rows");

  TimeSeriesTable table;
  const auto& first_id = runs.begin()->first;
  const auto first_start = runs.begin()->second.start;
  const auto first_size = runs.begin()->second.values.size();
  table.calendar = HourlyCalendar(first_start, first_size);
  for (auto& [id, run] : runs) {
    if (run.start != first_start || run.values.size() != first_size)
      throw ParseError(source, run.first_row,
                       "entity \"" + id + "\" spans " + format_iso_hour(run.start) + " + " +
                           std::to_string(run.values.size()) + " h, not aligned with \"" + first_id + "\"");
    table.values.emplace(id, std::move(run.values));
  }
  return table;
}

TimeSeriesTable load_timeseries(const std::filesystem::path& path, const std::set<std::string>* known_ids) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_timeseries(in, path.string(), known_ids);
}

void write_timeseries(std::ostream& out, const HourlyCalendar& calendar, const SeriesMap& values) {
  out << "timestamp,entity_id,value_mw\n";
  for (std::size_t t = 0; t < calendar.size(); ++t) {
    const auto stamp = calendar.iso(t);
    for (const auto& [id, series] : values) out << stamp << ',' << id << ',' << format_number(series.at(t)) << '\n';
  }
}

void save_timeseries(const std::filesystem::path& path, const HourlyCalendar& calendar, const SeriesMap& values) {
  std::ostringstream out;
  write_timeseries(out, calendar, values);
  write_file(path, out.str());
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace gridsim
