#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>

#include "gridsim/calendar.hpp"
#include "gridsim/grid.hpp"
#include "gridsim/scenario.hpp"

namespace gridsim {

// Grid documents are JSON:
//   { "name", "base_mva", "unserved_energy_penalty",
//     "buses":      [{ "id", "zone", "reference", "load_share" }],
//     "lines":      [{ "id", "from", "to", "susceptance", "flow_min", "flow_max" }],
//     "interfaces": [{ "id", "members": [{ "line", "direction" }], "flow_min", "flow_max" }],
//     "thermal_generators": [{ "id", "bus", "p_min", "p_max", "ramp_down"?, "ramp_up"?,
//                              "cost_const", "cost_linear", "category"? }],
//     "renewable_units":    [{ "id", "bus", "kind", "capacity", "dispatch_cost", "dispatchable"? }],
//     "storage_units":      [{ "id", "bus", "energy_min", "energy_max", "power_limit",
//                              "round_trip_efficiency", "cycle_cost"?, "initial_soc"? }],
//     "external_ties":      [{ "id", "bus", "import_max", "export_max", "import_price", "export_price" }] }
// Absent ramp limits are unbounded. Power in MW, energy in MWh, money in $.

// Throws Error on malformed JSON and ValidationError listing every schema and
// model fault otherwise.
Grid parse_grid(std::string_view text, const std::string& source = "<memory>");
Grid load_grid(const std::filesystem::path& path);
std::string grid_to_json(const Grid& grid);
void save_grid(const Grid& grid, const std::filesystem::path& path);

// Hourly series in long CSV form: header "timestamp,entity_id,value_mw".
struct TimeSeriesTable {
  HourlyCalendar calendar;
  SeriesMap values;
};

// Each entity must run hourly without gaps or duplicates, and all entities
// must cover the same span. Faults raise ParseError with the 1-based row.
// When known_ids is given, other ids are rejected.
TimeSeriesTable parse_timeseries(std::istream& in, const std::string& source,
                                 const std::set<std::string>* known_ids = nullptr);
TimeSeriesTable load_timeseries(const std::filesystem::path& path, const std::set<std::string>* known_ids = nullptr);
void write_timeseries(std::ostream& out, const HourlyCalendar& calendar, const SeriesMap& values);
void save_timeseries(const std::filesystem::path& path, const HourlyCalendar& calendar, const SeriesMap& values);

// Shortest round-trip decimal form; -0 prints as 0 and non-finite values as
// "nan", "inf" or "-inf".
std::string format_number(double value);

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);
// Throws Error naming the path when the file cannot be written.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace gridsim
