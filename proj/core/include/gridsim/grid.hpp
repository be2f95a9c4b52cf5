#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gridsim {

// Static network model. Units: MW, MWh, $/MWh throughout; angles in radians.

struct Bus {
  std::string id;
  std::string zone;
  bool is_reference = false;
  // Share of the zonal load assigned to this bus. Shares within a zone sum to 1
  // when any bus of the zone carries load.
  double load_share = 0.0;
};

// DC line: flow = base_mva * susceptance * (theta_from - theta_to).
struct Line {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double susceptance = 0.0;
  double flow_min = 0.0;
  double flow_max = 0.0;
};

struct InterfaceMember {
  std::string line_id;
  int direction = 1;  // +1 or -1
};

// Aggregate transfer limit over a signed set of lines.
struct Interface {
  std::string id;
  std::vector<InterfaceMember> members;
  double flow_min = 0.0;
  double flow_max = 0.0;
};

struct ThermalGenerator {
  std::string id;
  std::string bus_id;
  double p_min = 0.0;
  double p_max = 0.0;
  // Signed hour-to-hour change limits: ramp_down <= p(t) - p(t-1) <= ramp_up.
  double ramp_down = -std::numeric_limits<double>::infinity();
  double ramp_up = std::numeric_limits<double>::infinity();
  double cost_const = 0.0;   // $/h
  double cost_linear = 0.0;  // $/MWh
  std::string category = "thermal";
};

enum class RenewableKind { Hydro, Solar, Wind };

std::string_view to_string(RenewableKind kind);
std::optional<RenewableKind> parse_renewable_kind(std::string_view text);

struct RenewableUnit {
  std::string id;
  std::string bus_id;
  RenewableKind kind = RenewableKind::Wind;
  double capacity = 0.0;
  double dispatch_cost = 0.0;
  // Non-dispatchable units enter scenarios as negative load at their bus.
  bool dispatchable = true;
};

struct StorageUnit {
  std::string id;
  std::string bus_id;
  double energy_min = 0.0;
  double energy_max = 0.0;
  double power_limit = 0.0;
  double round_trip_efficiency = 1.0;
  double cycle_cost = 1.0;  // $/MW on both charge and discharge
  double initial_soc = 0.0;
};

// Price-taking connection to a neighbouring market.
struct ExternalTie {
  std::string id;
  std::string bus_id;
  double import_max = 0.0;
  double export_max = 0.0;
  double import_price = 0.0;
  double export_price = 0.0;
};

struct Grid {
  std::string name;
  double base_mva = 100.0;
  double unserved_energy_penalty = 10'000.0;

  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Interface> interfaces;
  std::vector<ThermalGenerator> thermal_generators;
  std::vector<RenewableUnit> renewable_units;
  std::vector<StorageUnit> storage_units;
  std::vector<ExternalTie> external_ties;
};

using IdIndex = std::unordered_map<std::string, std::size_t>;

// Position lookups by id. Duplicate ids keep the first occurrence.
IdIndex bus_index(const Grid& grid);
IdIndex line_index(const Grid& grid);

// Index of the angle reference bus (the first flagged bus).
std::optional<std::size_t> reference_bus(const Grid& grid);

// Sorted, de-duplicated zone labels.
std::vector<std::string> zones(const Grid& grid);

struct ValidationIssue {
  std::string element;  // offending element id, or "grid"
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const noexcept { return issues.empty(); }
  std::vector<std::string> messages() const;
};

// Checks every structural invariant of the model, including connectivity of
// the line graph and presence of exactly one reference bus. Never throws.
ValidationReport validate_grid(const Grid& grid);

// Signed sum of member line flows. Throws Error naming the first member line
// whose flow is missing.
double interface_flow(const std::map<std::string, double>& line_flows, const Interface& interface);

}  // namespace gridsim
