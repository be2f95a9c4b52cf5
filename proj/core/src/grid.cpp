#include "gridsim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gridsim/error.hpp"

namespace gridsim {

ValidationError::ValidationError(std::vector<std::string> issues)
    : Error([&] {
        std::string text = "validation failed:";
        for (const auto& issue : issues) text += "\n  " + issue;
        return text;
      }()),
      issues_(std::move(issues)) {}

ParseError::ParseError(std::string path, std::size_t row, const std::string& what)
    : Error(path + ":" + std::to_string(row) + ": " + what), path_(std::move(path)), row_(row) {}

std::string_view to_string(RenewableKind kind) {
  switch (kind) {
    case RenewableKind::Hydro: return "hydro";
    case RenewableKind::Solar: return "solar";
    case RenewableKind::Wind: return "wind";
  }
  return "unknown";
}

std::optional<RenewableKind> parse_renewable_kind(std::string_view text) {
  if (text == "hydro" || text == "H") return RenewableKind::Hydro;
  if (text == "solar" || text == "S") return RenewableKind::Solar;
  if (text == "wind" || text == "W") return RenewableKind::Wind;
  return std::nullopt;
}

namespace {

template <typename T>
IdIndex index_by_id(const std::vector<T>& items) {
  IdIndex out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out.emplace(items[i].id, i);
  return out;
}

class Checker {
public:
  explicit Checker(ValidationReport& report) : report_(report) {}

  void fail(const std::string& element, std::string message) {
    report_.issues.push_back({element, std::move(message)});
  }

  void require(bool condition, const std::string& element, const char* message) {
    if (!condition) fail(element, message);
  }

  template <typename T>
  void unique_ids(const std::vector<T>& items, const char* what) {
    std::set<std::string> seen;
    for (const auto& item : items) {
      if (item.id.empty()) fail(what, "empty id");
      else if (!seen.insert(item.id).second) fail(item.id, std::string("duplicate ") + what + " id");
    }
  }

  void finite(double value, const std::string& element, const char* field) {
    if (std::isnan(value)) fail(element, std::string(field) + " is NaN");
  }

private:
  ValidationReport& report_;
};

}  // namespace

IdIndex bus_index(const Grid& grid) { return index_by_id(grid.buses); }
IdIndex line_index(const Grid& grid) { return index_by_id(grid.lines); }

std::optional<std::size_t> reference_bus(const Grid& grid) {
  for (std::size_t i = 0; i < grid.buses.size(); ++i)
    if (grid.buses[i].is_reference) return i;
  return std::nullopt;
}

std::vector<std::string> zones(const Grid& grid) {
  std::set<std::string> out;
  for (const auto& bus : grid.buses) out.insert(bus.zone);
  return {out.begin(), out.end()};
}

std::vector<std::string> ValidationReport::messages() const {
  std::vector<std::string> out;
  out.reserve(issues.size());
  for (const auto& issue : issues) out.push_back(issue.element + ": " + issue.message);
  return out;
}

ValidationReport validate_grid(const Grid& grid) {
  ValidationReport report;
  Checker check(report);

  if (grid.buses.empty()) check.fail("grid", "no buses");
  check.require(grid.base_mva > 0.0, "grid", "base_mva must be positive");
  check.require(grid.unserved_energy_penalty > 0.0, "grid", "unserved_energy_penalty must be positive");

  check.unique_ids(grid.buses, "bus");
  check.unique_ids(grid.lines, "line");
  check.unique_ids(grid.interfaces, "interface");
  check.unique_ids(grid.thermal_generators, "thermal generator");
  check.unique_ids(grid.renewable_units, "renewable unit");
  check.unique_ids(grid.storage_units, "storage unit");
  check.unique_ids(grid.external_ties, "external tie");

  const auto buses = bus_index(grid);
  const auto lines = line_index(grid);
  auto bus_exists = [&](const std::string& owner, const std::string& bus_id) {
    if (!buses.contains(bus_id)) check.fail(owner, "unknown bus '" + bus_id + "'");
  };

  std::size_t references = 0;
  std::map<std::string, double> zone_share;
  for (const auto& bus : grid.buses) {
    if (bus.is_reference) ++references;
    check.require(!bus.zone.empty(), bus.id, "empty zone label");
    check.finite(bus.load_share, bus.id, "load_share");
    check.require(bus.load_share >= 0.0, bus.id, "negative load_share");
    zone_share[bus.zone] += bus.load_share;
  }
  if (!grid.buses.empty() && references == 0) check.fail("grid", "no reference bus");
  if (references > 1) check.fail("grid", "duplicate reference bus (" + std::to_string(references) + " flagged)");
  for (const auto& [zone, share] : zone_share) {
    if (share != 0.0 && std::abs(share - 1.0) > 1e-9)
      check.fail("zone " + zone, "load shares sum to " + std::to_string(share) + ", expected 1");
  }

  for (const auto& line : grid.lines) {
    bus_exists(line.id, line.from_bus);
    bus_exists(line.id, line.to_bus);
    check.require(line.from_bus != line.to_bus, line.id, "self-loop: from_bus equals to_bus");
    check.finite(line.susceptance, line.id, "susceptance");
    check.require(line.susceptance > 0.0, line.id, "susceptance must be positive");
    check.require(line.flow_min <= 0.0 && line.flow_max >= 0.0, line.id, "flow limits must satisfy flow_min <= 0 <= flow_max");
  }

  for (const auto& iface : grid.interfaces) {
    check.require(!iface.members.empty(), iface.id, "interface has no member lines");
    for (const auto& member : iface.members) {
      if (!lines.contains(member.line_id)) check.fail(iface.id, "unknown line '" + member.line_id + "'");
      check.require(member.direction == 1 || member.direction == -1, iface.id, "member direction must be +1 or -1");
    }
    check.require(iface.flow_min <= iface.flow_max, iface.id, "flow_min exceeds flow_max");
  }

  for (const auto& gen : grid.thermal_generators) {
    bus_exists(gen.id, gen.bus_id);
    check.finite(gen.p_min, gen.id, "p_min");
    check.finite(gen.p_max, gen.id, "p_max");
    check.require(0.0 <= gen.p_min && gen.p_min <= gen.p_max, gen.id, "requires 0 <= p_min <= p_max");
    check.require(gen.ramp_down <= 0.0 && gen.ramp_up >= 0.0, gen.id, "requires ramp_down <= 0 <= ramp_up");
    check.require(gen.cost_linear >= 0.0, gen.id, "negative cost_linear");
    check.require(gen.cost_linear < grid.unserved_energy_penalty, gen.id,
                  "cost_linear must be below unserved_energy_penalty");
  }

  for (const auto& unit : grid.renewable_units) {
    bus_exists(unit.id, unit.bus_id);
    check.require(unit.capacity > 0.0, unit.id, "capacity must be positive");
    check.require(unit.dispatch_cost >= 0.0, unit.id, "negative dispatch_cost");
    if (unit.kind != RenewableKind::Hydro)
      check.require(unit.dispatch_cost == 0.0, unit.id, "wind and solar dispatch_cost must be 0");
    check.require(unit.dispatch_cost < grid.unserved_energy_penalty, unit.id,
                  "dispatch_cost must be below unserved_energy_penalty");
  }

  for (const auto& unit : grid.storage_units) {
    bus_exists(unit.id, unit.bus_id);
    check.require(0.0 <= unit.energy_min && unit.energy_min <= unit.initial_soc && unit.initial_soc <= unit.energy_max,
                  unit.id, "requires 0 <= energy_min <= initial_soc <= energy_max");
    check.require(unit.power_limit > 0.0, unit.id, "power_limit must be positive");
    check.require(unit.round_trip_efficiency > 0.0 && unit.round_trip_efficiency <= 1.0, unit.id,
                  "round_trip_efficiency must lie in (0, 1]");
    check.require(unit.cycle_cost >= 0.0, unit.id, "negative cycle_cost");
  }

  for (const auto& tie : grid.external_ties) {
    bus_exists(tie.id, tie.bus_id);
    check.require(tie.import_max >= 0.0 && tie.export_max >= 0.0, tie.id, "import_max and export_max must be >= 0");
    check.require(tie.export_price <= tie.import_price, tie.id, "export_price above import_price allows arbitrage");
  }

  // Connectivity over the undirected line graph.
  if (!grid.buses.empty()) {
    std::vector<std::vector<std::size_t>> adjacency(grid.buses.size());
    for (const auto& line : grid.lines) {
      auto a = buses.find(line.from_bus);
      auto b = buses.find(line.to_bus);
      if (a == buses.end() || b == buses.end()) continue;
      adjacency[a->second].push_back(b->second);
      adjacency[b->second].push_back(a->second);
    }
    std::vector<bool> seen(grid.buses.size(), false);
    std::vector<std::size_t> stack{reference_bus(grid).value_or(0)};
    seen[stack.back()] = true;
    while (!stack.empty()) {
      auto at = stack.back();
      stack.pop_back();
      for (auto next : adjacency[at]) {
        if (!seen[next]) {
          seen[next] = true;
          stack.push_back(next);
        }
      }
    }
    for (std::size_t i = 0; i < grid.buses.size(); ++i)
      if (!seen[i]) check.fail(grid.buses[i].id, "bus is not connected to the reference bus");
  }

  return report;
}

double interface_flow(const std::map<std::string, double>& line_flows, const Interface& interface) {
  double total = 0.0;
  for (const auto& member : interface.members) {
    auto it = line_flows.find(member.line_id);
    if (it == line_flows.end())
      throw Error("interface '" + interface.id + "': no flow for line '" + member.line_id + "'");
    total += member.direction * it->second;
  }
  return total;
}

}  // namespace gridsim
