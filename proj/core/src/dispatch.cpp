#include "gridsim/dispatch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "gridsim/error.hpp"

namespace gridsim {

void HorizonConfig::check() const {
  if (horizon_hours == 0) throw Error("horizon_hours must be at least 1");
  if (advance_hours == 0 || advance_hours > horizon_hours)
    throw Error("advance_hours must lie in [1, horizon_hours]");
}

SystemState initial_state(const Grid& grid) {
  SystemState state;
  for (const auto& s : grid.storage_units)
    state.storage_soc[s.id] = std::clamp(s.initial_soc, s.energy_min, s.energy_max);
  return state;
}

namespace {

const std::vector<double>* find_series(const SeriesMap& map, const std::string& id, std::size_t hours,
                                       const char* what) {
  auto it = map.find(id);
  if (it == map.end()) return nullptr;
  if (it->second.size() != hours)
    throw Error(std::string(what) + " '" + id + "' has " + std::to_string(it->second.size()) +
                " values for a window of " + std::to_string(hours) + " hours");
  return &it->second;
}

std::string tag(const std::string& kind, const std::string& id, std::size_t t) {
  return kind + "[" + id + "," + std::to_string(t) + "]";
}

std::vector<std::vector<double>> gather(const std::vector<double>& x, const std::vector<std::size_t>& block,
                                        std::size_t hours) {
  const std::size_t n = hours == 0 ? 0 : block.size() / hours;
  std::vector<std::vector<double>> out(n, std::vector<double>(hours));
  for (std::size_t e = 0; e < n; ++e)
    for (std::size_t t = 0; t < hours; ++t) out[e][t] = x[block[e * hours + t]];
  return out;
}

void check_state(const Grid& grid, const SystemState& state) {
  const double tol = 1e-6;
  for (const auto& s : grid.storage_units) {
    auto it = state.storage_soc.find(s.id);
    if (it == state.storage_soc.end()) throw Error("state: no SoC for storage '" + s.id + "'");
    if (it->second < s.energy_min - tol * std::max(1.0, s.energy_max) ||
        it->second > s.energy_max + tol * std::max(1.0, s.energy_max))
      throw Error("state: SoC of '" + s.id + "' outside [energy_min, energy_max]");
  }
  for (const auto& [id, p] : state.prev_dispatch) {
    auto it = std::find_if(grid.thermal_generators.begin(), grid.thermal_generators.end(),
                           [&](const auto& g) { return g.id == id; });
    if (it == grid.thermal_generators.end()) throw Error("state: previous dispatch for unknown generator '" + id + "'");
    const double tol_p = tol * std::max(1.0, it->p_max);
    if (p < it->p_min - tol_p || p > it->p_max + tol_p)
      throw Error("state: previous dispatch of '" + id + "' outside [p_min, p_max]");
  }
}

}  // namespace

WindowModel build_opf(const Grid& grid, const ScenarioSeries& window, const SystemState& state,
                      const HorizonConfig& cfg) {
  cfg.check();
  const std::size_t T = window.hours();
  if (T == 0) throw Error("empty window");
  if (T > cfg.horizon_hours)
    throw Error("window of " + std::to_string(T) + " hours exceeds horizon_hours " + std::to_string(cfg.horizon_hours));
  check_state(grid, state);

  const auto buses = bus_index(grid);
  const auto lines = line_index(grid);
  const auto ref = reference_bus(grid);
  if (!ref) throw Error("grid has no reference bus");
  auto bus_of = [&](const std::string& id) {
    auto it = buses.find(id);
    if (it == buses.end()) throw Error("unknown bus '" + id + "'");
    return it->second;
  };
  const double M = grid.unserved_energy_penalty;
  const std::size_t B = grid.buses.size();

  WindowModel model;
  auto& lp = model.lp;
  auto& ix = model.index;
  ix.hours = T;
  ix.calendar = window.calendar;

  for (const auto& entry : window.available_renewable) {
    const auto& id = entry.first;
    if (std::none_of(grid.renewable_units.begin(), grid.renewable_units.end(),
                     [&](const auto& u) { return u.id == id && u.dispatchable; }))
      throw Error("availability given for '" + id + "', which is not a dispatchable renewable unit");
  }

  // Net demand per bus-hour: the right-hand side before renewable terms.
  ix.net_demand.assign(B * T, 0.0);
  for (const auto& [id, series] : window.load) {
    const auto b = bus_of(id);
    find_series(window.load, id, T, "load");
    for (std::size_t t = 0; t < T; ++t) ix.net_demand[b * T + t] += series[t];
  }
  for (const auto& [id, series] : window.negative_load) {
    const auto b = bus_of(id);
    find_series(window.negative_load, id, T, "negative load");
    for (std::size_t t = 0; t < T; ++t) ix.net_demand[b * T + t] -= series[t];
  }

  std::vector<std::vector<Term>> balance(B * T);
  std::vector<double> rhs = ix.net_demand;

  // Thermal units with ramping rows.
  for (std::size_t g = 0; g < grid.thermal_generators.size(); ++g) {
    const auto& gen = grid.thermal_generators[g];
    const auto b = bus_of(gen.bus_id);
    for (std::size_t t = 0; t < T; ++t) {
      const auto v = lp.add_variable(gen.p_min, gen.p_max, gen.cost_linear, tag("p", gen.id, t));
      ix.thermal.push_back(v);
      balance[b * T + t].push_back({v, 1.0});
      lp.add_objective_constant(gen.cost_const);
    }
    const bool up = std::isfinite(gen.ramp_up), down = std::isfinite(gen.ramp_down);
    if (!up && !down) continue;
    auto prev = state.prev_dispatch.find(gen.id);
    if (prev != state.prev_dispatch.end()) {
      const auto v0 = ix.thermal[g * T];
      if (up) lp.add_constraint({{v0, 1.0}}, Relation::LessEqual, prev->second + gen.ramp_up, tag("ramp_up", gen.id, 0));
      if (down)
        lp.add_constraint({{v0, 1.0}}, Relation::GreaterEqual, prev->second + gen.ramp_down, tag("ramp_down", gen.id, 0));
    }
    for (std::size_t t = 1; t < T; ++t) {
      const auto v = ix.thermal[g * T + t], u = ix.thermal[g * T + t - 1];
      if (up) lp.add_constraint({{v, 1.0}, {u, -1.0}}, Relation::LessEqual, gen.ramp_up, tag("ramp_up", gen.id, t));
      if (down)
        lp.add_constraint({{v, 1.0}, {u, -1.0}}, Relation::GreaterEqual, gen.ramp_down, tag("ramp_down", gen.id, t));
    }
  }

  // Dispatchable renewables: curtailment bounded by availability.
  for (std::size_t r = 0; r < grid.renewable_units.size(); ++r) {
    const auto& unit = grid.renewable_units[r];
    if (!unit.dispatchable) continue;
    const auto b = bus_of(unit.bus_id);
    const auto* avail = find_series(window.available_renewable, unit.id, T, "availability");
    ix.renewable_units.push_back(r);
    for (std::size_t t = 0; t < T; ++t) {
      const double a = avail ? (*avail)[t] : 0.0;
      if (!std::isfinite(a) || a < 0.0) throw Error("availability of '" + unit.id + "' is negative or not finite");
      if (a > unit.capacity * (1.0 + 1e-9))
        throw Error("availability of '" + unit.id + "' (" + std::to_string(a) + " MW) exceeds capacity " +
                    std::to_string(unit.capacity) + " at " + window.calendar.iso(t));
      ix.available.push_back(a);
      // Cost C(Pbar - p) = C Pbar - C p.
      const auto v = lp.add_variable(0.0, a, -unit.dispatch_cost, tag("curtail", unit.id, t));
      lp.add_objective_constant(unit.dispatch_cost * a);
      ix.curtailment.push_back(v);
      balance[b * T + t].push_back({v, -1.0});
      rhs[b * T + t] -= a;
    }
  }

  // Angles, reference fixed at zero.
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t) {
      const bool fixed = b == *ref;
      ix.angle.push_back(lp.add_variable(fixed ? 0.0 : -kInfinity, fixed ? 0.0 : kInfinity, 0.0,
                                         tag("theta", grid.buses[b].id, t)));
    }

  // Line limits as bounds, DC flow as rows.
  for (std::size_t l = 0; l < grid.lines.size(); ++l) {
    const auto& line = grid.lines[l];
    const auto f = bus_of(line.from_bus), to = bus_of(line.to_bus);
    const double k = grid.base_mva * line.susceptance;
    for (std::size_t t = 0; t < T; ++t) {
      const auto v = lp.add_variable(line.flow_min, line.flow_max, 0.0, tag("flow", line.id, t));
      ix.flow.push_back(v);
      balance[f * T + t].push_back({v, -1.0});
      balance[to * T + t].push_back({v, 1.0});
      ix.flow_row.push_back(lp.add_constraint(
          {{v, 1.0}, {ix.angle[f * T + t], -k}, {ix.angle[to * T + t], k}}, Relation::Equal, 0.0,
          tag("dc_flow", line.id, t)));
    }
  }

  // Interfaces.
  for (const auto& itf : grid.interfaces) {
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<Term> terms;
      for (const auto& m : itf.members) {
        auto it = lines.find(m.line_id);
        if (it == lines.end()) throw Error("interface '" + itf.id + "' references unknown line '" + m.line_id + "'");
        terms.push_back({ix.flow[it->second * T + t], static_cast<double>(m.direction)});
      }
      if (std::isfinite(itf.flow_max))
        lp.add_constraint(terms, Relation::LessEqual, itf.flow_max, tag("interface_max", itf.id, t));
      if (std::isfinite(itf.flow_min))
        lp.add_constraint(terms, Relation::GreaterEqual, itf.flow_min, tag("interface_min", itf.id, t));
    }
  }

  // Storage.
  for (const auto& s : grid.storage_units) {
    const auto b = bus_of(s.bus_id);
    const double root = std::sqrt(s.round_trip_efficiency);
    const double s0 = std::clamp(state.storage_soc.at(s.id), s.energy_min, s.energy_max);
    std::size_t prev_soc = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto psc = lp.add_variable(-s.power_limit, 0.0, -s.cycle_cost, tag("psc", s.id, t));
      const auto psd = lp.add_variable(0.0, s.power_limit, s.cycle_cost, tag("psd", s.id, t));
      const auto ps = lp.add_variable(-s.power_limit, s.power_limit, 0.0, tag("ps", s.id, t));
      const auto soc = lp.add_variable(s.energy_min, s.energy_max, 0.0, tag("soc", s.id, t));
      ix.charge.push_back(psc);
      ix.discharge.push_back(psd);
      ix.net_storage.push_back(ps);
      ix.soc.push_back(soc);
      balance[b * T + t].push_back({ps, 1.0});

      std::vector<Term> dyn = {{soc, 1.0}, {psc, root}, {psd, 1.0 / root}};
      double dyn_rhs = s0;
      if (t > 0) {
        dyn.push_back({prev_soc, -1.0});
        dyn_rhs = 0.0;
      }
      ix.storage_row.push_back(lp.add_constraint(std::move(dyn), Relation::Equal, dyn_rhs, tag("soc_dyn", s.id, t)));
      lp.add_constraint({{ps, 1.0}, {psc, -1.0}, {psd, -1.0}}, Relation::Equal, 0.0, tag("net", s.id, t));
      lp.add_constraint({{psd, 1.0}, {psc, -1.0}}, Relation::LessEqual, s.power_limit, tag("power", s.id, t));
      prev_soc = soc;
    }
  }

  // External ties.
  for (const auto& tie : grid.external_ties) {
    const auto b = bus_of(tie.bus_id);
    const auto* prices = find_series(window.tie_prices, tie.id, T, "tie prices");
    for (std::size_t t = 0; t < T; ++t) {
      const double buy = prices ? (*prices)[t] : tie.import_price;
      const double sell = prices ? (*prices)[t] : tie.export_price;
      const auto imp = lp.add_variable(0.0, tie.import_max, buy, tag("import", tie.id, t));
      const auto exp = lp.add_variable(0.0, tie.export_max, -sell, tag("export", tie.id, t));
      ix.imports.push_back(imp);
      ix.exports.push_back(exp);
      balance[b * T + t].push_back({imp, 1.0});
      balance[b * T + t].push_back({exp, -1.0});
    }
  }

  // Penalised slacks keep every window feasible, then nodal balance.
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      const auto l = lp.add_variable(0.0, kInfinity, M, tag("unmet", grid.buses[b].id, t));
      const auto x = lp.add_variable(0.0, kInfinity, M, tag("excess", grid.buses[b].id, t));
      ix.unmet.push_back(l);
      ix.excess.push_back(x);
      balance[b * T + t].push_back({l, 1.0});
      balance[b * T + t].push_back({x, -1.0});
    }
  }
  ix.balance_row.resize(B * T);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      ix.balance_row[b * T + t] = lp.add_constraint(std::move(balance[b * T + t]), Relation::Equal, rhs[b * T + t],
                                                    tag("balance", grid.buses[b].id, t));
  return model;
}

double DispatchSolution::total_cost() const {
  double sum = 0.0;
  for (double c : hourly_cost) sum += c;
  return sum;
}

namespace {

template <typename F>
void for_each_matrix(DispatchSolution& s, F&& f) {
  for (auto* m : {&s.thermal, &s.available, &s.curtailment, &s.dispatched_renewable, &s.flow, &s.angle, &s.charge,
                  &s.discharge, &s.net_storage, &s.soc, &s.unmet, &s.excess, &s.imports, &s.exports})
    f(*m);
}

void slice_rows(std::vector<std::vector<double>>& m, std::size_t begin, std::size_t count) {
  for (auto& row : m)
    row = std::vector<double>(row.begin() + static_cast<std::ptrdiff_t>(begin),
                              row.begin() + static_cast<std::ptrdiff_t>(begin + count));
}

void append_rows(std::vector<std::vector<double>>& m, const std::vector<std::vector<double>>& next) {
  if (m.empty()) {
    m = next;
    return;
  }
  if (m.size() != next.size()) throw Error("cannot append solutions with different entity counts");
  for (std::size_t i = 0; i < m.size(); ++i) m[i].insert(m[i].end(), next[i].begin(), next[i].end());
}

}  // namespace

DispatchSolution DispatchSolution::slice(std::size_t begin, std::size_t count) const {
  DispatchSolution out = *this;
  out.calendar = calendar.slice(begin, count);
  if (begin > 0)
    for (std::size_t k = 0; k < soc.size(); ++k) out.initial_soc[k] = soc[k][begin - 1];
  for_each_matrix(out, [&](auto& m) { slice_rows(m, begin, count); });
  out.hourly_cost.assign(hourly_cost.begin() + static_cast<std::ptrdiff_t>(begin),
                         hourly_cost.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

void DispatchSolution::append(const DispatchSolution& next) {
  if (hours() == 0 && calendar.start() == TimePoint{}) {
    *this = next;
    return;
  }
  if (next.calendar.start() != calendar.at(hours())) throw Error("appended solution does not continue the calendar");
  calendar = HourlyCalendar(calendar.start(), hours() + next.hours());
  const std::vector<std::vector<double>>* src[] = {&next.thermal, &next.available, &next.curtailment,
                                                   &next.dispatched_renewable, &next.flow, &next.angle,
                                                   &next.charge, &next.discharge, &next.net_storage, &next.soc,
                                                   &next.unmet, &next.excess, &next.imports, &next.exports};
  std::size_t i = 0;
  for_each_matrix(*this, [&](auto& m) { append_rows(m, *src[i++]); });
  hourly_cost.insert(hourly_cost.end(), next.hourly_cost.begin(), next.hourly_cost.end());
  window_objectives.insert(window_objectives.end(), next.window_objectives.begin(), next.window_objectives.end());
  window_starts.insert(window_starts.end(), next.window_starts.begin(), next.window_starts.end());
}

LmpSeries LmpSeries::slice(std::size_t begin, std::size_t count) const {
  LmpSeries out = *this;
  out.calendar = calendar.slice(begin, count);
  slice_rows(out.price, begin, count);
  return out;
}

void LmpSeries::append(const LmpSeries& next) {
  if (calendar.size() == 0 && calendar.start() == TimePoint{}) {
    *this = next;
    return;
  }
  if (next.calendar.start() != calendar.at(calendar.size())) throw Error("appended prices do not continue the calendar");
  calendar = HourlyCalendar(calendar.start(), calendar.size() + next.calendar.size());
  append_rows(price, next.price);
}

DispatchSolution extract_solution(const Grid& grid, const LinearProgram& lp, const LpSolution& solution,
                                  const IndexMap& ix) {
  if (solution.status != LpStatus::Optimal)
    throw Error("window starting " + (ix.calendar.size() ? ix.calendar.iso(0) : std::string("?")) + " is " +
                std::string(to_string(solution.status)));
  const auto& x = solution.primal;
  const std::size_t T = ix.hours;

  DispatchSolution out;
  out.calendar = ix.calendar;
  out.thermal = gather(x, ix.thermal, T);
  out.curtailment = gather(x, ix.curtailment, T);
  out.flow = gather(x, ix.flow, T);
  out.angle = gather(x, ix.angle, T);
  out.charge = gather(x, ix.charge, T);
  out.discharge = gather(x, ix.discharge, T);
  out.net_storage = gather(x, ix.net_storage, T);
  out.soc = gather(x, ix.soc, T);
  out.unmet = gather(x, ix.unmet, T);
  out.excess = gather(x, ix.excess, T);
  out.imports = gather(x, ix.imports, T);
  out.exports = gather(x, ix.exports, T);

  out.available.assign(ix.renewable_units.size(), std::vector<double>(T));
  out.dispatched_renewable = out.available;
  for (std::size_t r = 0; r < ix.renewable_units.size(); ++r) {
    out.renewable_ids.push_back(grid.renewable_units[ix.renewable_units[r]].id);
    for (std::size_t t = 0; t < T; ++t) {
      out.available[r][t] = ix.available[r * T + t];
      out.dispatched_renewable[r][t] = out.available[r][t] - out.curtailment[r][t];
    }
  }

  // Initial SoC recovered from the first dynamics row: s(0) = rhs.
  for (std::size_t k = 0; k < grid.storage_units.size(); ++k)
    out.initial_soc.push_back(lp.constraint(ix.storage_row[k * T]).rhs);

  // Attribute every cost term to its hour; the sum equals the LP objective.
  out.hourly_cost.assign(T, 0.0);
  auto add_block = [&](const std::vector<std::size_t>& block) {
    for (std::size_t i = 0; i < block.size(); ++i) out.hourly_cost[i % T] += lp.variable(block[i]).cost * x[block[i]];
  };
  for (const auto* block : {&ix.thermal, &ix.curtailment, &ix.charge, &ix.discharge, &ix.unmet, &ix.excess,
                            &ix.imports, &ix.exports})
    add_block(*block);
  for (const auto& gen : grid.thermal_generators)
    for (std::size_t t = 0; t < T; ++t) out.hourly_cost[t] += gen.cost_const;
  for (std::size_t r = 0; r < ix.renewable_units.size(); ++r) {
    const double c = grid.renewable_units[ix.renewable_units[r]].dispatch_cost;
    for (std::size_t t = 0; t < T; ++t) out.hourly_cost[t] += c * ix.available[r * T + t];
  }
  out.window_objectives = {solution.objective_value};
  out.window_starts = {0};
  return out;
}

LmpSeries extract_lmps(const Grid& grid, const LpSolution& solution, const IndexMap& ix) {
  if (solution.status != LpStatus::Optimal) throw Error("prices requested from a non-optimal solution");
  const std::size_t T = ix.hours;
  if (ix.balance_row.size() != grid.buses.size() * T) throw Error("index map has no balance rows for this grid");
  LmpSeries out;
  out.calendar = ix.calendar;
  out.price.assign(grid.buses.size(), std::vector<double>(T));
  for (std::size_t b = 0; b < grid.buses.size(); ++b) {
    out.bus_ids.push_back(grid.buses[b].id);
    for (std::size_t t = 0; t < T; ++t) {
      const double y = solution.dual.at(ix.balance_row[b * T + t]);
      out.price[b][t] = y == 0.0 ? 0.0 : y;  // no negative zero in outputs
    }
  }
  return out;
}

SimulationResult simulate(const Grid& grid, const ScenarioSeries& scenario, const HorizonConfig& cfg,
                          const SystemState& initial, const SolveOptions& solve) {
  cfg.check();
  const std::size_t n = scenario.hours();
  if (n == 0) throw Error("scenario has no hours");

  SimulationResult result;
  SystemState state = initial;
  for (std::size_t start = 0; start < n; start += cfg.advance_hours) {
    const std::size_t len = std::min(cfg.horizon_hours, n - start);
    const std::size_t commit = std::min(cfg.advance_hours, len);
    const auto window = scenario.slice(start, len);
    auto model = build_opf(grid, window, state, cfg);
    const auto sol = solve_lp(model.lp, solve);
    result.lp_iterations += sol.iterations;
    if (sol.status != LpStatus::Optimal)
      throw Error("window starting at hour " + std::to_string(start) + " (" + window.calendar.iso(0) + ") is " +
                  std::string(to_string(sol.status)));

    auto dispatch = extract_solution(grid, model.lp, sol, model.index).slice(0, commit);
    dispatch.window_starts = {start};
    auto lmps = extract_lmps(grid, sol, model.index).slice(0, commit);

    for (std::size_t k = 0; k < grid.storage_units.size(); ++k)
      state.storage_soc[grid.storage_units[k].id] = dispatch.soc[k][commit - 1];
    for (std::size_t g = 0; g < grid.thermal_generators.size(); ++g)
      state.prev_dispatch[grid.thermal_generators[g].id] = dispatch.thermal[g][commit - 1];

    result.dispatch.append(dispatch);
    result.lmps.append(lmps);
  }
  result.final_state = state;
  return result;
}

std::vector<SimulationResult> simulate_batch(const Grid& grid, const std::vector<ScenarioSeries>& scenarios,
                                             const HorizonConfig& cfg, const SystemState& initial, std::size_t jobs,
                                             const SolveOptions& solve) {
  std::vector<SimulationResult> results(scenarios.size());
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, std::max<std::size_t>(1, scenarios.size()));

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::size_t failure_index = scenarios.size();

  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        results[i] = simulate(grid, scenarios[i], cfg, initial, solve);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failure_index) {
          failure_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace gridsim
