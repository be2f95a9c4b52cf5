#include <benchmark/benchmark.h>

#include <random>

#include "gridsim/dispatch.hpp"
#include "gridsim/io.hpp"
#include "gridsim/lp.hpp"
#include "gridsim/run.hpp"

namespace {

const std::filesystem::path kData = GRIDSIM_DATA_DIR;

// Dense random box-constrained LP with n variables and n/2 rows.
gridsim::LinearProgram dense_lp(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  gridsim::LinearProgram lp;
  for (std::size_t j = 0; j < n; ++j) lp.add_variable(0.0, 10.0, u(rng));
  for (std::size_t i = 0; i < n / 2; ++i) {
    std::vector<gridsim::Term> terms;
    for (std::size_t j = 0; j < n; ++j) terms.push_back({j, u(rng)});
    lp.add_constraint(std::move(terms), gridsim::Relation::LessEqual, 5.0);
  }
  return lp;
}

void BM_DenseLp(benchmark::State& state) {
  const auto lp = dense_lp(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gridsim::solve_lp(lp).objective_value);
}
BENCHMARK(BM_DenseLp)->Arg(20)->Arg(80)->Arg(200)->Unit(benchmark::kMillisecond);

struct NysDay {
  gridsim::Grid grid;
  gridsim::ScenarioSeries scenario;
};

const NysDay& nys_day() {
  static const NysDay day = [] {
    auto config = gridsim::load_run_config(kData / "configs" / "nys2030_week.json");
    auto recipe = *config.scenarios.front().recipe;
    recipe.hours = 24;
    NysDay d;
    d.grid = gridsim::load_grid(config.grid);
    d.scenario = gridsim::generate_scenario(d.grid, recipe);
    return d;
  }();
  return day;
}

void BM_NysWindowBuild(benchmark::State& state) {
  const auto& day = nys_day();
  for (auto _ : state)
    benchmark::DoNotOptimize(gridsim::build_opf(day.grid, day.scenario, gridsim::initial_state(day.grid), {24, 24}));
}
BENCHMARK(BM_NysWindowBuild)->Unit(benchmark::kMillisecond);

void BM_NysWindowSolve(benchmark::State& state) {
  const auto& day = nys_day();
  const auto model = gridsim::build_opf(day.grid, day.scenario, gridsim::initial_state(day.grid), {24, 24});
  gridsim::SolveOptions options;
  options.refactor_interval = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    const auto sol = gridsim::solve_lp(model.lp, options);
    state.counters["pivots"] = static_cast<double>(sol.iterations);
  }
}
BENCHMARK(BM_NysWindowSolve)->Arg(50)->Arg(100)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
