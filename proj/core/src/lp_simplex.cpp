// Bounded-variable primal revised simplex.
//
// Every row i is given a logical variable s_i so the working system is
// A x - s = 0 with l <= (x, s) <= u; the row relation only shapes the bounds
// of s_i. Phase 1 minimises the sum of bound violations of basic variables,
// phase 2 the true objective. The basis is factorised with KLU and updated
// in product form between refactorisations.
//
// Duals: with the logical column equal to -e_i, the reduced cost of s_i is
// y_i, which is the sensitivity of the objective to the bound on s_i, i.e. to
// the row's right-hand side. That gives dual = d(objective)/d(rhs) for every
// relation without sign bookkeeping.

#include <klu.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gridsim/lp.hpp"

namespace gridsim {
namespace {

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, Free, Fixed };

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-14;
constexpr std::size_t kDegenerateLimit = 60;

double power_of_two_near(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) return 1.0;
  return std::ldexp(1.0, static_cast<int>(std::lround(std::log2(value))));
}

struct Eta {
  int pivot = 0;
  double pivot_value = 1.0;
  std::vector<int> index;
  std::vector<double> value;
};

class Simplex {
public:
  Simplex(const LinearProgram& lp, const SolveOptions& options);
  ~Simplex();
  Simplex(const Simplex&) = delete;
  Simplex& operator=(const Simplex&) = delete;
  LpSolution run();

private:
  using Vector = std::vector<double>;

  void build(const LinearProgram& lp);
  void compute_scaling(const LinearProgram& lp);

  double dot_column(std::size_t j, const Vector& y) const;
  void scatter_column(std::size_t j, Vector& v) const;

  bool refactor();
  void ftran(Vector& v) const;
  void btran(Vector& v) const;
  void compute_basic_values();
  void reset_to_slack_basis();

  bool infeasible_basic(std::size_t pos, double& phase_cost) const;

  LpSolution finish(LpStatus status);

  const LinearProgram& lp_;
  SolveOptions options_;
  std::size_t m_ = 0;
  std::size_t n_ = 0;

  // Scaled structural columns (CSC).
  std::vector<std::size_t> col_start_;
  std::vector<int> row_index_;
  std::vector<double> values_;

  std::vector<double> row_scale_;
  std::vector<double> col_scale_;

  // Over n structural + m logical columns.
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> cost_;
  std::vector<double> x_;
  std::vector<VarState> state_;

  std::vector<int> basis_;
  std::vector<int> position_;

  // KLU handles; solves work in place so they are logically const.
  mutable klu_common common_{};
  klu_symbolic* symbolic_ = nullptr;
  klu_numeric* numeric_ = nullptr;
  std::vector<int> basis_start_;
  std::vector<int> basis_rows_;
  std::vector<double> basis_values_;
  std::vector<Eta> etas_;
  std::size_t iterations_ = 0;
  std::size_t recoveries_ = 0;
};

Simplex::Simplex(const LinearProgram& lp, const SolveOptions& options) : lp_(lp), options_(options) {
  m_ = lp.num_constraints();
  n_ = lp.num_vars();
  if (options_.max_iterations == 0) options_.max_iterations = 50 * (m_ + n_) + 10'000;
  if (options_.refactor_interval == 0) options_.refactor_interval = 100;
  klu_defaults(&common_);
  build(lp);
}

Simplex::~Simplex() {
  klu_free_numeric(&numeric_, &common_);
  klu_free_symbolic(&symbolic_, &common_);
}

void Simplex::compute_scaling(const LinearProgram& lp) {
  row_scale_.assign(m_, 1.0);
  col_scale_.assign(n_, 1.0);
  if (!options_.scale) return;

  const auto& rows = lp.constraints();
  auto scaled = [&](std::size_t i, const Term& t) { return std::abs(t.coef) * row_scale_[i] * col_scale_[t.var]; };

  // Geometric-mean passes followed by a max-abs equilibration; all factors are
  // powers of two so scaling introduces no rounding.
  for (int pass = 0; pass < 5; ++pass) {
    const bool geometric = pass < 4;
    std::vector<double> lo(m_, kInfinity), hi(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (const auto& t : rows[i].terms)
        if (t.coef != 0.0) {
          const double a = scaled(i, t);
          lo[i] = std::min(lo[i], a);
          hi[i] = std::max(hi[i], a);
        }
    for (std::size_t i = 0; i < m_; ++i)
      if (hi[i] > 0.0) row_scale_[i] /= power_of_two_near(geometric ? std::sqrt(lo[i] * hi[i]) : hi[i]);

    std::vector<double> clo(n_, kInfinity), chi(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (const auto& t : rows[i].terms)
        if (t.coef != 0.0) {
          const double a = scaled(i, t);
          clo[t.var] = std::min(clo[t.var], a);
          chi[t.var] = std::max(chi[t.var], a);
        }
    for (std::size_t j = 0; j < n_; ++j)
      if (chi[j] > 0.0) col_scale_[j] /= power_of_two_near(geometric ? std::sqrt(clo[j] * chi[j]) : chi[j]);
  }
}

void Simplex::build(const LinearProgram& lp) {
  compute_scaling(lp);

  // Accumulate duplicate (row, var) terms while transposing to CSC.
  std::vector<std::size_t> count(n_ + 1, 0);
  for (const auto& row : lp.constraints())
    for (const auto& t : row.terms) ++count[t.var + 1];
  for (std::size_t j = 0; j < n_; ++j) count[j + 1] += count[j];
  col_start_ = count;
  row_index_.assign(col_start_[n_], 0);
  values_.assign(col_start_[n_], 0.0);
  std::vector<std::size_t> fill(col_start_.begin(), col_start_.end() - 1);
  for (std::size_t i = 0; i < m_; ++i)
    for (const auto& t : lp.constraint(i).terms) {
      const auto k = fill[t.var]++;
      row_index_[k] = static_cast<int>(i);
      values_[k] = t.coef * row_scale_[i] * col_scale_[t.var];
    }
  // Merge duplicates within each column.
  {
    std::vector<std::size_t> new_start(n_ + 1, 0);
    std::vector<int> rows_out;
    std::vector<double> vals_out;
    rows_out.reserve(row_index_.size());
    vals_out.reserve(values_.size());
    for (std::size_t j = 0; j < n_; ++j) {
      std::vector<std::pair<int, double>> entries;
      for (auto k = col_start_[j]; k < col_start_[j + 1]; ++k) entries.emplace_back(row_index_[k], values_[k]);
      std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t e = 0; e < entries.size(); ++e) {
        if (!rows_out.empty() && e > 0 && entries[e].first == entries[e - 1].first) {
          vals_out.back() += entries[e].second;
        } else {
          rows_out.push_back(entries[e].first);
          vals_out.push_back(entries[e].second);
        }
      }
      new_start[j + 1] = rows_out.size();
    }
    col_start_ = std::move(new_start);
    row_index_ = std::move(rows_out);
    values_ = std::move(vals_out);
  }

  const std::size_t total = n_ + m_;
  lower_.resize(total);
  upper_.resize(total);
  cost_.assign(total, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    const auto& v = lp.variable(j);
    lower_[j] = v.lower / col_scale_[j];
    upper_[j] = v.upper / col_scale_[j];
    cost_[j] = v.cost * col_scale_[j];
  }
  for (std::size_t i = 0; i < m_; ++i) {
    const auto& row = lp.constraint(i);
    const double rhs = row.rhs * row_scale_[i];
    lower_[n_ + i] = row.relation == Relation::LessEqual ? -kInfinity : rhs;
    upper_[n_ + i] = row.relation == Relation::GreaterEqual ? kInfinity : rhs;
  }

  x_.assign(total, 0.0);
  state_.assign(total, VarState::Free);
  position_.assign(total, -1);
  basis_.resize(m_);
  for (std::size_t j = 0; j < n_; ++j) {
    if (lower_[j] == upper_[j]) {
      state_[j] = VarState::Fixed;
      x_[j] = lower_[j];
    } else if (std::isfinite(lower_[j])) {
      state_[j] = VarState::AtLower;
      x_[j] = lower_[j];
    } else if (std::isfinite(upper_[j])) {
      state_[j] = VarState::AtUpper;
      x_[j] = upper_[j];
    }
  }
  for (std::size_t i = 0; i < m_; ++i) {
    basis_[i] = static_cast<int>(n_ + i);
    position_[n_ + i] = static_cast<int>(i);
    state_[n_ + i] = VarState::Basic;
  }
}

double Simplex::dot_column(std::size_t j, const Vector& y) const {
  if (j >= n_) return -y[j - n_];
  double total = 0.0;
  for (auto k = col_start_[j]; k < col_start_[j + 1]; ++k) total += values_[k] * y[row_index_[k]];
  return total;
}

void Simplex::scatter_column(std::size_t j, Vector& v) const {
  v.assign(m_, 0.0);
  if (j >= n_) {
    v[j - n_] = -1.0;
    return;
  }
  for (auto k = col_start_[j]; k < col_start_[j + 1]; ++k) v[row_index_[k]] = values_[k];
}

bool Simplex::refactor() {
  etas_.clear();
  klu_free_numeric(&numeric_, &common_);
  klu_free_symbolic(&symbolic_, &common_);
  if (m_ == 0) return true;
  basis_start_.assign(1, 0);
  basis_rows_.clear();
  basis_values_.clear();
  for (std::size_t p = 0; p < m_; ++p) {
    const auto j = static_cast<std::size_t>(basis_[p]);
    if (j >= n_) {
      basis_rows_.push_back(static_cast<int>(j - n_));
      basis_values_.push_back(-1.0);
    } else {
      for (auto k = col_start_[j]; k < col_start_[j + 1]; ++k) {
        basis_rows_.push_back(row_index_[k]);
        basis_values_.push_back(values_[k]);
      }
    }
    basis_start_.push_back(static_cast<int>(basis_rows_.size()));
  }
  const int m = static_cast<int>(m_);
  symbolic_ = klu_analyze(m, basis_start_.data(), basis_rows_.data(), &common_);
  if (!symbolic_) return false;
  numeric_ = klu_factor(basis_start_.data(), basis_rows_.data(), basis_values_.data(), symbolic_, &common_);
  return numeric_ != nullptr && common_.status == KLU_OK;
}

void Simplex::ftran(Vector& v) const {
  if (m_ == 0) return;
  klu_solve(symbolic_, numeric_, static_cast<int>(m_), 1, v.data(), &common_);
  for (const auto& eta : etas_) {
    const double pivot = v[eta.pivot] / eta.pivot_value;
    v[eta.pivot] = pivot;
    if (pivot == 0.0) continue;
    for (std::size_t k = 0; k < eta.index.size(); ++k) v[eta.index[k]] -= eta.value[k] * pivot;
  }
}

void Simplex::btran(Vector& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double total = v[it->pivot];
    for (std::size_t k = 0; k < it->index.size(); ++k) total -= it->value[k] * v[it->index[k]];
    v[it->pivot] = total / it->pivot_value;
  }
  klu_tsolve(symbolic_, numeric_, static_cast<int>(m_), 1, v.data(), &common_);
}

void Simplex::compute_basic_values() {
  if (m_ == 0) return;
  Vector rhs(m_, 0.0);
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
    if (j >= n_) {
      rhs[j - n_] += x_[j];
    } else {
      for (auto k = col_start_[j]; k < col_start_[j + 1]; ++k) rhs[row_index_[k]] -= values_[k] * x_[j];
    }
  }
  ftran(rhs);
  for (std::size_t p = 0; p < m_; ++p) x_[static_cast<std::size_t>(basis_[p])] = rhs[p];
}

void Simplex::reset_to_slack_basis() {
  for (std::size_t p = 0; p < m_; ++p) {
    const auto j = static_cast<std::size_t>(basis_[p]);
    position_[j] = -1;
    if (j < n_) {
      if (lower_[j] == upper_[j]) {
        state_[j] = VarState::Fixed;
        x_[j] = lower_[j];
      } else if (std::isfinite(lower_[j]) && (!std::isfinite(upper_[j]) || x_[j] - lower_[j] <= upper_[j] - x_[j])) {
        state_[j] = VarState::AtLower;
        x_[j] = lower_[j];
      } else if (std::isfinite(upper_[j])) {
        state_[j] = VarState::AtUpper;
        x_[j] = upper_[j];
      } else {
        state_[j] = VarState::Free;
        x_[j] = 0.0;
      }
    } else {
      state_[j] = lower_[j] == upper_[j] ? VarState::Fixed : VarState::AtLower;
    }
  }
  for (std::size_t i = 0; i < m_; ++i) {
    const auto j = n_ + i;
    basis_[i] = static_cast<int>(j);
    position_[j] = static_cast<int>(i);
    state_[j] = VarState::Basic;
  }
}

bool Simplex::infeasible_basic(std::size_t pos, double& phase_cost) const {
  const auto j = static_cast<std::size_t>(basis_[pos]);
  const double value = x_[j];
  if (value < lower_[j] - kPrimalTol * std::max(1.0, std::abs(lower_[j]))) {
    phase_cost = -1.0;
    return true;
  }
  if (value > upper_[j] + kPrimalTol * std::max(1.0, std::abs(upper_[j]))) {
    phase_cost = 1.0;
    return true;
  }
  phase_cost = 0.0;
  return false;
}

LpSolution Simplex::run() {
  if (!refactor()) return finish(LpStatus::NumericalFailure);
  compute_basic_values();

  const std::size_t total = n_ + m_;
  Vector y(m_);
  Vector column(m_);
  std::vector<double> phase_cost(m_, 0.0);
  std::size_t degenerate_run = 0;
  bool bland = false;

  for (;;) {
    if (iterations_ >= options_.max_iterations) return finish(LpStatus::IterationLimit);

    if (etas_.size() >= options_.refactor_interval) {
      if (!refactor()) {
        if (++recoveries_ > 3) return finish(LpStatus::NumericalFailure);
        reset_to_slack_basis();
        if (!refactor()) return finish(LpStatus::NumericalFailure);
      }
      compute_basic_values();
    }

    bool phase_one = false;
    for (std::size_t p = 0; p < m_; ++p) phase_one |= infeasible_basic(p, phase_cost[p]);
    for (std::size_t p = 0; p < m_; ++p)
      y[p] = phase_one ? phase_cost[p] : cost_[static_cast<std::size_t>(basis_[p])];
    btran(y);

    // Pricing: Dantzig on the scaled problem, or lowest index under Bland.
    std::size_t entering = total;
    double entering_d = 0.0;
    double best = 0.0;
    for (std::size_t j = 0; j < total; ++j) {
      const auto st = state_[j];
      if (st == VarState::Basic || st == VarState::Fixed) continue;
      const double d = (phase_one ? 0.0 : cost_[j]) - dot_column(j, y);
      double gain = 0.0;
      if (st == VarState::AtLower) gain = -d;
      else if (st == VarState::AtUpper) gain = d;
      else gain = std::abs(d);
      if (gain <= kDualTol) continue;
      if (bland) {
        entering = j;
        entering_d = d;
        break;
      }
      if (gain > best) {
        best = gain;
        entering = j;
        entering_d = d;
      }
    }

    if (entering == total) {
      // Confirm on a fresh factorisation before declaring termination.
      if (!etas_.empty()) {
        if (!refactor()) return finish(LpStatus::NumericalFailure);
        compute_basic_values();
        continue;
      }
      return finish(phase_one ? LpStatus::Infeasible : LpStatus::Optimal);
    }

    const double dir = entering_d < 0.0 ? 1.0 : -1.0;
    scatter_column(entering, column);
    ftran(column);

    // Ratio test. Basic variable at position p moves at rate -dir * alpha_p.
    // In phase 1 an infeasible variable blocks where it regains feasibility.
    double harris_limit = kInfinity;
    auto target_bound = [&](std::size_t p, double rate, double& bound) {
      const auto j = static_cast<std::size_t>(basis_[p]);
      const double v = x_[j];
      const bool below = phase_one && v < lower_[j] - kPrimalTol * std::max(1.0, std::abs(lower_[j]));
      const bool above = phase_one && v > upper_[j] + kPrimalTol * std::max(1.0, std::abs(upper_[j]));
      if (rate < 0.0) {
        if (below) return false;
        bound = above ? upper_[j] : lower_[j];
      } else {
        if (above) return false;
        bound = below ? lower_[j] : upper_[j];
      }
      return std::isfinite(bound);
    };

    double max_alpha = 0.0;
    for (std::size_t p = 0; p < m_; ++p) max_alpha = std::max(max_alpha, std::abs(column[p]));
    const double pivot_tol = kPivotTol * std::max(1.0, max_alpha);

    if (!bland) {
      for (std::size_t p = 0; p < m_; ++p) {
        const double alpha = column[p];
        if (std::abs(alpha) <= pivot_tol) continue;
        const double rate = -dir * alpha;
        double bound = 0.0;
        if (!target_bound(p, rate, bound)) continue;
        const double v = x_[static_cast<std::size_t>(basis_[p])];
        const double slack = rate < 0.0 ? v - bound : bound - v;
        const double relaxed = (slack + kPrimalTol * std::max(1.0, std::abs(bound))) / std::abs(rate);
        harris_limit = std::min(harris_limit, relaxed);
      }
    }

    std::size_t leave_pos = m_;
    double step = kInfinity;
    double leave_bound = 0.0;
    double best_pivot = 0.0;
    for (std::size_t p = 0; p < m_; ++p) {
      const double alpha = column[p];
      if (std::abs(alpha) <= pivot_tol) continue;
      const double rate = -dir * alpha;
      double bound = 0.0;
      if (!target_bound(p, rate, bound)) continue;
      const double v = x_[static_cast<std::size_t>(basis_[p])];
      const double ratio = std::max(0.0, (rate < 0.0 ? v - bound : bound - v) / std::abs(rate));
      if (bland) {
        const bool better = ratio < step - 1e-12 * (1.0 + step) ||
                            (ratio <= step + 1e-12 * (1.0 + step) && leave_pos < m_ && basis_[p] < basis_[leave_pos]);
        if (leave_pos == m_ || better) {
          leave_pos = p;
          step = ratio;
          leave_bound = bound;
        }
      } else if (ratio <= harris_limit && std::abs(alpha) > best_pivot) {
        best_pivot = std::abs(alpha);
        leave_pos = p;
        step = ratio;
        leave_bound = bound;
      }
    }

    const double own_range = upper_[entering] - lower_[entering];
    const bool flip = std::isfinite(own_range) && own_range <= step;
    if (leave_pos == m_ && !flip) {
      if (phase_one) {
        if (!etas_.empty() && refactor()) {
          compute_basic_values();
          continue;
        }
        return finish(LpStatus::NumericalFailure);
      }
      return finish(LpStatus::Unbounded);
    }
    if (flip) step = own_range;

    ++iterations_;
    if (step * std::max(1.0, max_alpha) <= 1e-12) {
      if (++degenerate_run > kDegenerateLimit) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }

    const double delta = dir * step;
    if (delta != 0.0) {
      x_[entering] += delta;
      for (std::size_t p = 0; p < m_; ++p) {
        const double alpha = column[p];
        if (alpha != 0.0) x_[static_cast<std::size_t>(basis_[p])] -= delta * alpha;
      }
    }

    if (flip) {
      if (dir > 0.0) {
        state_[entering] = VarState::AtUpper;
        x_[entering] = upper_[entering];
      } else {
        state_[entering] = VarState::AtLower;
        x_[entering] = lower_[entering];
      }
      continue;
    }

    const auto leaving = static_cast<std::size_t>(basis_[leave_pos]);
    x_[leaving] = leave_bound;
    if (lower_[leaving] == upper_[leaving]) state_[leaving] = VarState::Fixed;
    else state_[leaving] = leave_bound == lower_[leaving] ? VarState::AtLower : VarState::AtUpper;
    position_[leaving] = -1;

    basis_[leave_pos] = static_cast<int>(entering);
    position_[entering] = static_cast<int>(leave_pos);
    state_[entering] = VarState::Basic;

    Eta eta;
    eta.pivot = static_cast<int>(leave_pos);
    eta.pivot_value = column[leave_pos];
    for (std::size_t p = 0; p < m_; ++p) {
      const double alpha = column[p];
      if (p != leave_pos && std::abs(alpha) > kDropTol) {
        eta.index.push_back(static_cast<int>(p));
        eta.value.push_back(alpha);
      }
    }
    etas_.push_back(std::move(eta));
  }
}

LpSolution Simplex::finish(LpStatus status) {
  LpSolution out;
  out.status = status;
  out.iterations = iterations_;
  out.primal.assign(n_, 0.0);
  out.dual.assign(m_, 0.0);
  out.reduced_costs.assign(n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) out.primal[j] = x_[j] * col_scale_[j];

  if (status == LpStatus::Optimal) {
    // Nonbasic values are exact bounds; snap basics that sit within tolerance.
    for (std::size_t j = 0; j < n_; ++j) {
      const auto& v = lp_.variable(j);
      out.primal[j] = std::clamp(out.primal[j], v.lower, v.upper);
    }
    Vector y(m_);
    for (std::size_t p = 0; p < m_; ++p) y[p] = cost_[static_cast<std::size_t>(basis_[p])];
    btran(y);
    for (std::size_t i = 0; i < m_; ++i) out.dual[i] = y[i] * row_scale_[i];
    for (std::size_t j = 0; j < n_; ++j) {
      if (state_[j] == VarState::Basic) continue;
      out.reduced_costs[j] = (cost_[j] - dot_column(j, y)) / col_scale_[j];
    }
  }
  out.objective_value = lp_.evaluate(out.primal);
  return out;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SolveOptions& options) {
  lp.check_well_formed();
  Simplex simplex(lp, options);
  return simplex.run();
}

LpSolution solve_lp(const LinearProgram& lp, double tolerance) {
  SolveOptions options;
  options.tolerance = tolerance;
  return solve_lp(lp, options);
}

}  // namespace gridsim
