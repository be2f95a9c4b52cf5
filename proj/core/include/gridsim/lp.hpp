#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace gridsim {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
  std::size_t var;
  double coef;
};

struct Constraint {
  std::vector<Term> terms;
  Relation relation = Relation::Equal;
  double rhs = 0.0;
  std::string name;
};

struct Variable {
  double lower = 0.0;
  double upper = kInfinity;
  double cost = 0.0;
  std::string name;
};

// Minimisation LP: min c'x + c0  s.t.  rows with relation to rhs, lower <= x <= upper.
class LinearProgram {
public:
  std::size_t add_variable(double lower, double upper, double cost, std::string name = {});
  std::size_t add_constraint(std::vector<Term> terms, Relation relation, double rhs, std::string name = {});

  void set_cost(std::size_t var, double cost);
  void set_bounds(std::size_t var, double lower, double upper);
  void set_rhs(std::size_t row, double rhs);
  void set_objective_constant(double value) { objective_constant_ = value; }
  void add_objective_constant(double value) { objective_constant_ += value; }

  std::size_t num_vars() const noexcept { return variables_.size(); }
  std::size_t num_constraints() const noexcept { return constraints_.size(); }
  std::size_t num_nonzeros() const noexcept;

  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
  const Variable& variable(std::size_t j) const { return variables_.at(j); }
  const Constraint& constraint(std::size_t i) const { return constraints_.at(i); }
  double objective_constant() const noexcept { return objective_constant_; }

  // Objective value c'x + c0 at a given point.
  double evaluate(const std::vector<double>& x) const;

  // Throws Error if a term references a missing variable, a bound pair is
  // inverted or NaN appears anywhere.
  void check_well_formed() const;

private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  double objective_constant_ = 0.0;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

std::string_view to_string(LpStatus status);

// Sign convention for every dual value: dual[i] = d(optimal objective)/d(rhs_i).
// So a binding <= row in a minimisation has dual <= 0, a binding >= row has
// dual >= 0, and reduced_costs[j] = c_j - sum_i dual[i] * a_ij.
struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  double objective_value = 0.0;
  std::vector<double> primal;
  std::vector<double> dual;
  std::vector<double> reduced_costs;
  std::size_t iterations = 0;
};

struct SolveOptions {
  double tolerance = 1e-7;
  bool scale = true;
  // 0 picks a limit proportional to the problem size.
  std::size_t max_iterations = 0;
  // Basis updates between fresh factorisations.
  std::size_t refactor_interval = 100;
};

LpSolution solve_lp(const LinearProgram& lp, const SolveOptions& options);
LpSolution solve_lp(const LinearProgram& lp, double tolerance = 1e-7);

struct ResidualReport {
  double primal_residual = 0.0;    // worst row or bound violation
  double dual_residual = 0.0;      // worst reduced-cost/dual sign violation or reduced-cost mismatch
  double complementarity = 0.0;    // worst |dual * slack| or |reduced cost * distance to bound|
  double duality_gap = 0.0;        // |primal objective - dual objective|
  double primal_objective = 0.0;
  double dual_objective = 0.0;

  bool within(double tol) const noexcept;
};

ResidualReport check_kkt(const LinearProgram& lp, const LpSolution& solution);

// Plain-text dump (one section per objective, rows, bounds) for cross-checking
// with external solvers.
void write_lp_text(const LinearProgram& lp, std::ostream& out);

}  // namespace gridsim
