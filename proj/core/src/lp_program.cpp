#include <algorithm>
#include <cmath>
#include <ostream>

#include "gridsim/error.hpp"
#include "gridsim/lp.hpp"

namespace gridsim {

std::size_t LinearProgram::add_variable(double lower, double upper, double cost, std::string name) {
  variables_.push_back({lower, upper, cost, std::move(name)});
  return variables_.size() - 1;
}

std::size_t LinearProgram::add_constraint(std::vector<Term> terms, Relation relation, double rhs, std::string name) {
  constraints_.push_back({std::move(terms), relation, rhs, std::move(name)});
  return constraints_.size() - 1;
}

void LinearProgram::set_cost(std::size_t var, double cost) { variables_.at(var).cost = cost; }

void LinearProgram::set_bounds(std::size_t var, double lower, double upper) {
  auto& v = variables_.at(var);
  v.lower = lower;
  v.upper = upper;
}

void LinearProgram::set_rhs(std::size_t row, double rhs) { constraints_.at(row).rhs = rhs; }

std::size_t LinearProgram::num_nonzeros() const noexcept {
  std::size_t total = 0;
  for (const auto& row : constraints_) total += row.terms.size();
  return total;
}

double LinearProgram::evaluate(const std::vector<double>& x) const {
  double total = objective_constant_;
  for (std::size_t j = 0; j < variables_.size(); ++j) total += variables_[j].cost * x.at(j);
  return total;
}

void LinearProgram::check_well_formed() const {
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    const auto& v = variables_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.cost))
      throw Error("variable " + std::to_string(j) + ": NaN bound or non-finite cost");
    if (v.lower > v.upper) throw Error("variable " + std::to_string(j) + ": lower bound exceeds upper bound");
    if (v.lower == kInfinity || v.upper == -kInfinity)
      throw Error("variable " + std::to_string(j) + ": bound pair admits no finite value");
  }
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& row = constraints_[i];
    if (!std::isfinite(row.rhs)) throw Error("constraint " + std::to_string(i) + ": non-finite rhs");
    for (const auto& term : row.terms) {
      if (term.var >= variables_.size())
        throw Error("constraint " + std::to_string(i) + ": references missing variable " + std::to_string(term.var));
      if (!std::isfinite(term.coef)) throw Error("constraint " + std::to_string(i) + ": non-finite coefficient");
    }
  }
}

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
    case LpStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

bool ResidualReport::within(double tol) const noexcept {
  return primal_residual <= tol && dual_residual <= tol && complementarity <= tol && duality_gap <= tol;
}

// Residuals are relative: row and bound violations are divided by
// max(1, |rhs or bound|), complementarity is min(|multiplier|, relative slack)
// and the gap is |P - D| / (1 + |P|).
ResidualReport check_kkt(const LinearProgram& lp, const LpSolution& solution) {
  ResidualReport report;
  const auto& vars = lp.variables();
  const auto& rows = lp.constraints();
  const auto& x = solution.primal;
  const auto& y = solution.dual;
  if (x.size() != vars.size() || y.size() != rows.size() || solution.reduced_costs.size() != vars.size())
    throw Error("check_kkt: solution vectors do not match the program dimensions");

  std::vector<double> reduced(vars.size());
  for (std::size_t j = 0; j < vars.size(); ++j) reduced[j] = vars[j].cost;

  double dual_objective = lp.objective_constant();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    double activity = 0.0;
    for (const auto& term : row.terms) {
      activity += term.coef * x[term.var];
      reduced[term.var] -= y[i] * term.coef;
    }
    const double scale = std::max(1.0, std::abs(row.rhs));
    const double diff = activity - row.rhs;
    double violation = 0.0;
    double dual_sign = 0.0;
    switch (row.relation) {
      case Relation::LessEqual:
        violation = std::max(0.0, diff);
        dual_sign = std::max(0.0, y[i]);
        break;
      case Relation::GreaterEqual:
        violation = std::max(0.0, -diff);
        dual_sign = std::max(0.0, -y[i]);
        break;
      case Relation::Equal:
        violation = std::abs(diff);
        break;
    }
    report.primal_residual = std::max(report.primal_residual, violation / scale);
    report.dual_residual = std::max(report.dual_residual, dual_sign);
    if (row.relation != Relation::Equal)
      report.complementarity = std::max(report.complementarity, std::min(std::abs(y[i]), std::abs(diff) / scale));
    dual_objective += y[i] * row.rhs;
  }

  for (std::size_t j = 0; j < vars.size(); ++j) {
    const auto& v = vars[j];
    const double d = reduced[j];
    const double mismatch = std::abs(d - solution.reduced_costs[j]) / std::max(1.0, std::abs(v.cost));
    report.dual_residual = std::max(report.dual_residual, mismatch);

    if (std::isfinite(v.lower))
      report.primal_residual = std::max(report.primal_residual, (v.lower - x[j]) / std::max(1.0, std::abs(v.lower)));
    if (std::isfinite(v.upper))
      report.primal_residual = std::max(report.primal_residual, (x[j] - v.upper) / std::max(1.0, std::abs(v.upper)));

    if (d > 0.0) {
      if (std::isfinite(v.lower)) {
        dual_objective += d * v.lower;
        const double gap = (x[j] - v.lower) / std::max(1.0, std::abs(v.lower));
        report.complementarity = std::max(report.complementarity, std::min(d, std::abs(gap)));
      } else {
        report.dual_residual = std::max(report.dual_residual, d);
      }
    } else if (d < 0.0) {
      if (std::isfinite(v.upper)) {
        dual_objective += d * v.upper;
        const double gap = (v.upper - x[j]) / std::max(1.0, std::abs(v.upper));
        report.complementarity = std::max(report.complementarity, std::min(-d, std::abs(gap)));
      } else {
        report.dual_residual = std::max(report.dual_residual, -d);
      }
    }
  }

  report.primal_objective = lp.evaluate(x);
  report.dual_objective = dual_objective;
  report.duality_gap = std::abs(report.primal_objective - dual_objective) / (1.0 + std::abs(report.primal_objective));
  return report;
}

namespace {

std::string var_name(const LinearProgram& lp, std::size_t j) {
  const auto& name = lp.variable(j).name;
  return name.empty() ? "x" + std::to_string(j) : name;
}

void write_number(std::ostream& out, double value) {
  if (value == kInfinity) out << "inf";
  else if (value == -kInfinity) out << "-inf";
  else out << value;
}

}  // namespace

void write_lp_text(const LinearProgram& lp, std::ostream& out) {
  const auto precision = out.precision(17);
  out << "minimize\n obj:";
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    const double c = lp.variable(j).cost;
    if (c != 0.0) out << (c < 0 ? " - " : " + ") << std::abs(c) << ' ' << var_name(lp, j);
  }
  out << " + " << lp.objective_constant() << "\nsubject to\n";
  for (std::size_t i = 0; i < lp.num_constraints(); ++i) {
    const auto& row = lp.constraint(i);
    out << ' ' << (row.name.empty() ? "c" + std::to_string(i) : row.name) << ':';
    for (const auto& term : row.terms)
      out << (term.coef < 0 ? " - " : " + ") << std::abs(term.coef) << ' ' << var_name(lp, term.var);
    switch (row.relation) {
      case Relation::LessEqual: out << " <= "; break;
      case Relation::GreaterEqual: out << " >= "; break;
      case Relation::Equal: out << " = "; break;
    }
    out << row.rhs << '\n';
  }
  out << "bounds\n";
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    const auto& v = lp.variable(j);
    out << ' ';
    write_number(out, v.lower);
    out << " <= " << var_name(lp, j) << " <= ";
    write_number(out, v.upper);
    out << '\n';
  }
  out << "end\n";
  out.precision(precision);
}

}  // namespace gridsim
