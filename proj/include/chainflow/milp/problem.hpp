#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "chainflow/core/types.hpp"

namespace chainflow::milp {

class InvalidModel : public Error {
 public:
  using Error::Error;
};

class NodeLimitExceeded : public Error {
 public:
  using Error::Error;
};

class TooManyBinaries : public Error {
 public:
  using Error::Error;
};

enum class Domain { Continuous, Binary };
enum class Relation { LessEqual, Equal, GreaterEqual };

struct Variable {
  std::string name;
  Domain domain = Domain::Continuous;
  double upper = kInfinity;  // lower bound is always 0
};

struct Term {
  std::size_t var;
  double coef;
};

using LinearExpr = std::vector<Term>;

struct Constraint {
  LinearExpr expr;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
  std::string name;
};

// Minimization model over non-negative continuous and binary variables.
class MilpProblem {
 public:
  std::size_t add_continuous(std::string name, double upper = kInfinity) {
    return add_variable({std::move(name), Domain::Continuous, upper});
  }

  std::size_t add_binary(std::string name) {
    return add_variable({std::move(name), Domain::Binary, 1.0});
  }

  std::size_t add_variable(Variable v) {
    if (std::isnan(v.upper) || v.upper < 0.0)
      throw InvalidModel("variable '" + v.name + "' has an invalid upper bound");
    if (v.domain == Domain::Binary) v.upper = std::min(v.upper, 1.0);
    vars_.push_back(std::move(v));
    return vars_.size() - 1;
  }

  void set_upper_bound(std::size_t var, double upper) {
    check_var(var);
    if (std::isnan(upper) || upper < 0.0) throw InvalidModel("invalid upper bound");
    vars_[var].upper = vars_[var].domain == Domain::Binary ? std::min(upper, 1.0) : upper;
  }

  void add_constraint(LinearExpr expr, Relation rel, double rhs, std::string name = {}) {
    if (!std::isfinite(rhs)) throw InvalidModel("non-finite right-hand side in '" + name + "'");
    constraints_.push_back({normalize(std::move(expr)), rel, rhs, std::move(name)});
  }

  void set_objective(LinearExpr expr, double constant = 0.0) {
    if (!std::isfinite(constant)) throw InvalidModel("non-finite objective constant");
    objective_ = normalize(std::move(expr));
    objective_constant_ = constant;
  }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const LinearExpr& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }
  std::size_t num_variables() const { return vars_.size(); }

  std::vector<std::size_t> binaries() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i].domain == Domain::Binary) out.push_back(i);
    return out;
  }

  double evaluate(const LinearExpr& expr, const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& t : expr) s += t.coef * x[t.var];
    return s;
  }

  double objective_value(const std::vector<double>& x) const {
    return objective_constant_ + evaluate(objective_, x);
  }

  // Largest violation of any constraint or bound, scaled by 1 + |rhs|.
  double max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      worst = std::max(worst, -x[i]);
      if (std::isfinite(vars_[i].upper)) worst = std::max(worst, x[i] - vars_[i].upper);
    }
    for (const auto& c : constraints_) {
      const double lhs = evaluate(c.expr, x);
      double v = 0.0;
      switch (c.relation) {
        case Relation::LessEqual: v = lhs - c.rhs; break;
        case Relation::GreaterEqual: v = c.rhs - lhs; break;
        case Relation::Equal: v = std::abs(lhs - c.rhs); break;
      }
      worst = std::max(worst, v / (1.0 + std::abs(c.rhs)));
    }
    return worst;
  }

 private:
  void check_var(std::size_t var) const {
    if (var >= vars_.size()) throw InvalidModel("reference to undeclared variable #" + std::to_string(var));
  }

  // Merges duplicate terms and rejects undeclared variables / non-finite
  // coefficients. Term order follows first appearance.
  LinearExpr normalize(LinearExpr expr) const {
    LinearExpr out;
    std::map<std::size_t, std::size_t> slot;
    for (const auto& t : expr) {
      check_var(t.var);
      if (!std::isfinite(t.coef))
        throw InvalidModel("non-finite coefficient on '" + vars_[t.var].name + "'");
      auto [it, inserted] = slot.emplace(t.var, out.size());
      if (inserted)
        out.push_back(t);
      else
        out[it->second].coef += t.coef;
    }
    std::erase_if(out, [](const Term& t) { return t.coef == 0.0; });
    return out;
  }

  std::vector<Variable> vars_;
  std::vector<Constraint> constraints_;
  LinearExpr objective_;
  double objective_constant_ = 0.0;
};

// Name-based construction, as read from a model description.
struct VariableDecl {
  std::string name;
  Domain domain = Domain::Continuous;
  double upper = kInfinity;
};

struct NamedTerm {
  std::string var;
  double coef;
};

struct ConstraintDecl {
  std::vector<NamedTerm> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
  std::string name;
};

inline MilpProblem build(const std::vector<VariableDecl>& vars,
                         const std::vector<ConstraintDecl>& constraints,
                         const std::vector<NamedTerm>& objective) {
  MilpProblem p;
  std::map<std::string, std::size_t> index;
  for (const auto& v : vars) {
    if (index.contains(v.name)) throw InvalidModel("duplicate variable '" + v.name + "'");
    index[v.name] = p.add_variable({v.name, v.domain, v.upper});
  }
  auto resolve = [&](const std::vector<NamedTerm>& terms) {
    LinearExpr expr;
    for (const auto& t : terms) {
      auto it = index.find(t.var);
      if (it == index.end()) throw InvalidModel("undeclared variable '" + t.var + "'");
      expr.push_back({it->second, t.coef});
    }
    return expr;
  };
  for (const auto& c : constraints) p.add_constraint(resolve(c.terms), c.relation, c.rhs, c.name);
  p.set_objective(resolve(objective));
  return p;
}

// Human-readable LP-format dump (min / s.t. / bounds / binaries / end).
inline void write_lp(const MilpProblem& p, std::ostream& out) {
  auto term = [&](const Term& t, bool first) {
    if (t.coef < 0)
      out << (first ? "-" : " - ");
    else if (!first)
      out << " + ";
    const double a = std::abs(t.coef);
    if (a != 1.0) out << a << " ";
    out << p.variables()[t.var].name;
  };
  auto expr = [&](const LinearExpr& e) {
    if (e.empty()) {
      out << "0";
      return;
    }
    for (std::size_t i = 0; i < e.size(); ++i) term(e[i], i == 0);
  };
  out << "min\n  obj: ";
  expr(p.objective());
  if (p.objective_constant() != 0.0) out << " + " << p.objective_constant();
  out << "\ns.t.\n";
  for (std::size_t i = 0; i < p.constraints().size(); ++i) {
    const auto& c = p.constraints()[i];
    out << "  " << (c.name.empty() ? "c" + std::to_string(i) : c.name) << ": ";
    expr(c.expr);
    switch (c.relation) {
      case Relation::LessEqual: out << " <= "; break;
      case Relation::GreaterEqual: out << " >= "; break;
      case Relation::Equal: out << " = "; break;
    }
    out << c.rhs << "\n";
  }
  out << "bounds\n";
  for (const auto& v : p.variables()) {
    if (v.domain == Domain::Binary) continue;
    out << "  0 <= " << v.name;
    if (std::isfinite(v.upper)) out << " <= " << v.upper;
    out << "\n";
  }
  out << "binaries\n";
  for (const auto& v : p.variables())
    if (v.domain == Domain::Binary) out << "  " << v.name << "\n";
  out << "end\n";
}

}  // namespace chainflow::milp
