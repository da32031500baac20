#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "chainflow/milp/problem.hpp"

namespace chainflow::milp {

enum class Status { Optimal, Infeasible, Unbounded };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
  }
  return "?";
}

struct MilpSolution {
  Status status = Status::Infeasible;
  std::vector<double> values;
  double objective = 0.0;
  std::size_t nodes = 0;
};

namespace detail {

// Two-phase primal simplex over a dense tableau with the bounded-variable
// (upper-bounding) technique. Structural variables are shifted so every
// column has lower bound 0; nonbasic columns sit at 0 or at their upper bound.
//
// Pricing is Dantzig's rule; after kDegenerateStreak consecutive degenerate
// pivots it switches to Bland's rule (smallest eligible index for entering
// and leaving) until a pivot makes progress, which rules out cycling.
class BoundedSimplex {
 public:
  static constexpr double kPivotTol = 1e-9;
  static constexpr double kCostTol = 1e-9;
  static constexpr std::size_t kDegenerateStreak = 50;
  static constexpr std::size_t kMaxIterations = 200000;

  BoundedSimplex(const MilpProblem& p, std::span<const double> lower,
                 std::span<const double> upper)
      : problem_(p), lower_(lower.begin(), lower.end()) {
    const auto n = p.num_variables();
    struct RowSpec {
      std::vector<Term> terms;
      int slack_sign;
      double rhs;
    };
    std::vector<RowSpec> rows;
    for (std::size_t j = 0; j < n; ++j) {
      if (lower[j] > upper[j] + 1e-9) {
        trivially_infeasible_ = true;
        return;
      }
    }
    std::size_t slacks = 0;
    for (const auto& c : p.constraints()) {
      double rhs = c.rhs;
      for (const auto& t : c.expr) rhs -= t.coef * lower[t.var];
      int sign = c.relation == Relation::LessEqual ? 1 : c.relation == Relation::GreaterEqual ? -1 : 0;
      if (c.expr.empty()) {
        const double tol = 1e-9 * (1.0 + std::abs(c.rhs));
        const bool ok = sign > 0 ? rhs >= -tol : sign < 0 ? rhs <= tol : std::abs(rhs) <= tol;
        if (!ok) trivially_infeasible_ = true;
        continue;
      }
      if (sign != 0) ++slacks;
      rows.push_back({c.expr, sign, rhs});
    }
    if (trivially_infeasible_) return;

    m_ = rows.size();
    std::size_t artificials = 0;
    for (auto& r : rows) {
      if (r.rhs < 0) {
        for (auto& t : r.terms) t.coef = -t.coef;
        r.slack_sign = -r.slack_sign;
        r.rhs = -r.rhs;
      }
      if (r.slack_sign != 1) ++artificials;
    }
    n_struct_ = n;
    first_artificial_ = n + slacks;
    cols_ = n + slacks + artificials;
    tab_.assign(m_ * cols_, 0.0);
    rhs_.assign(m_, 0.0);
    basis_.assign(m_, 0);
    upper_.assign(cols_, kInfinity);
    at_upper_.assign(cols_, 0);
    is_basic_.assign(cols_, 0);
    for (std::size_t j = 0; j < n; ++j) upper_[j] = std::max(0.0, upper[j] - lower[j]);

    std::size_t next_slack = n;
    std::size_t next_art = first_artificial_;
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& r = rows[i];
      for (const auto& t : r.terms) at(i, t.var) += t.coef;
      rhs_[i] = r.rhs;
      std::size_t basic = 0;
      if (r.slack_sign != 0) {
        at(i, next_slack) = r.slack_sign;
        if (r.slack_sign == 1) basic = next_slack;
        ++next_slack;
      }
      if (r.slack_sign != 1) {
        at(i, next_art) = 1.0;
        basic = next_art++;
      }
      basis_[i] = basic;
      is_basic_[basic] = 1;
    }
  }

  MilpSolution solve() {
    MilpSolution out;
    if (trivially_infeasible_) return out;

    if (first_artificial_ < cols_) {
      std::vector<double> cost(cols_, 0.0);
      for (std::size_t j = first_artificial_; j < cols_; ++j) cost[j] = 1.0;
      if (run(cost) == Status::Unbounded) return out;  // cannot happen: phase 1 is bounded
      double infeasibility = 0.0;
      double scale = 1.0;
      for (std::size_t i = 0; i < m_; ++i) {
        scale = std::max(scale, std::abs(rhs_[i]));
        if (basis_[i] >= first_artificial_) infeasibility += rhs_[i];
      }
      if (infeasibility > 1e-8 * scale) return out;
      for (std::size_t j = first_artificial_; j < cols_; ++j) upper_[j] = 0.0;
    }

    std::vector<double> cost(cols_, 0.0);
    for (const auto& t : problem_.objective()) cost[t.var] += t.coef;
    if (run(cost) == Status::Unbounded) {
      out.status = Status::Unbounded;
      return out;
    }

    out.status = Status::Optimal;
    out.values.assign(n_struct_, 0.0);
    for (std::size_t j = 0; j < n_struct_; ++j)
      if (!is_basic_[j] && at_upper_[j]) out.values[j] = upper_[j];
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_struct_) out.values[basis_[i]] = rhs_[i];
    for (std::size_t j = 0; j < n_struct_; ++j) {
      double v = out.values[j];
      if (std::abs(v) < 1e-11) v = 0.0;
      if (std::isfinite(upper_[j]) && std::abs(v - upper_[j]) < 1e-11) v = upper_[j];
      v = std::max(0.0, v);
      out.values[j] = lower_[j] + v;
    }
    out.objective = problem_.objective_value(out.values);
    return out;
  }

  std::size_t iterations() const { return iterations_; }

 private:
  double& at(std::size_t i, std::size_t j) { return tab_[i * cols_ + j]; }

  Status run(const std::vector<double>& cost) {
    // reduced costs d_j = c_j - c_B^T T_j
    std::vector<double> d = cost;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &tab_[i * cols_];
      for (std::size_t j = 0; j < cols_; ++j) d[j] -= cb * row[j];
    }
    for (std::size_t i = 0; i < m_; ++i) d[basis_[i]] = 0.0;

    std::size_t degenerate = 0;
    std::vector<std::size_t> nz;
    for (;;) {
      if (++iterations_ > kMaxIterations) throw Error("simplex iteration limit exceeded");
      const bool bland = degenerate >= kDegenerateStreak;
      std::size_t enter = npos;
      double best = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (is_basic_[j] || upper_[j] <= 0.0) continue;
        double score = 0.0;
        if (!at_upper_[j] && d[j] < -kCostTol) score = -d[j];
        else if (at_upper_[j] && d[j] > kCostTol) score = d[j];
        else continue;
        if (bland) {
          enter = j;
          break;
        }
        if (score > best) {
          best = score;
          enter = j;
        }
      }
      if (enter == npos) return Status::Optimal;

      const double dir = at_upper_[enter] ? -1.0 : 1.0;
      double step = upper_[enter];
      std::size_t leave = npos;
      bool leave_to_upper = false;
      for (std::size_t i = 0; i < m_; ++i) {
        const double alpha = dir * tab_[i * cols_ + enter];
        double limit;
        bool to_upper;
        if (alpha > kPivotTol) {
          limit = rhs_[i] / alpha;
          to_upper = false;
        } else if (alpha < -kPivotTol && std::isfinite(upper_[basis_[i]])) {
          limit = (upper_[basis_[i]] - rhs_[i]) / -alpha;
          to_upper = true;
        } else {
          continue;
        }
        limit = std::max(limit, 0.0);
        const bool better = limit < step - 1e-12 ||
                            (leave != npos && limit <= step + 1e-12 && basis_[i] < basis_[leave]);
        if (better) {
          step = limit;
          leave = i;
          leave_to_upper = to_upper;
        }
      }
      if (!std::isfinite(step)) return Status::Unbounded;

      for (std::size_t i = 0; i < m_; ++i) {
        const double a = tab_[i * cols_ + enter];
        if (a != 0.0) rhs_[i] -= dir * a * step;
      }
      degenerate = step <= 1e-12 ? degenerate + 1 : 0;

      if (leave == npos) {
        at_upper_[enter] = !at_upper_[enter];
        continue;
      }

      const double entering_value = at_upper_[enter] ? upper_[enter] - step : step;
      const std::size_t leaving = basis_[leave];
      pivot(leave, enter, d, nz);
      rhs_[leave] = entering_value;
      basis_[leave] = enter;
      is_basic_[enter] = 1;
      at_upper_[enter] = 0;
      is_basic_[leaving] = 0;
      at_upper_[leaving] = leave_to_upper;
    }
  }

  void pivot(std::size_t r, std::size_t c, std::vector<double>& d, std::vector<std::size_t>& nz) {
    double* prow = &tab_[r * cols_];
    const double inv = 1.0 / prow[c];
    nz.clear();
    for (std::size_t j = 0; j < cols_; ++j) {
      if (prow[j] != 0.0) {
        prow[j] *= inv;
        nz.push_back(j);
      }
    }
    prow[c] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &tab_[i * cols_];
      const double f = row[c];
      if (f == 0.0) continue;
      for (auto j : nz) row[j] -= f * prow[j];
      row[c] = 0.0;
    }
    const double f = d[c];
    if (f != 0.0) {
      for (auto j : nz) d[j] -= f * prow[j];
      d[c] = 0.0;
    }
  }

  const MilpProblem& problem_;
  std::vector<double> lower_;
  bool trivially_infeasible_ = false;
  std::size_t m_ = 0;
  std::size_t cols_ = 0;
  std::size_t n_struct_ = 0;
  std::size_t first_artificial_ = 0;
  std::vector<double> tab_;
  std::vector<double> rhs_;
  std::vector<std::size_t> basis_;
  std::vector<double> upper_;
  std::vector<std::uint8_t> at_upper_;
  std::vector<std::uint8_t> is_basic_;
  std::size_t iterations_ = 0;
};

}  // namespace detail

// Solves the LP with variable bounds overridden by [lower, upper]. Binary
// domains are ignored (treated as their bounds).
inline MilpSolution solve_lp(const MilpProblem& p, std::span<const double> lower,
                             std::span<const double> upper) {
  detail::BoundedSimplex lp(p, lower, upper);
  return lp.solve();
}

// LP relaxation: binaries relaxed to [0, 1].
inline MilpSolution solve_lp_relaxation(const MilpProblem& p) {
  std::vector<double> lo(p.num_variables(), 0.0);
  std::vector<double> hi(p.num_variables());
  for (std::size_t j = 0; j < hi.size(); ++j) hi[j] = p.variables()[j].upper;
  return solve_lp(p, lo, hi);
}

}  // namespace chainflow::milp
