#pragma once

#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "chainflow/milp/simplex.hpp"

namespace chainflow::milp {

enum class BranchRule {
  MostFractional,  // largest min(v, 1 - v); ties by lowest variable index
  LowestIndex,     // first fractional binary
};

struct SolverConfig {
  double feasibility_tolerance = 1e-9;
  double integrality_tolerance = 1e-6;
  std::size_t node_limit = 500000;
  BranchRule branch_rule = BranchRule::MostFractional;

  void validate() const {
    if (!(feasibility_tolerance > 0) || !(integrality_tolerance > 0))
      throw InvalidModel("solver tolerances must be positive");
    if (node_limit < 1) throw InvalidModel("node limit must be at least 1");
  }
};

namespace detail {

struct Node {
  double bound;
  std::size_t depth;
  std::size_t id;
  std::vector<std::int8_t> fixed;  // per binary: -1 free, 0, 1
};

// Best bound first; among equal bounds the deeper node, then the older one.
struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  }
};

inline void apply_fixings(const std::vector<std::size_t>& binaries,
                          const std::vector<std::int8_t>& fixed, std::vector<double>& lo,
                          std::vector<double>& hi) {
  for (std::size_t b = 0; b < binaries.size(); ++b) {
    if (fixed[b] < 0) continue;
    lo[binaries[b]] = fixed[b];
    hi[binaries[b]] = fixed[b];
  }
}

}  // namespace detail

// Exact branch-and-bound over the binary variables. Each node solves its LP
// relaxation from scratch; the incumbent is re-solved with all binaries fixed
// so the returned values are exactly integral on binaries.
inline MilpSolution solve(const MilpProblem& p, const SolverConfig& cfg = {}) {
  cfg.validate();
  const auto binaries = p.binaries();
  std::vector<double> base_lo(p.num_variables(), 0.0);
  std::vector<double> base_hi(p.num_variables());
  for (std::size_t j = 0; j < base_hi.size(); ++j) base_hi[j] = p.variables()[j].upper;

  if (binaries.empty()) {
    auto s = solve_lp(p, base_lo, base_hi);
    s.nodes = 1;
    return s;
  }

  std::priority_queue<detail::Node, std::vector<detail::Node>, detail::NodeOrder> open;
  std::size_t next_id = 0;
  open.push({-kInfinity, 0, next_id++, std::vector<std::int8_t>(binaries.size(), -1)});

  MilpSolution best;
  best.status = Status::Infeasible;
  double incumbent = kInfinity;
  std::size_t nodes = 0;
  auto prune_level = [&] {
    return std::isfinite(incumbent) ? incumbent - 1e-9 * std::max(1.0, std::abs(incumbent))
                                    : kInfinity;
  };

  std::vector<double> lo, hi;
  while (!open.empty()) {
    auto node = open.top();
    open.pop();
    if (node.bound >= prune_level()) continue;
    if (++nodes > cfg.node_limit)
      throw NodeLimitExceeded("branch-and-bound exceeded " + std::to_string(cfg.node_limit) +
                              " nodes");
    lo = base_lo;
    hi = base_hi;
    detail::apply_fixings(binaries, node.fixed, lo, hi);
    auto lp = solve_lp(p, lo, hi);
    if (lp.status == Status::Infeasible) continue;

    std::size_t branch = npos;
    if (lp.status == Status::Unbounded) {
      // Same recession cone at every feasible fixing: descend to a leaf.
      for (std::size_t b = 0; b < binaries.size() && branch == npos; ++b)
        if (node.fixed[b] < 0) branch = b;
      if (branch == npos) {
        best = {};
        best.status = Status::Unbounded;
        best.nodes = nodes;
        return best;
      }
    } else {
      if (lp.objective >= prune_level()) continue;
      double best_score = cfg.integrality_tolerance;
      for (std::size_t b = 0; b < binaries.size(); ++b) {
        const double v = lp.values[binaries[b]];
        const double frac = std::min(v, 1.0 - v);
        if (frac <= cfg.integrality_tolerance) continue;
        if (cfg.branch_rule == BranchRule::LowestIndex) {
          branch = b;
          break;
        }
        if (frac > best_score + 1e-12) {
          best_score = frac;
          branch = b;
        }
      }
      if (branch == npos) {
        // Integral: polish with binaries fixed to their rounded values.
        auto fixed = node.fixed;
        for (std::size_t b = 0; b < binaries.size(); ++b)
          fixed[b] = lp.values[binaries[b]] > 0.5 ? 1 : 0;
        lo = base_lo;
        hi = base_hi;
        detail::apply_fixings(binaries, fixed, lo, hi);
        auto polished = solve_lp(p, lo, hi);
        if (polished.status == Status::Optimal && polished.objective < prune_level()) {
          incumbent = polished.objective;
          best = std::move(polished);
        }
        continue;
      }
    }
    const double bound = lp.status == Status::Unbounded ? -kInfinity : lp.objective;
    for (std::int8_t value : {std::int8_t{0}, std::int8_t{1}}) {
      auto child = node.fixed;
      child[branch] = value;
      open.push({bound, node.depth + 1, next_id++, std::move(child)});
    }
  }
  best.nodes = nodes;
  return best;
}

// Test oracle: enumerates every binary assignment and solves the remaining LP.
inline MilpSolution brute_force_solve(const MilpProblem& p, std::size_t max_binaries = 20) {
  const auto binaries = p.binaries();
  if (binaries.size() > max_binaries)
    throw TooManyBinaries("brute force supports at most " + std::to_string(max_binaries) +
                          " binaries, model has " + std::to_string(binaries.size()));
  std::vector<double> base_lo(p.num_variables(), 0.0);
  std::vector<double> base_hi(p.num_variables());
  for (std::size_t j = 0; j < base_hi.size(); ++j) base_hi[j] = p.variables()[j].upper;

  MilpSolution best;
  best.status = Status::Infeasible;
  const std::uint64_t count = std::uint64_t{1} << binaries.size();
  std::vector<double> lo, hi;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    lo = base_lo;
    hi = base_hi;
    bool possible = true;
    for (std::size_t b = 0; b < binaries.size(); ++b) {
      const double v = (mask >> b) & 1U ? 1.0 : 0.0;
      if (v > base_hi[binaries[b]]) possible = false;
      lo[binaries[b]] = hi[binaries[b]] = v;
    }
    if (!possible) continue;
    auto lp = solve_lp(p, lo, hi);
    ++best.nodes;
    if (lp.status == Status::Unbounded) {
      MilpSolution out;
      out.status = Status::Unbounded;
      out.nodes = best.nodes;
      return out;
    }
    if (lp.status == Status::Optimal &&
        (best.status != Status::Optimal || lp.objective < best.objective - 1e-12)) {
      const auto nodes = best.nodes;
      best = std::move(lp);
      best.nodes = nodes;
    }
  }
  return best;
}

}  // namespace chainflow::milp
