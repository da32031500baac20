#pragma once

#include <vector>

#include "chainflow/core/network.hpp"

namespace chainflow {

// One period's decisions over a SupplyNetwork.
struct FlowPlan {
  Grid<double> flow;                   // y (edge, product)
  std::vector<std::uint8_t> edge_used;  // beta
  Grid<double> satisfied;              // x (vertex, product)
  Grid<double> produced;               // p
  std::vector<std::uint8_t> line_open;  // zeta
  Grid<double> inventory;              // I, end of period
  Grid<double> shortfall;              // Delta^d

  static FlowPlan zeros(const SupplyNetwork& net) {
    const auto nv = net.num_vertices();
    const auto nk = net.num_products();
    FlowPlan p;
    p.flow = Grid<double>(net.num_edges(), nk);
    p.edge_used.assign(net.num_edges(), 0);
    p.satisfied = Grid<double>(nv, nk);
    p.produced = Grid<double>(nv, nk);
    p.line_open.assign(nv, 0);
    p.inventory = Grid<double>(nv, nk);
    p.shortfall = Grid<double>(nv, nk);
    return p;
  }

  double edge_load(std::size_t e) const {
    double s = 0.0;
    for (double v : flow.row(e)) s += v;
    return s;
  }

  double vertex_production(std::size_t v) const {
    double s = 0.0;
    for (double x : produced.row(v)) s += x;
    return s;
  }

  friend bool operator==(const FlowPlan&, const FlowPlan&) = default;
};

inline void check_dimensions(const SupplyNetwork& net, const FlowPlan& plan) {
  const auto nv = net.num_vertices();
  const auto nk = net.num_products();
  auto grid_ok = [&](const Grid<double>& g, std::size_t rows) {
    return g.rows() == rows && g.cols() == nk;
  };
  if (!grid_ok(plan.flow, net.num_edges()) || plan.edge_used.size() != net.num_edges() ||
      !grid_ok(plan.satisfied, nv) || !grid_ok(plan.produced, nv) ||
      plan.line_open.size() != nv || !grid_ok(plan.inventory, nv) ||
      !grid_ok(plan.shortfall, nv))
    throw DimensionMismatch("flow plan dimensions do not match the network");
}

struct CostBreakdown {
  double transport_var = 0.0;
  double holding = 0.0;
  double production_var = 0.0;
  double transport_fixed = 0.0;
  double production_fixed = 0.0;
  double demand_penalty = 0.0;
  double edge_change_penalty = 0.0;
  double vertex_change_penalty = 0.0;
  double total = 0.0;

  double flow_related() const { return transport_var + transport_fixed + holding; }
  double production_related() const { return production_var + production_fixed; }
};

// Operating cost of `plan`; when `baseline` is given the edge/vertex usage
// change penalties against it are added as well.
inline CostBreakdown total_cost(const SupplyNetwork& net, const FlowPlan& plan,
                                const FlowPlan* baseline = nullptr) {
  check_dimensions(net, plan);
  if (baseline) check_dimensions(net, *baseline);
  CostBreakdown c;
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const auto& edge = net.edges[e];
    for (std::size_t k = 0; k < net.num_products(); ++k)
      c.transport_var += edge.unit_cost[k] * plan.flow(e, k);
    c.transport_fixed += edge.fixed_cost * plan.edge_used[e];
    if (baseline && plan.edge_used[e] != baseline->edge_used[e])
      c.edge_change_penalty += edge.change_penalty;
  }
  for (std::size_t v = 0; v < net.num_vertices(); ++v) {
    for (std::size_t k = 0; k < net.num_products(); ++k) {
      c.holding += net.holding_cost(v, k) * plan.inventory(v, k);
      c.production_var += net.production_cost(v, k) * plan.produced(v, k);
      c.demand_penalty += net.shortfall_penalty(v, k) * plan.shortfall(v, k);
    }
    c.production_fixed += net.vertices[v].line_cost * plan.line_open[v];
    if (baseline && plan.line_open[v] != baseline->line_open[v])
      c.vertex_change_penalty += net.vertices[v].change_penalty;
  }
  c.total = c.transport_var + c.holding + c.production_var + c.transport_fixed +
            c.production_fixed + c.demand_penalty + c.edge_change_penalty +
            c.vertex_change_penalty;
  return c;
}

// residual(i,k) = inflow - outflow + p_ik - sum_k' r_kk' p_ik' - x_ik - (I_ik - I0_ik)
// Zero everywhere for a balanced plan.
inline Grid<double> flow_balance_residual(const SupplyNetwork& net, const FlowPlan& plan) {
  check_dimensions(net, plan);
  const auto nk = net.num_products();
  Grid<double> r(net.num_vertices(), nk);
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    for (std::size_t k = 0; k < nk; ++k) {
      r(net.edges[e].to, k) += plan.flow(e, k);
      r(net.edges[e].from, k) -= plan.flow(e, k);
    }
  }
  for (std::size_t v = 0; v < net.num_vertices(); ++v) {
    for (std::size_t k = 0; k < nk; ++k) {
      double consumed = 0.0;
      for (std::size_t k2 = 0; k2 < nk; ++k2) consumed += net.bom(k, k2) * plan.produced(v, k2);
      r(v, k) += plan.produced(v, k) - consumed - plan.satisfied(v, k) -
                 (plan.inventory(v, k) - net.initial_inventory(v, k));
    }
  }
  return r;
}

inline double max_abs(const Grid<double>& g) {
  double m = 0.0;
  for (double v : g.values()) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------
// Plan comparison

enum class EdgeStatus { Unused, Unchanged, Changed, Added, Removed };

inline std::string_view to_string(EdgeStatus s) {
  switch (s) {
    case EdgeStatus::Unused: return "unused";
    case EdgeStatus::Unchanged: return "unchanged";
    case EdgeStatus::Changed: return "changed";
    case EdgeStatus::Added: return "added";
    case EdgeStatus::Removed: return "removed";
  }
  return "?";
}

struct PlanDelta {
  std::vector<std::uint8_t> edge_change;    // Delta^E
  std::vector<std::uint8_t> vertex_change;  // Delta^V
  std::vector<EdgeStatus> edge_status;
  // Vertex whose production vector or line status differs.
  std::vector<std::uint8_t> production_changed;
  std::size_t added_edges = 0;    // E_a
  std::size_t changed_flows = 0;  // F_c
  std::size_t removed_edges = 0;
  double flow_cost_change = 0.0;        // C_f
  double production_cost_change = 0.0;  // C_p
};

// Added and removed edges are counted separately from changed flows: F_c only
// covers edges that carry flow both before and after with a different vector.
inline PlanDelta plan_delta(const FlowPlan& baseline, const FlowPlan& next,
                            const SupplyNetwork& net) {
  check_dimensions(net, baseline);
  check_dimensions(net, next);
  PlanDelta d;
  const auto nk = net.num_products();
  d.edge_change.assign(net.num_edges(), 0);
  d.edge_status.assign(net.num_edges(), EdgeStatus::Unused);
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const bool before = baseline.edge_used[e] != 0;
    const bool after = next.edge_used[e] != 0;
    d.edge_change[e] = before != after;
    if (!before && after) {
      d.edge_status[e] = EdgeStatus::Added;
      ++d.added_edges;
    } else if (before && !after) {
      d.edge_status[e] = EdgeStatus::Removed;
      ++d.removed_edges;
    } else if (before && after) {
      bool differs = false;
      for (std::size_t k = 0; k < nk; ++k)
        differs = differs || std::abs(baseline.flow(e, k) - next.flow(e, k)) > kTolerance;
      d.edge_status[e] = differs ? EdgeStatus::Changed : EdgeStatus::Unchanged;
      if (differs) ++d.changed_flows;
    }
  }
  d.vertex_change.assign(net.num_vertices(), 0);
  d.production_changed.assign(net.num_vertices(), 0);
  for (std::size_t v = 0; v < net.num_vertices(); ++v) {
    d.vertex_change[v] = baseline.line_open[v] != next.line_open[v];
    bool differs = d.vertex_change[v] != 0;
    for (std::size_t k = 0; k < nk; ++k)
      differs = differs || std::abs(baseline.produced(v, k) - next.produced(v, k)) > kTolerance;
    d.production_changed[v] = differs;
  }
  const auto before = total_cost(net, baseline);
  const auto after = total_cost(net, next);
  d.flow_cost_change = after.flow_related() - before.flow_related();
  d.production_cost_change = after.production_related() - before.production_related();
  return d;
}

}  // namespace chainflow
