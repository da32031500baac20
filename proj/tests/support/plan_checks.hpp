#pragma once

#include <sstream>
#include <string>

#include "chainflow/core/plan.hpp"

namespace chainflow::testing {

// Returns an empty string when `plan` is feasible for `net`, otherwise a
// description of the first problem found.
inline std::string plan_problems(const SupplyNetwork& net, const FlowPlan& plan, double tol = 1e-6) {
  std::ostringstream out;
  const double residual = max_abs(flow_balance_residual(net, plan));
  if (residual > tol) out << "flow balance residual " << residual << "; ";
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const auto& ed = net.edges[e];
    const double load = plan.edge_load(e);
    for (std::size_t k = 0; k < net.num_products(); ++k) {
      if (plan.flow(e, k) < 0) out << net.edge_label(e) << " negative flow; ";
      if (plan.flow(e, k) > 0 && !ed.carries[k]) out << net.edge_label(e) << " carries foreign product; ";
    }
    if (load > ed.capacity * plan.edge_used[e] + tol)
      out << net.edge_label(e) << " load " << load << " exceeds q*beta; ";
    if (load > 0 && !ed.available) out << net.edge_label(e) << " unavailable but used; ";
  }
  for (std::size_t v = 0; v < net.num_vertices(); ++v) {
    const auto& vx = net.vertices[v];
    const double prod = plan.vertex_production(v);
    if (prod > vx.production_capacity * plan.line_open[v] + tol)
      out << vx.id << " production " << prod << " exceeds p_bar*zeta; ";
    if (prod > tol && !vx.available) out << vx.id << " unavailable but producing; ";
    for (std::size_t k = 0; k < net.num_products(); ++k) {
      if (plan.produced(v, k) > 0 && !net.producible(v, k)) out << vx.id << " produces foreign product; ";
      if (plan.inventory(v, k) < -tol || plan.satisfied(v, k) < -tol || plan.shortfall(v, k) < -tol)
        out << vx.id << " negative quantity; ";
      if (plan.satisfied(v, k) > net.demand(v, k) + tol) out << vx.id << " over-satisfied; ";
      if (plan.inventory(v, k) > tol && !net.holdable(v, k) && net.initial_inventory(v, k) <= 0.0)
        out << vx.id << " stores a product it cannot hold; ";
      if (std::abs(plan.shortfall(v, k) - (net.demand(v, k) - plan.satisfied(v, k))) > tol)
        out << vx.id << " shortfall mismatch; ";
    }
  }
  return out.str();
}

inline double total_shortfall(const FlowPlan& plan) {
  double s = 0.0;
  for (double v : plan.shortfall.values()) s += v;
  return s;
}

}  // namespace chainflow::testing
