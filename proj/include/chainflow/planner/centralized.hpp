#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chainflow/core/plan.hpp"
#include "chainflow/milp/branch_and_bound.hpp"

namespace chainflow::planner {

class PlanInfeasible : public Error {
 public:
  using Error::Error;
};

// Per-edge and per-vertex usage change penalties plus an optional cap on the
// number of newly opened edges.
struct ReplanPenalties {
  std::vector<double> edge;
  std::vector<double> vertex;
  std::optional<std::size_t> added_edge_cap;

  static ReplanPenalties from_network(const SupplyNetwork& net) {
    ReplanPenalties p;
    for (const auto& e : net.edges) p.edge.push_back(e.change_penalty);
    for (const auto& v : net.vertices) p.vertex.push_back(v.change_penalty);
    return p;
  }

  static ReplanPenalties zero(const SupplyNetwork& net) {
    ReplanPenalties p;
    p.edge.assign(net.num_edges(), 0.0);
    p.vertex.assign(net.num_vertices(), 0.0);
    return p;
  }

  void validate(const SupplyNetwork& net) const {
    if (edge.size() != net.num_edges() || vertex.size() != net.num_vertices())
      throw DimensionMismatch("replan penalties do not match the network");
    for (double v : edge)
      if (!(v >= 0.0)) throw InvalidNetwork("edge change penalties must be non-negative");
    for (double v : vertex)
      if (!(v >= 0.0)) throw InvalidNetwork("vertex change penalties must be non-negative");
  }
};

// MILP over a network together with the variable index of every decision
// symbol. Absent variables (e.g. demand at non-customers) hold npos.
struct PlanModel {
  milp::MilpProblem problem;
  Grid<std::size_t> y;          // (edge, product)
  std::vector<std::size_t> beta;
  Grid<std::size_t> x;          // (vertex, product)
  Grid<std::size_t> shortfall;  // Delta^d
  Grid<std::size_t> p;
  std::vector<std::size_t> zeta;
  Grid<std::size_t> inventory;
  std::vector<std::size_t> edge_change;    // Delta^E, replan only
  std::vector<std::size_t> vertex_change;  // Delta^V, replan only
};

namespace detail {

inline void require_valid(const SupplyNetwork& net) {
  const auto report = validate_network(net);
  if (report.empty()) return;
  std::string msg = "invalid network:";
  for (const auto& v : report) msg += " [" + v.field + " " + v.entity + ": " + v.message + "]";
  throw InvalidNetwork(msg);
}

inline std::string name(const char* sym, const std::string& a, const std::string& b = {}) {
  return b.empty() ? std::string(sym) + "[" + a + "]" : std::string(sym) + "[" + a + "," + b + "]";
}

}  // namespace detail

// Base planning model: minimize operating cost subject to flow balance,
// edge and production capacity, and demand shortfall accounting.
inline PlanModel build_base_model(const SupplyNetwork& net) {
  using milp::Relation;
  detail::require_valid(net);
  const auto nv = net.num_vertices();
  const auto nk = net.num_products();
  const auto ne = net.num_edges();
  PlanModel m;
  auto& P = m.problem;
  m.y = Grid<std::size_t>(ne, nk, npos);
  m.x = Grid<std::size_t>(nv, nk, npos);
  m.shortfall = Grid<std::size_t>(nv, nk, npos);
  m.p = Grid<std::size_t>(nv, nk, npos);
  m.inventory = Grid<std::size_t>(nv, nk, npos);
  m.beta.assign(ne, npos);
  m.zeta.assign(nv, npos);

  milp::LinearExpr objective;
  double constant = 0.0;
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& ed = net.edges[e];
    const auto label = net.edge_label(e);
    const bool usable = ed.available && net.vertices[ed.from].available && net.vertices[ed.to].available;
    for (std::size_t k = 0; k < nk; ++k) {
      if (!ed.carries[k]) continue;
      m.y(e, k) = P.add_continuous(detail::name("y", label, net.products[k].id),
                                   usable ? ed.capacity : 0.0);
      objective.push_back({m.y(e, k), ed.unit_cost[k]});
    }
    m.beta[e] = P.add_binary(detail::name("beta", label));
    if (!usable) P.set_upper_bound(m.beta[e], 0.0);
    objective.push_back({m.beta[e], ed.fixed_cost});
  }
  for (std::size_t v = 0; v < nv; ++v) {
    const auto& vx = net.vertices[v];
    const double cap = net.effective_production_capacity(v);
    if (vx.production_capacity > 0.0) {
      m.zeta[v] = P.add_binary(detail::name("zeta", vx.id));
      if (cap <= 0.0) P.set_upper_bound(m.zeta[v], 0.0);
      objective.push_back({m.zeta[v], vx.line_cost});
    }
    for (std::size_t k = 0; k < nk; ++k) {
      const auto& pid = net.products[k].id;
      if (net.producible(v, k) && vx.production_capacity > 0.0) {
        m.p(v, k) = P.add_continuous(detail::name("p", vx.id, pid), cap);
        objective.push_back({m.p(v, k), net.production_cost(v, k)});
      }
      if (net.holdable(v, k) || net.initial_inventory(v, k) > 0.0) {
        m.inventory(v, k) = P.add_continuous(detail::name("I", vx.id, pid),
                                             vx.available ? kInfinity : 0.0);
        objective.push_back({m.inventory(v, k), net.holding_cost(v, k)});
      }
      if (net.demand(v, k) > 0.0) {
        m.x(v, k) = P.add_continuous(detail::name("x", vx.id, pid), net.demand(v, k));
        m.shortfall(v, k) = P.add_continuous(detail::name("dd", vx.id, pid));
        objective.push_back({m.shortfall(v, k), net.shortfall_penalty(v, k)});
      }
    }
  }
  P.set_objective(std::move(objective), constant);

  // Flow balance: in - out + p - sum r p' - x - I = -I0
  std::vector<milp::LinearExpr> balance(nv * nk);
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t k = 0; k < nk; ++k) {
      if (m.y(e, k) == npos) continue;
      balance[net.edges[e].to * nk + k].push_back({m.y(e, k), 1.0});
      balance[net.edges[e].from * nk + k].push_back({m.y(e, k), -1.0});
    }
  }
  for (std::size_t v = 0; v < nv; ++v) {
    for (std::size_t k = 0; k < nk; ++k) {
      auto& row = balance[v * nk + k];
      if (m.p(v, k) != npos) {
        row.push_back({m.p(v, k), 1.0});
        for (const auto& [c, r] : net.components_of(k)) balance[v * nk + c].push_back({m.p(v, k), -r});
      }
      if (m.x(v, k) != npos) row.push_back({m.x(v, k), -1.0});
      if (m.inventory(v, k) != npos) row.push_back({m.inventory(v, k), -1.0});
    }
  }
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t k = 0; k < nk; ++k)
      if (!balance[v * nk + k].empty() || net.initial_inventory(v, k) != 0.0)
        P.add_constraint(std::move(balance[v * nk + k]), Relation::Equal,
                         -net.initial_inventory(v, k),
                         detail::name("balance", net.vertices[v].id, net.products[k].id));

  for (std::size_t e = 0; e < ne; ++e) {
    milp::LinearExpr row;
    for (std::size_t k = 0; k < nk; ++k)
      if (m.y(e, k) != npos) row.push_back({m.y(e, k), 1.0});
    if (row.empty()) continue;
    row.push_back({m.beta[e], -net.edges[e].capacity});
    P.add_constraint(std::move(row), Relation::LessEqual, 0.0, detail::name("edgecap", net.edge_label(e)));
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if (m.zeta[v] == npos) continue;
    milp::LinearExpr row;
    for (std::size_t k = 0; k < nk; ++k)
      if (m.p(v, k) != npos) row.push_back({m.p(v, k), 1.0});
    if (row.empty()) continue;
    row.push_back({m.zeta[v], -net.vertices[v].production_capacity});
    P.add_constraint(std::move(row), Relation::LessEqual, 0.0, detail::name("prodcap", net.vertices[v].id));
  }
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t k = 0; k < nk; ++k)
      if (m.x(v, k) != npos)
        P.add_constraint({{m.shortfall(v, k), 1.0}, {m.x(v, k), 1.0}}, Relation::GreaterEqual,
                         net.demand(v, k), detail::name("unmet", net.vertices[v].id, net.products[k].id));
  return m;
}

// Reads a FlowPlan out of a solved model. Values within 1e-9 of zero are
// snapped to zero and the shortfall is recomputed as d - x.
inline FlowPlan extract_plan(const SupplyNetwork& net, const PlanModel& m,
                             const std::vector<double>& values) {
  auto value = [&](std::size_t idx) {
    if (idx == npos) return 0.0;
    const double v = values[idx];
    return std::abs(v) < 1e-9 ? 0.0 : v;
  };
  auto plan = FlowPlan::zeros(net);
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    for (std::size_t k = 0; k < net.num_products(); ++k) plan.flow(e, k) = value(m.y(e, k));
    plan.edge_used[e] = value(m.beta[e]) > 0.5;
  }
  for (std::size_t v = 0; v < net.num_vertices(); ++v) {
    plan.line_open[v] = value(m.zeta[v]) > 0.5;
    for (std::size_t k = 0; k < net.num_products(); ++k) {
      plan.produced(v, k) = value(m.p(v, k));
      plan.inventory(v, k) = value(m.inventory(v, k));
      plan.satisfied(v, k) = value(m.x(v, k));
      const double gap = net.demand(v, k) - plan.satisfied(v, k);
      plan.shortfall(v, k) = gap > 1e-9 ? gap : 0.0;
    }
  }
  return plan;
}

struct PlanResult {
  FlowPlan plan;
  double objective = 0.0;
  std::size_t nodes = 0;
};

inline PlanResult solve_model(const SupplyNetwork& net, const PlanModel& m,
                              const milp::SolverConfig& cfg) {
  const auto s = milp::solve(m.problem, cfg);
  if (s.status != milp::Status::Optimal)
    throw PlanInfeasible("planning model is " + std::string(milp::to_string(s.status)));
  return {extract_plan(net, m, s.values), s.objective, s.nodes};
}

inline FlowPlan plan(const SupplyNetwork& net, const milp::SolverConfig& cfg = {}) {
  return solve_model(net, build_base_model(net), cfg).plan;
}

// Re-planning model: the base model on the disrupted network plus usage
// change indicators against the baseline, penalized in the objective.
inline PlanModel build_replan_model(const SupplyNetwork& disrupted, const FlowPlan& baseline,
                                    const ReplanPenalties& pen) {
  using milp::Relation;
  check_dimensions(disrupted, baseline);
  pen.validate(disrupted);
  auto m = build_base_model(disrupted);
  auto& P = m.problem;
  auto objective = P.objective();
  double constant = P.objective_constant();

  m.edge_change.assign(disrupted.num_edges(), npos);
  for (std::size_t e = 0; e < disrupted.num_edges(); ++e) {
    const auto d = P.add_binary(detail::name("dE", disrupted.edge_label(e)));
    m.edge_change[e] = d;
    const double b0 = baseline.edge_used[e];
    P.add_constraint({{d, 1.0}, {m.beta[e], -1.0}}, Relation::GreaterEqual, -b0);
    P.add_constraint({{d, 1.0}, {m.beta[e], 1.0}}, Relation::GreaterEqual, b0);
    objective.push_back({d, pen.edge[e]});
  }
  m.vertex_change.assign(disrupted.num_vertices(), npos);
  for (std::size_t v = 0; v < disrupted.num_vertices(); ++v) {
    const double z0 = baseline.line_open[v];
    if (m.zeta[v] == npos) {
      constant += pen.vertex[v] * z0;  // zeta fixed at 0
      continue;
    }
    const auto d = P.add_binary(detail::name("dV", disrupted.vertices[v].id));
    m.vertex_change[v] = d;
    P.add_constraint({{d, 1.0}, {m.zeta[v], -1.0}}, Relation::GreaterEqual, -z0);
    P.add_constraint({{d, 1.0}, {m.zeta[v], 1.0}}, Relation::GreaterEqual, z0);
    objective.push_back({d, pen.vertex[v]});
  }
  P.set_objective(std::move(objective), constant);

  if (pen.added_edge_cap) {
    milp::LinearExpr row;
    for (std::size_t e = 0; e < disrupted.num_edges(); ++e)
      if (!baseline.edge_used[e]) row.push_back({m.beta[e], 1.0});
    P.add_constraint(std::move(row), Relation::LessEqual, static_cast<double>(*pen.added_edge_cap),
                     "added_edge_cap");
  }
  return m;
}

struct ReplanResult {
  FlowPlan plan;
  PlanDelta delta;
  double objective = 0.0;
  std::size_t nodes = 0;
};

inline ReplanResult replan(const SupplyNetwork& disrupted, const FlowPlan& baseline,
                           const ReplanPenalties& pen, const milp::SolverConfig& cfg = {}) {
  auto r = solve_model(disrupted, build_replan_model(disrupted, baseline, pen), cfg);
  auto delta = plan_delta(baseline, r.plan, disrupted);
  return {std::move(r.plan), std::move(delta), r.objective, r.nodes};
}

// Fewest previously unused edges that must open for every demand to be met
// in full on the disrupted network; nullopt if no plan meets all demand.
inline std::optional<std::size_t> min_added_edges_for_full_service(
    const SupplyNetwork& disrupted, const FlowPlan& baseline, const milp::SolverConfig& cfg = {}) {
  check_dimensions(disrupted, baseline);
  auto m = build_base_model(disrupted);
  auto& P = m.problem;
  for (std::size_t v = 0; v < disrupted.num_vertices(); ++v)
    for (std::size_t k = 0; k < disrupted.num_products(); ++k)
      if (m.shortfall(v, k) != npos) P.set_upper_bound(m.shortfall(v, k), 0.0);
  milp::LinearExpr objective;
  for (std::size_t e = 0; e < disrupted.num_edges(); ++e)
    if (!baseline.edge_used[e]) objective.push_back({m.beta[e], 1.0});
  P.set_objective(std::move(objective));
  const auto s = milp::solve(P, cfg);
  if (s.status != milp::Status::Optimal) return std::nullopt;
  return static_cast<std::size_t>(std::llround(s.objective));
}

// Messages for a centralized re-run: one request to the planner, one request
// and one response per vertex to collect data, and one notification per
// vertex whose incident flows or production change.
inline std::size_t centralized_comm_effort(const SupplyNetwork& net, const PlanDelta& delta) {
  std::vector<std::uint8_t> notify(net.num_vertices(), 0);
  for (std::size_t e = 0; e < delta.edge_status.size(); ++e) {
    const auto s = delta.edge_status[e];
    if (s == EdgeStatus::Changed || s == EdgeStatus::Added || s == EdgeStatus::Removed) {
      notify[net.edges[e].from] = 1;
      notify[net.edges[e].to] = 1;
    }
  }
  for (std::size_t v = 0; v < delta.production_changed.size(); ++v)
    if (delta.production_changed[v]) notify[v] = 1;
  std::size_t changed = 0;
  for (auto n : notify) changed += n;
  return 1 + 2 * net.num_vertices() + changed;
}

}  // namespace chainflow::planner
