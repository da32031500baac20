#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "chainflow/milp/branch_and_bound.hpp"
#include "chainflow/protocol/messages.hpp"

namespace chainflow::protocol {

namespace detail {

// Removes solver noise: clamps to [0, hi] and snaps to whole units when
// within 1e-6 of one.
inline double clean(double v, double hi) {
  v = std::clamp(v, 0.0, hi);
  const double r = std::round(v);
  if (std::abs(v - r) < 1e-6) v = r;
  return v < 1e-9 ? 0.0 : v;
}

inline double penalty_of(const Request& req, const FlowKey& key) {
  auto it = req.penalties.find(key);
  return it == req.penalties.end() ? 0.0 : it->second;
}

// Entries ordered by descending shortfall penalty, then product, then target.
inline std::vector<FlowKey> priority_order(const Request& req) {
  std::vector<FlowKey> keys;
  for (const auto& [key, a] : req.amounts) keys.push_back(key);
  std::stable_sort(keys.begin(), keys.end(), [&](const FlowKey& a, const FlowKey& b) {
    const double pa = penalty_of(req, a), pb = penalty_of(req, b);
    if (pa != pb) return pa > pb;
    if (a.product != b.product) return a.product < b.product;
    return a.target < b.target;
  });
  return keys;
}

}  // namespace detail

// Largest offer the agent can make towards the request with what it knows
// about itself: residual capacity of its lane to each target, spare
// inventory, residual production capacity and the components it could pull
// in over residual inbound lanes. The total offered is maximized first (the
// L1 gap to the request is minimal); remaining freedom goes to entries in
// priority order.
inline Response compute_response(const agents::Agent& agent, const Request& req) {
  using milp::Relation;
  Response resp;
  if (req.amounts.empty()) return resp;
  milp::MilpProblem p;

  std::vector<FlowKey> keys;
  std::vector<std::size_t> offer;
  std::set<std::size_t> products;
  for (const auto& [key, amount] : req.amounts) {
    const auto* lane = agent.environment.out_lane_to(AgentId::vertex(key.target));
    const bool usable = agent.available && lane && lane->available && lane->carries(key.product);
    keys.push_back(key);
    offer.push_back(p.add_continuous("o", usable ? amount : 0.0));
    products.insert(key.product);
  }
  // Targets share the residual capacity of the lane reaching them.
  std::map<std::size_t, milp::LinearExpr> per_target;
  for (std::size_t i = 0; i < keys.size(); ++i) per_target[keys[i].target].push_back({offer[i], 1.0});
  for (auto& [target, expr] : per_target) {
    const auto* lane = agent.environment.out_lane_to(AgentId::vertex(target));
    p.add_constraint(std::move(expr), Relation::LessEqual, lane ? lane->residual() : 0.0);
  }

  const auto& cap = agent.capability;
  const bool can_produce = agent.available && cap.line_available;
  std::map<std::size_t, std::size_t> make;
  for (auto k : std::set<std::size_t>(products)) {
    if (!can_produce || !cap.production.contains(k)) continue;
    make[k] = p.add_continuous("g");
    for (const auto& [c, r] : cap.bom.at(k)) products.insert(c);
  }
  if (!make.empty()) {
    milp::LinearExpr expr;
    for (const auto& [k, v] : make) expr.push_back({v, 1.0});
    p.add_constraint(std::move(expr), Relation::LessEqual,
                     std::max(0.0, cap.production_capacity - agent.state.production_total()));
  }

  std::map<std::size_t, milp::LinearExpr> supply;
  for (auto k : products) {
    auto it = agent.state.inventory.find(k);
    const double spare = agent.available && it != agent.state.inventory.end() ? std::max(0.0, it->second) : 0.0;
    if (spare > 0) supply[k].push_back({p.add_continuous("s", spare), 1.0});
    if (make.contains(k)) supply[k].push_back({make[k], 1.0});
  }
  for (const auto& lane : agent.environment.in_lanes) {
    if (!lane.available || !agent.available) continue;
    milp::LinearExpr shared;
    for (auto k : products) {
      if (!lane.carries(k)) continue;
      const auto w = p.add_continuous("w");
      supply[k].push_back({w, 1.0});
      shared.push_back({w, 1.0});
    }
    if (!shared.empty()) p.add_constraint(std::move(shared), Relation::LessEqual, lane.residual());
  }
  // Per product: offered + consumed by production <= supply.
  for (auto k : products) {
    milp::LinearExpr expr;
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (keys[i].product == k) expr.push_back({offer[i], 1.0});
    for (const auto& [m, v] : make)
      for (const auto& [c, r] : cap.bom.at(m))
        if (c == k) expr.push_back({v, r});
    for (const auto& t : supply[k]) expr.push_back({t.var, -t.coef});
    p.add_constraint(std::move(expr), Relation::LessEqual, 0.0);
  }

  auto maximize = [&](const milp::LinearExpr& target) {
    milp::LinearExpr obj;
    for (const auto& t : target) obj.push_back({t.var, -t.coef});
    p.set_objective(std::move(obj));
    auto sol = milp::solve_lp_relaxation(p);
    if (sol.status != milp::Status::Optimal) throw milp::InvalidModel("response model not solvable");
    return sol;
  };
  milp::LinearExpr all;
  for (auto v : offer) all.push_back({v, 1.0});
  auto sol = maximize(all);
  p.add_constraint(all, Relation::GreaterEqual, -sol.objective - 1e-9);
  for (const auto& key : detail::priority_order(req)) {
    const auto i = static_cast<std::size_t>(std::find(keys.begin(), keys.end(), key) - keys.begin());
    sol = maximize({{offer[i], 1.0}});
    p.add_constraint({{offer[i], 1.0}}, Relation::GreaterEqual, sol.values[offer[i]] - 1e-9);
  }

  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double amount = detail::clean(sol.values[offer[i]], req.amounts.at(keys[i]));
    if (amount <= 0) continue;
    const auto* lane = agent.environment.out_lane_to(AgentId::vertex(keys[i].target));
    Quote q;
    q.unit_cost = lane->unit_cost.at(keys[i].product);
    q.new_lane = !lane->used;
    q.fixed_cost = q.new_lane ? lane->fixed_cost : 0.0;
    auto f = lane->flow.find(keys[i].product);
    q.prior_flow = f == lane->flow.end() ? 0.0 : f->second;
    resp.offered[keys[i]] = amount;
    resp.quotes[keys[i]] = q;
  }
  return resp;
}

// Gap between a request and the offer: sum of |y-bar - y_d| over entries.
inline double l1_gap(const Request& req, const FlowVector& offered) {
  double gap = 0.0;
  for (const auto& [key, a] : req.amounts) {
    auto it = offered.find(key);
    gap += std::abs(a - (it == offered.end() ? 0.0 : it->second));
  }
  return gap;
}

struct Offer {
  AgentId responder;
  Response response;
};

struct Allocation {
  std::map<AgentId, FlowVector> flows;
  double objective = 0.0;

  FlowVector aggregate() const {
    FlowVector out;
    for (const auto& [id, v] : flows)
      for (const auto& [key, a] : v) out[key] += a;
    return out;
  }
};

struct AllocationOptions {
  // Prior flows y_0 per responder; absent entries are zero.
  std::map<AgentId, FlowVector> prior;
  // Largest number of lanes not yet in use that one allocation may open.
  std::optional<std::size_t> new_lane_cap;
  milp::SolverConfig solver;
};

// Chooses how much to take from each responder, minimizing transport cost,
// fixed cost of newly opened lanes, the weighted unsatisfied amount and the
// deviation from prior flows. A second pass keeps the optimum and prefers
// responders with lower ids.
inline Allocation select_allocation(const Request& req, const std::vector<Offer>& offers,
                                    const AllocationOptions& opt = {}) {
  using milp::Relation;
  Allocation out;
  milp::MilpProblem p;
  struct Var {
    std::size_t responder;  // index into offers
    FlowKey key;
    std::size_t y;
  };
  std::vector<Var> vars;
  milp::LinearExpr objective;
  double constant = 0.0;
  std::map<FlowKey, milp::LinearExpr> per_entry;
  std::vector<std::size_t> opened;

  for (const auto& [key, a] : req.amounts) constant += (1.0 + detail::penalty_of(req, key)) * a;
  for (std::size_t r = 0; r < offers.size(); ++r) {
    const auto& resp = offers[r].response;
    std::map<std::size_t, std::size_t> lane_var;  // target -> open binary
    for (const auto& [key, amount] : resp.offered) {
      if (!req.amounts.contains(key)) throw ProtocolViolation("offer for an entry that was not requested");
      const auto y = p.add_continuous("y", std::min(amount, req.amounts.at(key)));
      vars.push_back({r, key, y});
      const auto& q = resp.quotes.at(key);
      objective.push_back({y, q.unit_cost - (1.0 + detail::penalty_of(req, key))});
      per_entry[key].push_back({y, 1.0});
      double prior = 0.0;
      if (auto it = opt.prior.find(offers[r].responder); it != opt.prior.end())
        if (auto jt = it->second.find(key); jt != it->second.end()) prior = jt->second;
      if (prior > 0.0) {
        const auto t = p.add_continuous("t");
        p.add_constraint({{t, 1.0}, {y, -1.0}}, Relation::GreaterEqual, -prior);
        p.add_constraint({{t, 1.0}, {y, 1.0}}, Relation::GreaterEqual, prior);
        objective.push_back({t, 1.0});
      } else {
        objective.push_back({y, 1.0});
      }
      if (q.new_lane) {
        auto [it, fresh] = lane_var.try_emplace(key.target, 0);
        if (fresh) {
          it->second = p.add_binary("open");
          objective.push_back({it->second, q.fixed_cost});
          opened.push_back(it->second);
        }
        p.add_constraint({{y, 1.0}, {it->second, -amount}}, Relation::LessEqual, 0.0);
      }
    }
  }
  for (auto& [key, expr] : per_entry) p.add_constraint(expr, Relation::LessEqual, req.amounts.at(key));
  if (opt.new_lane_cap && !opened.empty()) {
    milp::LinearExpr expr;
    for (auto b : opened) expr.push_back({b, 1.0});
    p.add_constraint(std::move(expr), Relation::LessEqual, static_cast<double>(*opt.new_lane_cap));
  }
  if (vars.empty()) {
    out.objective = constant;
    return out;
  }
  p.set_objective(objective, constant);
  auto sol = milp::solve(p, opt.solver);
  if (sol.status != milp::Status::Optimal) throw milp::InvalidModel("allocation model not solvable");
  out.objective = sol.objective;

  // Tie-break towards lower agent ids without losing optimality.
  std::vector<std::size_t> order(offers.size());
  for (std::size_t r = 0; r < order.size(); ++r) order[r] = r;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return offers[a].responder < offers[b].responder; });
  std::vector<double> rank(offers.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<double>(i + 1);
  p.add_constraint(objective, Relation::LessEqual,
                   sol.objective - constant + 1e-9 * std::max(1.0, std::abs(sol.objective)));
  milp::LinearExpr ranked;
  for (const auto& v : vars) ranked.push_back({v.y, rank[v.responder]});
  p.set_objective(std::move(ranked));
  auto tie = milp::solve(p, opt.solver);
  if (tie.status == milp::Status::Optimal) sol.values = tie.values;

  for (const auto& v : vars) {
    const double a = detail::clean(sol.values[v.y], offers[v.responder].response.offered.at(v.key));
    if (a > 0) out.flows[offers[v.responder].responder][v.key] += a;
  }
  // Snapping may not push an entry over the requested amount.
  for (const auto& [key, total_taken] : out.aggregate()) {
    double excess = total_taken - req.amounts.at(key);
    for (auto it = out.flows.rbegin(); excess > 0 && it != out.flows.rend(); ++it) {
      auto jt = it->second.find(key);
      if (jt == it->second.end()) continue;
      const double cut = std::min(excess, jt->second);
      jt->second -= cut;
      excess -= cut;
      if (jt->second <= 0) it->second.erase(jt);
    }
  }
  std::erase_if(out.flows, [](const auto& kv) { return kv.second.empty(); });
  return out;
}

}  // namespace chainflow::protocol
