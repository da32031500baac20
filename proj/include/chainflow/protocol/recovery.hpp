#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chainflow/planner/centralized.hpp"
#include "chainflow/protocol/negotiation.hpp"

namespace chainflow::protocol {

using agents::Agent;
using agents::AgentSet;
using agents::Quantities;

enum class RecoveryStatus { Recovered, PartiallyRecovered, FellBackToCentralized };

inline std::string_view to_string(RecoveryStatus s) {
  switch (s) {
    case RecoveryStatus::Recovered: return "Recovered";
    case RecoveryStatus::PartiallyRecovered: return "PartiallyRecovered";
    case RecoveryStatus::FellBackToCentralized: return "FellBackToCentralized";
  }
  return "?";
}

struct RecoveryConfig {
  // When local negotiation leaves flows unrecovered: re-plan centrally
  // (true) or keep the partial recovery and accept the shortfall.
  bool fallback_to_centralized = true;
  // Cap on lanes not yet in use that a single allocation may open.
  std::optional<std::size_t> new_lane_cap;
  // Penalties for the centralized fallback; taken from the network if unset.
  std::optional<planner::ReplanPenalties> fallback_penalties;
  milp::SolverConfig solver;
  std::size_t max_depth = 16;
};

struct World {
  SupplyNetwork net;
  FlowPlan plan;
  AgentSet agents;

  static World make(SupplyNetwork net, FlowPlan plan) {
    auto agents = agents::init_agents(net, plan);
    return {std::move(net), std::move(plan), std::move(agents)};
  }
};

struct RecoveryOutcome {
  RecoveryStatus status = RecoveryStatus::Recovered;
  SupplyNetwork disrupted;
  FlowPlan plan;
  MessageLog log;
  Quantities unrecovered;  // per product
  AgentSet agents;         // knowledge after the recovery
};

// A disrupted agent's request and the agents it goes to.
struct RequestPlan {
  AgentId requester;
  Request request;
  std::vector<AgentId> recipients;
};

namespace detail {

inline Request make_entries(const Agent& a, const FlowVector& amounts) {
  Request req;
  for (const auto& [key, amount] : amounts) {
    if (amount <= 0) continue;
    req.amounts[key] = amount;
    auto it = a.environment.product_value.find(key.product);
    req.penalties[key] = it == a.environment.product_value.end() ? 0.0 : it->second;
  }
  return req;
}

// Peers able to stand in for the agent on product k: producers if the agent
// produces k, otherwise holders.
inline void add_stand_ins(const Agent& a, std::size_t k, std::set<AgentId>& out) {
  using agents::CapabilityKind;
  for (auto kind : {CapabilityKind::Production, CapabilityKind::Inventory}) {
    const agents::Capability cap{kind, k};
    if (!a.capability.has(cap)) continue;
    for (auto id : agents::same_capability_peers(a, cap)) out.insert(id);
    return;
  }
}

}  // namespace detail

// The flows an agent must replace after `event`, built from its own
// knowledge, and the agents it asks. Empty when nothing it sends is lost.
inline RequestPlan make_request(const Agent& d, const DisruptionEvent& event, const SupplyNetwork& net) {
  RequestPlan rp;
  rp.requester = d.id;
  FlowVector lost;
  std::set<AgentId> recipients;
  std::visit(
      [&](const auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, VertexLoss>) {
          if (net.vertex_index(ev.vertex) != d.id.index) return;
          for (const auto& lane : d.environment.out_lanes)
            for (const auto& [k, y] : lane.flow)
              if (y > 0) lost[{lane.peer.index, k}] += y;
        } else if constexpr (std::is_same_v<T, EdgeLoss>) {
          for (const auto& ref : ev.edges) {
            const auto e = net.edge_index(ref.from, ref.to);
            if (net.edges[e].from != d.id.index) continue;
            for (const auto& lane : d.environment.out_lanes)
              if (lane.edge == e)
                for (const auto& [k, y] : lane.flow)
                  if (y > 0) lost[{lane.peer.index, k}] += y;
          }
        } else {
          if (net.vertex_index(ev.vertex) != d.id.index) return;
          const auto k = net.product_index(ev.product);
          if (ev.amount > 0) lost[{d.id.index, k}] += ev.amount;
          auto it = d.environment.upstream.find(k);
          if (it != d.environment.upstream.end()) recipients.insert(it->second.begin(), it->second.end());
        }
      },
      event);
  rp.request = detail::make_entries(d, lost);
  if (rp.request.amounts.empty()) return rp;
  if (!std::holds_alternative<NewDemand>(event))
    for (const auto& [key, a] : rp.request.amounts) detail::add_stand_ins(d, key.product, recipients);
  rp.recipients.assign(recipients.begin(), recipients.end());
  return rp;
}

// Agents whose knowledge tells them they are hit by `event`.
inline std::vector<AgentId> disrupted_agents(const SupplyNetwork& net, const DisruptionEvent& event) {
  std::set<AgentId> out;
  std::visit(
      [&](const auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, EdgeLoss>) {
          for (const auto& ref : ev.edges) out.insert(AgentId::vertex(net.vertex_index(ref.from)));
        } else {
          out.insert(AgentId::vertex(net.vertex_index(ev.vertex)));
        }
      },
      event);
  return {out.begin(), out.end()};
}

// How an agent would cover an accepted allocation: spare inventory first,
// then production on its own line, and requests upstream for whatever
// components (or, for non-producers, products) are still missing.
struct SupplyPlan {
  Quantities from_inventory;
  Quantities production;
  Request upstream;  // combined; entries target the agent itself
  std::vector<std::pair<AgentId, Request>> requests;
};

inline std::vector<std::size_t> by_value(const Agent& a, const Quantities& q) {
  std::vector<std::size_t> ks;
  for (const auto& [k, v] : q) ks.push_back(k);
  auto value = [&](std::size_t k) {
    auto it = a.environment.product_value.find(k);
    return it == a.environment.product_value.end() ? 0.0 : it->second;
  };
  std::stable_sort(ks.begin(), ks.end(), [&](std::size_t x, std::size_t y) {
    if (value(x) != value(y)) return value(x) > value(y);
    return x < y;
  });
  return ks;
}

inline SupplyPlan propagate(const Agent& a, const FlowVector& allocation) {
  SupplyPlan sp;
  Quantities need;
  for (const auto& [key, amount] : allocation) need[key.product] += amount;
  Quantities spare;
  for (const auto& [k, v] : a.state.inventory)
    if (v > 0) spare[k] = v;

  const auto& cap = a.capability;
  double line_left = a.capability.line_available && a.available
                         ? std::max(0.0, cap.production_capacity - a.state.production_total())
                         : 0.0;
  Quantities missing;
  for (auto k : by_value(a, need)) {
    double rest = need[k];
    const double inv = std::min(rest, spare[k]);
    if (inv > 0) {
      sp.from_inventory[k] = inv;
      spare[k] -= inv;
      rest -= inv;
    }
    if (rest > 0 && cap.production.contains(k) && line_left > 0) {
      const double g = std::min(rest, line_left);
      sp.production[k] = g;
      line_left -= g;
      rest -= g;
    }
    if (rest > 0) missing[k] += rest;
  }
  for (const auto& [k, g] : sp.production)
    for (const auto& [c, r] : cap.bom.at(k)) missing[c] += r * g;
  // Components already on hand reduce what must be ordered.
  FlowVector order;
  for (const auto& [k, amount] : missing) {
    const double from_stock = sp.production.contains(k) || need.contains(k) ? 0.0 : std::min(amount, spare[k]);
    const double rest = amount - from_stock;
    if (rest > 1e-9) order[{a.id.index, k}] = rest;
  }
  sp.upstream = detail::make_entries(a, order);
  std::map<AgentId, FlowVector> per_recipient;
  for (const auto& [key, amount] : sp.upstream.amounts) {
    auto it = a.environment.upstream.find(key.product);
    if (it == a.environment.upstream.end()) continue;
    for (auto u : it->second) per_recipient[u][key] = amount;
  }
  for (const auto& [u, v] : per_recipient) sp.requests.emplace_back(u, detail::make_entries(a, v));
  return sp;
}

// ---------------------------------------------------------------------------
// Plan bookkeeping shared by the conversation and the rebalancing passes.

namespace detail {

// Recomputes inventory, satisfied demand and shortfall of vertex v from its
// flows and production.
inline void settle(const SupplyNetwork& net, FlowPlan& plan, std::size_t v) {
  const auto nk = net.num_products();
  std::vector<double> bal(nk, 0.0);
  for (std::size_t k = 0; k < nk; ++k) bal[k] = net.initial_inventory(v, k) + plan.produced(v, k);
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    if (net.edges[e].to == v)
      for (std::size_t k = 0; k < nk; ++k) bal[k] += plan.flow(e, k);
    if (net.edges[e].from == v)
      for (std::size_t k = 0; k < nk; ++k) bal[k] -= plan.flow(e, k);
  }
  for (std::size_t m = 0; m < nk; ++m)
    for (std::size_t c = 0; c < nk; ++c) bal[c] -= net.bom(c, m) * plan.produced(v, m);
  for (std::size_t k = 0; k < nk; ++k) {
    const double x = std::min(net.demand(v, k), std::max(0.0, bal[k]));
    plan.satisfied(v, k) = x;
    plan.shortfall(v, k) = net.demand(v, k) - x;
    const double inv = bal[k] - x;
    plan.inventory(v, k) = std::abs(inv) < 1e-9 ? 0.0 : inv;
  }
}

inline void settle_all(const SupplyNetwork& net, FlowPlan& plan) {
  for (std::size_t v = 0; v < net.num_vertices(); ++v) settle(net, plan, v);
}

// Inventory a vertex may keep: what it held in the baseline, and nothing
// where the model has no inventory variable.
inline double allowed_inventory(const SupplyNetwork& net, const FlowPlan& baseline, std::size_t v, std::size_t k) {
  if (!net.vertices[v].available) return 0.0;
  if (!net.holdable(v, k) && net.initial_inventory(v, k) <= 0) return 0.0;
  return baseline.inventory(v, k);
}

// Edges of v carrying k in the order flows should be reduced: increments over
// the baseline first, then by descending unit cost, then by index.
inline std::vector<std::size_t> reduction_order(const SupplyNetwork& net, const FlowPlan& plan,
                                                const FlowPlan& baseline, std::size_t v, std::size_t k,
                                                bool inbound) {
  std::vector<std::size_t> es;
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const auto& ed = net.edges[e];
    if ((inbound ? ed.to : ed.from) == v && ed.carries[k] && plan.flow(e, k) > 0) es.push_back(e);
  }
  std::stable_sort(es.begin(), es.end(), [&](std::size_t a, std::size_t b) {
    const bool ia = plan.flow(a, k) > baseline.flow(a, k), ib = plan.flow(b, k) > baseline.flow(b, k);
    if (ia != ib) return ia;
    if (net.edges[a].unit_cost[k] != net.edges[b].unit_cost[k])
      return net.edges[a].unit_cost[k] > net.edges[b].unit_cost[k];
    return a < b;
  });
  return es;
}

}  // namespace detail

// Removes inventory that exceeds what each vertex may keep by cutting its
// production or inbound flows, moving the surplus upstream until it
// vanishes. Cancellations are local and exchange no messages.
inline void trim_surplus(const SupplyNetwork& net, FlowPlan& plan, const FlowPlan& baseline) {
  detail::settle_all(net, plan);
  const auto nk = net.num_products();
  for (std::size_t guard = 0; guard < 100000; ++guard) {
    bool changed = false;
    for (std::size_t vi = net.num_vertices(); vi-- > 0 && !changed;) {
      for (std::size_t k = 0; k < nk && !changed; ++k) {
        double surplus = plan.inventory(vi, k) - detail::allowed_inventory(net, baseline, vi, k);
        if (surplus <= 1e-9) continue;
        if (plan.produced(vi, k) > 0) {
          const double cut = std::min(surplus, plan.produced(vi, k));
          plan.produced(vi, k) -= cut;
          surplus -= cut;
          changed = true;
        }
        for (auto e : detail::reduction_order(net, plan, baseline, vi, k, true)) {
          if (surplus <= 1e-9) break;
          const double cut = std::min(surplus, plan.flow(e, k));
          plan.flow(e, k) -= cut;
          surplus -= cut;
          changed = true;
          detail::settle(net, plan, net.edges[e].from);
        }
        if (changed) detail::settle(net, plan, vi);
      }
    }
    if (!changed) return;
  }
  throw Error("surplus trimming did not converge");
}

// Removes negative inventory by cutting outflows (and, for missing
// components, the production that consumes them), pushing the deficit
// downstream until it ends as customer shortfall.
inline void settle_deficits(const SupplyNetwork& net, FlowPlan& plan, const FlowPlan& baseline) {
  detail::settle_all(net, plan);
  const auto nk = net.num_products();
  for (std::size_t guard = 0; guard < 100000; ++guard) {
    bool changed = false;
    for (std::size_t v = 0; v < net.num_vertices() && !changed; ++v) {
      for (std::size_t k = 0; k < nk && !changed; ++k) {
        double deficit = -plan.inventory(v, k);
        if (deficit <= 1e-9) continue;
        for (auto e : detail::reduction_order(net, plan, baseline, v, k, false)) {
          if (deficit <= 1e-9) break;
          const double cut = std::min(deficit, plan.flow(e, k));
          plan.flow(e, k) -= cut;
          deficit -= cut;
          changed = true;
          detail::settle(net, plan, net.edges[e].to);
        }
        for (std::size_t m = 0; m < nk && deficit > 1e-9; ++m) {
          const double r = net.bom(k, m);
          if (r <= 0 || plan.produced(v, m) <= 0) continue;
          const double cut = std::min(plan.produced(v, m), deficit / r);
          plan.produced(v, m) -= cut;
          deficit -= cut * r;
          changed = true;
        }
        if (changed) detail::settle(net, plan, v);
      }
    }
    if (!changed) return;
  }
  throw Error("deficit settlement did not converge");
}

// Sets edge and line indicators from the flows: an indicator is on when
// its entity carries load, or when it was on in the baseline without load.
inline void refresh_indicators(const SupplyNetwork& net, FlowPlan& plan, const FlowPlan& baseline) {
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const bool idle_before = baseline.edge_used[e] && baseline.edge_load(e) <= 1e-9;
    plan.edge_used[e] = net.edges[e].available && (plan.edge_load(e) > 1e-9 || idle_before);
  }
  for (std::size_t v = 0; v < net.num_vertices(); ++v) {
    const bool idle_before = baseline.line_open[v] && baseline.vertex_production(v) <= 1e-9;
    plan.line_open[v] = net.vertices[v].available && net.vertices[v].production_capacity > 0 &&
                        (plan.vertex_production(v) > 1e-9 || idle_before);
  }
}

// Trims surpluses, settles deficits and refreshes indicators.
inline void rebalance(const SupplyNetwork& net, FlowPlan& plan, const FlowPlan& baseline) {
  trim_surplus(net, plan, baseline);
  settle_deficits(net, plan, baseline);
  trim_surplus(net, plan, baseline);
  refresh_indicators(net, plan, baseline);
}

// ---------------------------------------------------------------------------
// Conversation

class Conversation {
 public:
  Conversation(const SupplyNetwork& net, FlowPlan& plan, AgentSet& agents, MessageLog& log,
               const RecoveryConfig& cfg)
      : net_(net), plan_(plan), agents_(agents), log_(log), cfg_(cfg) {}

  // One request round: requests out, all responses in, allocation, informs,
  // then each selected responder covers its share (depth first). Returns
  // the amounts actually delivered.
  FlowVector negotiate(AgentId requester, const Request& full,
                       const std::vector<std::pair<AgentId, Request>>& requests) {
    FlowVector delivered;
    if (requests.empty() || full.amounts.empty()) return delivered;
    if (++depth_ > cfg_.max_depth) throw Error("propagation exceeded the maximum depth");
    std::vector<std::size_t> request_seq;
    for (const auto& [to, req] : requests) request_seq.push_back(log_.send_request(requester, to, req));

    std::vector<Offer> offers;
    std::vector<std::size_t> response_seq;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      auto& responder = agents_.at(requests[i].first);
      agents::observe(responder, net_, plan_);
      auto resp = compute_response(responder, requests[i].second);
      response_seq.push_back(log_.send_response(responder.id, request_seq[i], resp));
      offers.push_back({responder.id, std::move(resp)});
    }

    AllocationOptions opt;
    opt.new_lane_cap = cfg_.new_lane_cap;
    opt.solver = cfg_.solver;
    const auto alloc = select_allocation(full, offers, opt);
    std::vector<std::pair<AgentId, FlowVector>> accepted;
    for (std::size_t i = 0; i < offers.size(); ++i) {
      auto it = alloc.flows.find(offers[i].responder);
      if (it == alloc.flows.end()) continue;
      log_.send_inform(requester, response_seq[i], Inform{it->second});
      accepted.emplace_back(it->first, it->second);
    }
    for (const auto& [responder, flows] : accepted)
      for (const auto& [key, amount] : fulfil(responder, flows)) delivered[key] += amount;
    --depth_;
    return delivered;
  }

  // The responder covers what it accepted and ships it.
  FlowVector fulfil(AgentId id, const FlowVector& allocation) {
    auto& a = agents_.at(id);
    agents::observe(a, net_, plan_);
    const auto sp = propagate(a, allocation);
    const auto received = negotiate(id, sp.upstream, sp.requests);
    agents::observe(a, net_, plan_);

    // Components now on hand bound the production actually possible.
    Quantities stock;
    for (const auto& [k, v] : a.state.inventory)
      if (v > 0) stock[k] = v;
    for (const auto& [k, v] : sp.from_inventory) stock[k] -= v;
    Quantities made;
    for (auto k : by_value(a, sp.production)) {
      double g = sp.production.at(k);
      for (const auto& [c, r] : a.capability.bom.at(k)) g = std::min(g, std::max(0.0, stock[c]) / r);
      if (g <= 1e-9) continue;
      made[k] = g;
      for (const auto& [c, r] : a.capability.bom.at(k)) stock[c] -= r * g;
    }
    Quantities supply = sp.from_inventory;
    for (const auto& [k, g] : made) supply[k] += g;
    Quantities wanted;
    for (const auto& [key, amount] : allocation) wanted[key.product] += amount;
    for (const auto& [key, amount] : received)
      if (wanted.contains(key.product)) supply[key.product] += amount;

    for (const auto& [k, g] : made) {
      plan_.produced(id.index, k) += g;
      plan_.line_open[id.index] = 1;
    }
    // Ship in priority order of the products, then by target.
    FlowVector shipped;
    std::vector<FlowKey> keys;
    for (const auto& [key, amount] : allocation) keys.push_back(key);
    Quantities order_value;
    for (const auto& key : keys) order_value[key.product] = 0;
    const auto ranked = by_value(a, order_value);
    std::stable_sort(keys.begin(), keys.end(), [&](const FlowKey& x, const FlowKey& y) {
      const auto px = std::find(ranked.begin(), ranked.end(), x.product) - ranked.begin();
      const auto py = std::find(ranked.begin(), ranked.end(), y.product) - ranked.begin();
      if (px != py) return px < py;
      return x.target < y.target;
    });
    for (const auto& key : keys) {
      const double amount = std::min(allocation.at(key), std::max(0.0, supply[key.product]));
      if (amount <= 1e-9) continue;
      supply[key.product] -= amount;
      const auto* lane = a.environment.out_lane_to(AgentId::vertex(key.target));
      plan_.flow(lane->edge, key.product) += amount;
      plan_.edge_used[lane->edge] = 1;
      shipped[key] = amount;
      detail::settle(net_, plan_, key.target);
    }
    detail::settle(net_, plan_, id.index);
    return shipped;
  }

 private:
  const SupplyNetwork& net_;
  FlowPlan& plan_;
  AgentSet& agents_;
  MessageLog& log_;
  const RecoveryConfig& cfg_;
  std::size_t depth_ = 0;
};

// Zeroes everything the disruption takes away from `plan`.
inline FlowPlan cut_lost_entities(const SupplyNetwork& disrupted, const FlowPlan& plan) {
  auto out = plan;
  for (std::size_t e = 0; e < disrupted.num_edges(); ++e) {
    if (disrupted.edges[e].available) continue;
    for (std::size_t k = 0; k < disrupted.num_products(); ++k) out.flow(e, k) = 0.0;
    out.edge_used[e] = 0;
  }
  for (std::size_t v = 0; v < disrupted.num_vertices(); ++v) {
    if (disrupted.vertices[v].available) continue;
    for (std::size_t k = 0; k < disrupted.num_products(); ++k) out.produced(v, k) = 0.0;
    out.line_open[v] = 0;
  }
  detail::settle_all(disrupted, out);
  return out;
}

// Runs the full recovery conversation for one event. Falls back to the
// centralized re-plan, or settles for a partial recovery, when the agents
// cannot replace every lost flow.
inline RecoveryOutcome run_recovery(const World& world, const DisruptionEvent& event, const RecoveryConfig& cfg = {}) {
  RecoveryOutcome out;
  out.disrupted = apply_disruption(world.net, event);
  out.agents = world.agents;
  out.plan = cut_lost_entities(out.disrupted, world.plan);

  std::vector<RequestPlan> requests;
  for (auto id : disrupted_agents(world.net, event)) {
    auto rp = make_request(world.agents.at(id), event, world.net);
    if (!rp.request.amounts.empty()) requests.push_back(std::move(rp));
  }
  agents::sync_knowledge(out.agents, out.disrupted, out.plan);

  Conversation conv(out.disrupted, out.plan, out.agents, out.log, cfg);
  for (const auto& rp : requests) {
    std::vector<std::pair<AgentId, Request>> per_recipient;
    for (auto r : rp.recipients) per_recipient.emplace_back(r, rp.request);
    const auto delivered = conv.negotiate(rp.requester, rp.request, per_recipient);
    for (const auto& [key, amount] : rp.request.amounts) {
      auto it = delivered.find(key);
      const double gap = amount - (it == delivered.end() ? 0.0 : it->second);
      if (gap > kTolerance) out.unrecovered[key.product] += gap;
    }
  }

  rebalance(out.disrupted, out.plan, world.plan);
  // Shortfall beyond the baseline also counts as unrecovered.
  for (std::size_t v = 0; v < out.disrupted.num_vertices(); ++v)
    for (std::size_t k = 0; k < out.disrupted.num_products(); ++k) {
      const double new_demand = out.disrupted.demand(v, k) - world.net.demand(v, k);
      const double extra = out.plan.shortfall(v, k) - world.plan.shortfall(v, k) - new_demand;
      if (extra > kTolerance) out.unrecovered[k] = std::max(out.unrecovered[k], extra);
    }

  if (out.unrecovered.empty()) {
    out.status = RecoveryStatus::Recovered;
  } else if (cfg.fallback_to_centralized) {
    const auto pen = cfg.fallback_penalties.value_or(planner::ReplanPenalties::from_network(out.disrupted));
    auto r = planner::replan(out.disrupted, world.plan, pen, cfg.solver);
    const auto effort = planner::centralized_comm_effort(out.disrupted, r.delta);
    const auto from = requests.empty() ? AgentId::vertex(0) : requests.front().requester;
    out.log.send_fallback(from, FallbackRequest{"flows left unrecovered after local negotiation", effort});
    out.plan = std::move(r.plan);
    out.status = RecoveryStatus::FellBackToCentralized;
  } else {
    out.status = RecoveryStatus::PartiallyRecovered;
  }
  agents::sync_knowledge(out.agents, out.disrupted, out.plan);
  return out;
}

}  // namespace chainflow::protocol
