#pragma once

#include <compare>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "chainflow/core/plan.hpp"

namespace chainflow::agents {

class CapacityViolation : public Error {
 public:
  using Error::Error;
};

class NegativeInventory : public Error {
 public:
  using Error::Error;
};

class UnknownCapability : public Error {
 public:
  using Error::Error;
};

class InconsistentChange : public Error {
 public:
  using Error::Error;
};

class InfeasiblePlan : public Error {
 public:
  using Error::Error;
};

// Agents are bound either to a vertex or to an edge (transportation agent).
struct AgentId {
  enum class Kind : std::uint8_t { Vertex, Edge };
  Kind kind = Kind::Vertex;
  std::size_t index = 0;

  static AgentId vertex(std::size_t v) { return {Kind::Vertex, v}; }
  static AgentId edge(std::size_t e) { return {Kind::Edge, e}; }
  bool is_vertex() const { return kind == Kind::Vertex; }

  friend auto operator<=>(const AgentId&, const AgentId&) = default;
};

enum class CapabilityKind : std::uint8_t { Production, Inventory, Transport };

inline std::string_view to_string(CapabilityKind k) {
  switch (k) {
    case CapabilityKind::Production: return "production";
    case CapabilityKind::Inventory: return "inventory";
    case CapabilityKind::Transport: return "transport";
  }
  return "?";
}

struct Capability {
  CapabilityKind kind = CapabilityKind::Production;
  std::size_t product = 0;
  friend auto operator<=>(const Capability&, const Capability&) = default;
};

using ProductSet = std::set<std::size_t>;
using Quantities = std::map<std::size_t, double>;

// M_i = {Pd, Iv, Tp} plus the mapping functions that characterize them.
struct CapabilityModel {
  ProductSet production;  // Pd
  ProductSet inventory;   // Iv
  ProductSet transport;   // Tp
  Quantities production_cost;
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> bom;
  Quantities holding_cost;
  double inventory_capacity = kInfinity;
  double production_capacity = 0.0;
  double line_cost = 0.0;
  bool line_available = true;
  // Transportation agents only.
  double transport_capacity = 0.0;
  double transport_fixed_cost = 0.0;
  Quantities transport_cost;

  const ProductSet& set(CapabilityKind kind) const {
    switch (kind) {
      case CapabilityKind::Production: return production;
      case CapabilityKind::Inventory: return inventory;
      case CapabilityKind::Transport: return transport;
    }
    return production;
  }
  ProductSet& set(CapabilityKind kind) {
    return const_cast<ProductSet&>(std::as_const(*this).set(kind));
  }
  bool has(const Capability& c) const { return set(c.kind).contains(c.product); }

  std::vector<Capability> all() const {
    std::vector<Capability> out;
    for (auto kind : {CapabilityKind::Production, CapabilityKind::Inventory, CapabilityKind::Transport})
      for (auto k : set(kind)) out.push_back({kind, k});
    return out;
  }
};

// A physical lane as seen from one of its endpoints.
struct Lane {
  std::size_t edge = 0;
  AgentId peer;     // vertex agent at the other end
  AgentId carrier;  // edge agent
  double capacity = 0.0;
  double fixed_cost = 0.0;
  Quantities unit_cost;  // only carried products
  Quantities flow;
  bool used = false;
  bool available = true;

  double load() const {
    double s = 0.0;
    for (const auto& [k, v] : flow) s += v;
    return s;
  }
  double residual() const { return available ? std::max(0.0, capacity - load()) : 0.0; }
  bool carries(std::size_t k) const { return unit_cost.contains(k); }
};

struct EnvironmentModel {
  std::map<std::size_t, std::set<AgentId>> upstream;    // U
  std::map<std::size_t, std::set<AgentId>> downstream;  // D
  std::map<std::size_t, std::set<AgentId>> transport;   // T
  std::map<Capability, std::set<AgentId>> peers;        // S
  // Active flows exchanged with neighbours: agent -> product -> units.
  std::map<AgentId, Quantities> inbound_flow;
  std::map<AgentId, Quantities> outbound_flow;
  std::vector<Lane> out_lanes;
  std::vector<Lane> in_lanes;
  // Unit value of each product to the end customer, used to rank requests.
  Quantities product_value;

  Lane* out_lane_to(AgentId peer) {
    for (auto& l : out_lanes)
      if (l.peer == peer) return &l;
    return nullptr;
  }
  const Lane* out_lane_to(AgentId peer) const {
    return const_cast<EnvironmentModel*>(this)->out_lane_to(peer);
  }
  Lane* in_lane_from(AgentId peer) {
    for (auto& l : in_lanes)
      if (l.peer == peer) return &l;
    return nullptr;
  }
  const Lane* in_lane_from(AgentId peer) const {
    return const_cast<EnvironmentModel*>(this)->in_lane_from(peer);
  }
};

// I' = I + u - z + h(g) per product, where h(g) adds produced units and
// removes the components they consume.
struct StateModel {
  Quantities initial;    // I0
  Quantities inventory;  // I
  Quantities inflow;     // u
  Quantities outflow;    // z
  Quantities produced;   // g
  Quantities satisfied;  // x, customers only
  bool line_open = false;

  double production_total() const {
    double s = 0.0;
    for (const auto& [k, v] : produced) s += v;
    return s;
  }
};

struct Agent {
  AgentId id;
  std::string name;
  std::optional<EntityKind> kind;  // empty for transportation agents
  CapabilityModel capability;
  EnvironmentModel environment;
  StateModel state;
  std::set<AgentId> local_view;  // N_i without self
  bool available = true;
};

struct AgentSet {
  std::vector<Agent> vertex_agents;
  std::vector<Agent> edge_agents;

  Agent& at(AgentId id) {
    auto& pool = id.is_vertex() ? vertex_agents : edge_agents;
    if (id.index >= pool.size()) throw UnknownEntity("unknown agent");
    return pool[id.index];
  }
  const Agent& at(AgentId id) const { return const_cast<AgentSet*>(this)->at(id); }
  bool contains(AgentId id) const {
    return id.index < (id.is_vertex() ? vertex_agents.size() : edge_agents.size());
  }
  std::size_t size() const { return vertex_agents.size() + edge_agents.size(); }
};

// ---------------------------------------------------------------------------
// Initialization

namespace detail {

// Value of one unit of each product to the end customer: the largest demand
// penalty for end products, and for components the largest value of any
// successor divided by its conversion rate.
inline Quantities product_values(const SupplyNetwork& net) {
  const auto nk = net.num_products();
  std::vector<double> value(nk, 0.0);
  for (std::size_t v = 0; v < net.num_vertices(); ++v)
    for (std::size_t k = 0; k < nk; ++k) value[k] = std::max(value[k], net.shortfall_penalty(v, k));
  // Relax along the acyclic bom; nk passes suffice.
  for (std::size_t pass = 0; pass < nk; ++pass)
    for (std::size_t c = 0; c < nk; ++c)
      for (std::size_t k = 0; k < nk; ++k)
        if (net.bom(c, k) > 0) value[c] = std::max(value[c], value[k] / net.bom(c, k));
  Quantities out;
  for (std::size_t k = 0; k < nk; ++k) out[k] = value[k];
  return out;
}

inline Lane make_lane(const SupplyNetwork& net, const FlowPlan& plan, std::size_t e, bool outbound) {
  const auto& ed = net.edges[e];
  Lane l;
  l.edge = e;
  l.peer = AgentId::vertex(outbound ? ed.to : ed.from);
  l.carrier = AgentId::edge(e);
  l.capacity = ed.capacity;
  l.fixed_cost = ed.fixed_cost;
  l.available = ed.available;
  l.used = plan.edge_used[e] != 0;
  for (std::size_t k = 0; k < net.num_products(); ++k) {
    if (!ed.carries[k]) continue;
    l.unit_cost[k] = ed.unit_cost[k];
    if (plan.flow(e, k) != 0.0) l.flow[k] = plan.flow(e, k);
  }
  return l;
}

inline void put(Quantities& q, std::size_t k, double v) {
  if (v != 0.0) q[k] = v;
}

inline void rebuild_local_view(Agent& a) {
  a.local_view.clear();
  auto add_all = [&](const auto& groups) {
    for (const auto& [key, ids] : groups)
      for (auto id : ids)
        if (id != a.id) a.local_view.insert(id);
  };
  add_all(a.environment.upstream);
  add_all(a.environment.downstream);
  add_all(a.environment.transport);
  add_all(a.environment.peers);
  for (const auto& l : a.environment.out_lanes) a.local_view.insert(l.carrier);
  for (const auto& l : a.environment.in_lanes) a.local_view.insert(l.carrier);
}

}  // namespace detail

// Refreshes an agent's state and lane loads from the flows of its own
// physical entity.
inline void observe(Agent& a, const SupplyNetwork& net, const FlowPlan& plan) {
  if (a.id.is_vertex()) {
    const auto v = a.id.index;
    auto& s = a.state;
    s = StateModel{};
    s.line_open = plan.line_open[v] != 0;
    for (std::size_t k = 0; k < net.num_products(); ++k) {
      detail::put(s.initial, k, net.initial_inventory(v, k));
      detail::put(s.inventory, k, plan.inventory(v, k));
      detail::put(s.produced, k, plan.produced(v, k));
      detail::put(s.satisfied, k, plan.satisfied(v, k));
    }
    auto& env = a.environment;
    env.inbound_flow.clear();
    env.outbound_flow.clear();
    for (auto& l : env.in_lanes) {
      l = detail::make_lane(net, plan, l.edge, false);
      for (const auto& [k, y] : l.flow) {
        s.inflow[k] += y;
        env.inbound_flow[l.peer][k] += y;
      }
    }
    for (auto& l : env.out_lanes) {
      l = detail::make_lane(net, plan, l.edge, true);
      for (const auto& [k, y] : l.flow) {
        s.outflow[k] += y;
        env.outbound_flow[l.peer][k] += y;
      }
    }
    a.capability.line_available = net.vertices[v].available;
    a.available = net.vertices[v].available;
  } else {
    const auto e = a.id.index;
    a.state = StateModel{};
    for (std::size_t k = 0; k < net.num_products(); ++k) {
      detail::put(a.state.inflow, k, plan.flow(e, k));
      detail::put(a.state.outflow, k, plan.flow(e, k));
    }
    a.available = net.edges[e].available;
  }
}

// Builds one agent per vertex and per edge from the network and a plan that
// is feasible for it.
inline AgentSet init_agents(const SupplyNetwork& net, const FlowPlan& plan) {
  check_dimensions(net, plan);
  const double residual = max_abs(flow_balance_residual(net, plan));
  if (residual > kTolerance)
    throw InfeasiblePlan("plan violates flow balance by " + std::to_string(residual));
  const auto values = detail::product_values(net);
  AgentSet set;
  const auto nk = net.num_products();

  for (std::size_t v = 0; v < net.num_vertices(); ++v) {
    const auto& vx = net.vertices[v];
    Agent a;
    a.id = AgentId::vertex(v);
    a.name = vx.id;
    a.kind = vx.kind;
    auto& cap = a.capability;
    cap.production_capacity = vx.production_capacity;
    cap.line_cost = vx.line_cost;
    cap.line_available = vx.available;
    for (std::size_t k = 0; k < nk; ++k) {
      if (net.producible(v, k) && vx.production_capacity > 0) {
        cap.production.insert(k);
        cap.production_cost[k] = net.production_cost(v, k);
        cap.bom[k] = net.components_of(k);
      }
      if (net.holdable(v, k)) {
        cap.inventory.insert(k);
        cap.holding_cost[k] = net.holding_cost(v, k);
      }
    }
    for (auto e : net.in_edges(v)) a.environment.in_lanes.push_back(detail::make_lane(net, plan, e, false));
    for (auto e : net.out_edges(v)) a.environment.out_lanes.push_back(detail::make_lane(net, plan, e, true));
    a.environment.product_value = values;
    set.vertex_agents.push_back(std::move(a));
  }
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const auto& ed = net.edges[e];
    Agent a;
    a.id = AgentId::edge(e);
    a.name = net.edge_label(e);
    a.capability.transport_capacity = ed.capacity;
    a.capability.transport_fixed_cost = ed.fixed_cost;
    for (std::size_t k = 0; k < nk; ++k) {
      if (!ed.carries[k]) continue;
      a.capability.transport.insert(k);
      a.capability.transport_cost[k] = ed.unit_cost[k];
      a.environment.upstream[k].insert(AgentId::vertex(ed.from));
      a.environment.downstream[k].insert(AgentId::vertex(ed.to));
    }
    a.environment.product_value = values;
    set.edge_agents.push_back(std::move(a));
  }

  // U, D and T from the lanes; only lanes that are physically usable count.
  for (auto& a : set.vertex_agents) {
    for (const auto& l : a.environment.in_lanes) {
      if (!l.available) continue;
      for (const auto& [k, c] : l.unit_cost) {
        a.environment.upstream[k].insert(l.peer);
        a.environment.transport[k].insert(l.carrier);
      }
    }
    for (const auto& l : a.environment.out_lanes) {
      if (!l.available) continue;
      for (const auto& [k, c] : l.unit_cost) a.environment.downstream[k].insert(l.peer);
    }
  }

  // S: every other agent sharing a capability.
  std::map<Capability, std::set<AgentId>> holders;
  for (const auto* pool : {&set.vertex_agents, &set.edge_agents})
    for (const auto& a : *pool)
      for (const auto& c : a.capability.all()) holders[c].insert(a.id);
  for (auto* pool : {&set.vertex_agents, &set.edge_agents}) {
    for (auto& a : *pool) {
      for (const auto& c : a.capability.all()) {
        auto peers = holders[c];
        peers.erase(a.id);
        a.environment.peers[c] = std::move(peers);
      }
    }
  }

  for (auto* pool : {&set.vertex_agents, &set.edge_agents})
    for (auto& a : *pool) {
      observe(a, net, plan);
      detail::rebuild_local_view(a);
    }
  return set;
}

// ---------------------------------------------------------------------------
// State dynamics

// Net effect of producing g: +g_k for each product, minus the components
// consumed.
inline Quantities production_effect(const CapabilityModel& cap, const Quantities& g) {
  Quantities h;
  for (const auto& [k, amount] : g) {
    h[k] += amount;
    auto it = cap.bom.find(k);
    if (it == cap.bom.end()) continue;
    for (const auto& [c, r] : it->second) h[c] -= r * amount;
  }
  return h;
}

// Advances one period: I' = I + u - z + h(g). Validates transport,
// production and inventory limits before mutating the agent.
inline Quantities step_state(Agent& a, const Quantities& u, const Quantities& z,
                             const Quantities& g = {}) {
  auto total = [](const Quantities& q) {
    double s = 0.0;
    for (const auto& [k, v] : q) {
      if (v < 0) throw CapacityViolation("negative flow of product #" + std::to_string(k));
      s += v;
    }
    return s;
  };
  double in_cap = 0.0, out_cap = 0.0;
  for (const auto& l : a.environment.in_lanes) in_cap += l.available ? l.capacity : 0.0;
  for (const auto& l : a.environment.out_lanes) out_cap += l.available ? l.capacity : 0.0;
  if (total(u) > in_cap + kTolerance) throw CapacityViolation(a.name + ": inflow exceeds inbound transport capacity");
  if (total(z) > out_cap + kTolerance) throw CapacityViolation(a.name + ": outflow exceeds outbound transport capacity");
  const double made = total(g);
  for (const auto& [k, amount] : g)
    if (amount > 0 && !a.capability.production.contains(k))
      throw CapacityViolation(a.name + ": cannot produce product #" + std::to_string(k));
  const double line_cap = a.capability.line_available ? a.capability.production_capacity : 0.0;
  if (made > line_cap + kTolerance) throw CapacityViolation(a.name + ": production exceeds capacity");

  Quantities next = a.state.inventory;
  for (const auto& [k, v] : u) next[k] += v;
  for (const auto& [k, v] : z) next[k] -= v;
  for (const auto& [k, v] : production_effect(a.capability, g)) next[k] += v;
  double held = 0.0;
  for (const auto& [k, v] : next) {
    if (v < -1e-9)
      throw NegativeInventory(a.name + ": inventory of product #" + std::to_string(k) + " would be " +
                              std::to_string(v));
    held += v;
  }
  if (held > a.capability.inventory_capacity + kTolerance)
    throw CapacityViolation(a.name + ": inventory capacity exceeded");
  a.state.inventory = next;
  a.state.inflow = u;
  a.state.outflow = z;
  a.state.produced = g;
  a.state.line_open = made > 0;
  return next;
}

// ---------------------------------------------------------------------------
// Knowledge queries and updates

inline const std::set<AgentId>& same_capability_peers(const Agent& a, const Capability& c) {
  if (!a.capability.has(c))
    throw UnknownCapability(a.name + " has no " + std::string(to_string(c.kind)) + " capability for product #" +
                            std::to_string(c.product));
  static const std::set<AgentId> empty;
  auto it = a.environment.peers.find(c);
  return it == a.environment.peers.end() ? empty : it->second;
}

struct AddCapability {
  Capability capability;
  double cost = 0.0;  // production or holding cost; ignored for transport
  std::vector<std::pair<std::size_t, double>> bom;
};

struct RemoveCapability {
  Capability capability;
};

struct UpdateCost {
  Capability capability;
  double cost = 0.0;
};

// Another agent gained or lost a capability this agent shares.
struct PeerChange {
  Capability capability;
  AgentId peer;
  bool added = true;
};

// A lane appears (or becomes usable again) between this agent and a peer.
struct AddRelation {
  Lane lane;
  bool outbound = true;
};

// A transportation agent is lost: its lane becomes unusable.
struct LoseTransport {
  AgentId carrier;
};

struct FlowInfo {
  AgentId peer;
  std::size_t product = 0;
  double amount = 0.0;
  bool outbound = true;
};

using KnowledgeChange =
    std::variant<AddCapability, RemoveCapability, UpdateCost, PeerChange, AddRelation, LoseTransport, FlowInfo>;

inline void update_knowledge(Agent& a, const KnowledgeChange& change) {
  auto& cap = a.capability;
  auto& env = a.environment;
  std::visit(
      [&](const auto& ch) {
        using T = std::decay_t<decltype(ch)>;
        if constexpr (std::is_same_v<T, AddCapability>) {
          const auto k = ch.capability.product;
          cap.set(ch.capability.kind).insert(k);
          switch (ch.capability.kind) {
            case CapabilityKind::Production:
              cap.production_cost[k] = ch.cost;
              cap.bom[k] = ch.bom;
              break;
            case CapabilityKind::Inventory: cap.holding_cost[k] = ch.cost; break;
            case CapabilityKind::Transport: cap.transport_cost[k] = ch.cost; break;
          }
          env.peers.try_emplace(ch.capability);
        } else if constexpr (std::is_same_v<T, RemoveCapability>) {
          if (!cap.has(ch.capability)) throw UnknownCapability(a.name + ": capability not held");
          const auto k = ch.capability.product;
          cap.set(ch.capability.kind).erase(k);
          switch (ch.capability.kind) {
            case CapabilityKind::Production:
              cap.production_cost.erase(k);
              cap.bom.erase(k);
              break;
            case CapabilityKind::Inventory: cap.holding_cost.erase(k); break;
            case CapabilityKind::Transport: cap.transport_cost.erase(k); break;
          }
          env.peers.erase(ch.capability);
        } else if constexpr (std::is_same_v<T, UpdateCost>) {
          if (!cap.has(ch.capability)) throw UnknownCapability(a.name + ": capability not held");
          const auto k = ch.capability.product;
          switch (ch.capability.kind) {
            case CapabilityKind::Production: cap.production_cost[k] = ch.cost; break;
            case CapabilityKind::Inventory: cap.holding_cost[k] = ch.cost; break;
            case CapabilityKind::Transport: cap.transport_cost[k] = ch.cost; break;
          }
        } else if constexpr (std::is_same_v<T, PeerChange>) {
          if (ch.peer == a.id) throw InconsistentChange(a.name + ": an agent is not its own peer");
          if (!cap.has(ch.capability)) return;  // not a shared capability
          if (ch.added)
            env.peers[ch.capability].insert(ch.peer);
          else
            env.peers[ch.capability].erase(ch.peer);
        } else if constexpr (std::is_same_v<T, AddRelation>) {
          auto& lanes = ch.outbound ? env.out_lanes : env.in_lanes;
          Lane* existing = nullptr;
          for (auto& l : lanes)
            if (l.edge == ch.lane.edge) existing = &l;
          if (existing)
            *existing = ch.lane;
          else
            lanes.push_back(ch.lane);
          if (ch.lane.available) {
            for (const auto& [k, c] : ch.lane.unit_cost) {
              if (ch.outbound) {
                env.downstream[k].insert(ch.lane.peer);
              } else {
                env.upstream[k].insert(ch.lane.peer);
                env.transport[k].insert(ch.lane.carrier);
              }
            }
          }
        } else if constexpr (std::is_same_v<T, LoseTransport>) {
          for (auto* lanes : {&env.out_lanes, &env.in_lanes}) {
            for (auto& l : *lanes) {
              if (l.carrier != ch.carrier) continue;
              l.available = false;
              const bool out = lanes == &env.out_lanes;
              for (const auto& [k, c] : l.unit_cost) {
                // The peer stays related only through another usable lane.
                bool other = false;
                for (const auto& m : *lanes)
                  other = other || (m.carrier != ch.carrier && m.peer == l.peer && m.available && m.carries(k));
                if (!other) (out ? env.downstream : env.upstream)[k].erase(l.peer);
                env.transport[k].erase(ch.carrier);
              }
            }
          }
        } else {
          auto& lanes = ch.outbound ? env.out_lanes : env.in_lanes;
          Lane* lane = nullptr;
          for (auto& l : lanes)
            if (l.peer == ch.peer) lane = &l;
          if (!lane || !lane->carries(ch.product))
            throw InconsistentChange(a.name + ": flow information for a product no lane carries");
          if (ch.amount < 0) throw InconsistentChange(a.name + ": negative flow information");
          auto& info = ch.outbound ? env.outbound_flow : env.inbound_flow;
          if (ch.amount == 0.0) {
            lane->flow.erase(ch.product);
            info[ch.peer].erase(ch.product);
            if (info[ch.peer].empty()) info.erase(ch.peer);
          } else {
            lane->flow[ch.product] = ch.amount;
            info[ch.peer][ch.product] = ch.amount;
          }
          lane->used = lane->load() > 0;
        }
      },
      change);
  detail::rebuild_local_view(a);
}

// Records a flow on edge e in the knowledge of both endpoints so that
// j in D_i(k) <=> i in U_j(k) keeps holding.
inline void connect_flow(AgentSet& agents, const SupplyNetwork& net, const FlowPlan& plan, std::size_t e) {
  const auto& ed = net.edges[e];
  auto& from = agents.at(AgentId::vertex(ed.from));
  auto& to = agents.at(AgentId::vertex(ed.to));
  update_knowledge(from, AddRelation{detail::make_lane(net, plan, e, true), true});
  update_knowledge(to, AddRelation{detail::make_lane(net, plan, e, false), false});
  for (std::size_t k = 0; k < net.num_products(); ++k) {
    if (!ed.carries[k]) continue;
    update_knowledge(from, FlowInfo{to.id, k, plan.flow(e, k), true});
    update_knowledge(to, FlowInfo{from.id, k, plan.flow(e, k), false});
  }
}

// Brings every agent's knowledge in line with a (possibly disrupted) network
// and a new plan: lost entities and lanes are dropped, flows re-observed.
inline void sync_knowledge(AgentSet& agents, const SupplyNetwork& net, const FlowPlan& plan) {
  for (auto& ea : agents.edge_agents) {
    const auto e = ea.id.index;
    const bool usable = net.edges[e].available;
    if (!usable && ea.available) {
      for (auto v : {net.edges[e].from, net.edges[e].to})
        update_knowledge(agents.at(AgentId::vertex(v)), LoseTransport{ea.id});
    }
    observe(ea, net, plan);
  }
  for (auto& a : agents.vertex_agents) {
    if (!net.vertices[a.id.index].available && a.available) {
      for (const auto& c : a.capability.all())
        for (auto peer : a.environment.peers[c]) update_knowledge(agents.at(peer), PeerChange{c, a.id, false});
    }
  }
  for (auto& a : agents.vertex_agents) {
    observe(a, net, plan);
    detail::rebuild_local_view(a);
  }
}

// ---------------------------------------------------------------------------
// Debug dump

inline nlohmann::ordered_json knowledge_to_json(const Agent& a, const SupplyNetwork& net) {
  using Json = nlohmann::ordered_json;
  auto agent_name = [&](AgentId id) {
    return id.is_vertex() ? net.vertices[id.index].id : "edge:" + net.edge_label(id.index);
  };
  auto product = [&](std::size_t k) { return net.products[k].id; };
  auto products = [&](const ProductSet& s) {
    Json arr = Json::array();
    for (auto k : s) arr.push_back(product(k));
    return arr;
  };
  auto groups = [&](const std::map<std::size_t, std::set<AgentId>>& g) {
    Json obj = Json::object();
    for (const auto& [k, ids] : g) {
      Json arr = Json::array();
      for (auto id : ids) arr.push_back(agent_name(id));
      obj[product(k)] = arr;
    }
    return obj;
  };
  auto quantities = [&](const Quantities& q) {
    Json obj = Json::object();
    for (const auto& [k, v] : q) obj[product(k)] = v;
    return obj;
  };
  Json j;
  j["agent"] = a.name;
  j["kind"] = a.kind ? std::string(to_string(*a.kind)) : std::string("Transportation");
  Json cap;
  cap["Pd"] = products(a.capability.production);
  cap["Iv"] = products(a.capability.inventory);
  cap["Tp"] = products(a.capability.transport);
  cap["production_cost"] = quantities(a.capability.production_cost);
  cap["holding_cost"] = quantities(a.capability.holding_cost);
  if (a.id.is_vertex()) {
    cap["production_capacity"] = a.capability.production_capacity;
    Json bom = Json::object();
    for (const auto& [k, parts] : a.capability.bom) {
      Json arr = Json::array();
      for (const auto& [c, r] : parts) arr.push_back({{"component", product(c)}, {"r", r}});
      bom[product(k)] = arr;
    }
    cap["bom"] = bom;
  } else {
    cap["transport_capacity"] = a.capability.transport_capacity;
    cap["transport_cost"] = quantities(a.capability.transport_cost);
  }
  j["capability"] = cap;
  Json env;
  env["U"] = groups(a.environment.upstream);
  env["D"] = groups(a.environment.downstream);
  env["T"] = groups(a.environment.transport);
  Json peers = Json::object();
  for (const auto& [c, ids] : a.environment.peers) {
    Json arr = Json::array();
    for (auto id : ids) arr.push_back(agent_name(id));
    peers[std::string(to_string(c.kind)) + ":" + product(c.product)] = arr;
  }
  env["S"] = peers;
  Json inflow = Json::object();
  for (const auto& [id, q] : a.environment.inbound_flow) inflow[agent_name(id)] = quantities(q);
  env["inbound_flow"] = inflow;
  Json outflow = Json::object();
  for (const auto& [id, q] : a.environment.outbound_flow) outflow[agent_name(id)] = quantities(q);
  env["outbound_flow"] = outflow;
  j["environment"] = env;
  Json st;
  st["I"] = quantities(a.state.inventory);
  st["u"] = quantities(a.state.inflow);
  st["z"] = quantities(a.state.outflow);
  st["g"] = quantities(a.state.produced);
  j["state"] = st;
  return j;
}

}  // namespace chainflow::agents
