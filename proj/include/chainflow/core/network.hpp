#pragma once

#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "chainflow/core/types.hpp"

namespace chainflow {

struct Product {
  std::string id;
  std::string name;
};

struct Vertex {
  std::string id;
  EntityKind kind = EntityKind::Customer;
  double production_capacity = 0.0;  // p_bar
  double line_cost = 0.0;            // phi
  double change_penalty = 0.0;       // rho_V
  bool available = true;
};

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  double fixed_cost = 0.0;      // f
  double capacity = 0.0;        // q, shared by all products
  double change_penalty = 0.0;  // rho_E
  bool available = true;
  // c per product; only products flagged in `carries` may flow on the edge.
  std::vector<double> unit_cost;
  std::vector<std::uint8_t> carries;
};

// Supply network G(V, E) with product set K and all planning parameters.
// Per (vertex, product) quantities are stored in dense grids. A product is
// producible at a vertex iff a production cost was declared for it, and
// holdable iff a holding cost was declared.
struct SupplyNetwork {
  std::vector<Product> products;
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  Grid<double> bom;  // bom(k, k2): units of k consumed per unit of k2

  Grid<double> demand;             // d
  Grid<double> production_cost;    // e
  Grid<double> holding_cost;       // h
  Grid<double> initial_inventory;  // I0
  Grid<double> shortfall_penalty;  // rho_d
  Grid<std::uint8_t> producible;
  Grid<std::uint8_t> holdable;

  SupplyNetwork() = default;

  // Allocates all grids for the given products and vertices; edges are added
  // afterwards with add_edge.
  SupplyNetwork(std::vector<Product> product_list, std::vector<Vertex> vertex_list)
      : products(std::move(product_list)), vertices(std::move(vertex_list)) {
    const auto v = vertices.size();
    const auto k = products.size();
    bom = Grid<double>(k, k);
    demand = Grid<double>(v, k);
    production_cost = Grid<double>(v, k);
    holding_cost = Grid<double>(v, k);
    initial_inventory = Grid<double>(v, k);
    shortfall_penalty = Grid<double>(v, k);
    producible = Grid<std::uint8_t>(v, k);
    holdable = Grid<std::uint8_t>(v, k);
  }

  std::size_t num_products() const { return products.size(); }
  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_edges() const { return edges.size(); }

  std::size_t add_edge(std::size_t from, std::size_t to, double fixed_cost, double capacity,
                       const std::map<std::size_t, double>& unit_costs,
                       double change_penalty = 0.0) {
    Edge e;
    e.from = from;
    e.to = to;
    e.fixed_cost = fixed_cost;
    e.capacity = capacity;
    e.change_penalty = change_penalty;
    e.unit_cost.assign(products.size(), 0.0);
    e.carries.assign(products.size(), 0);
    for (const auto& [k, c] : unit_costs) {
      e.unit_cost.at(k) = c;
      e.carries.at(k) = 1;
    }
    edges.push_back(std::move(e));
    return edges.size() - 1;
  }

  void set_production(std::size_t v, std::size_t k, double unit_cost) {
    producible(v, k) = 1;
    production_cost(v, k) = unit_cost;
  }

  void set_holding(std::size_t v, std::size_t k, double unit_cost) {
    holdable(v, k) = 1;
    holding_cost(v, k) = unit_cost;
  }

  std::optional<std::size_t> find_vertex(std::string_view id) const {
    for (std::size_t i = 0; i < vertices.size(); ++i)
      if (vertices[i].id == id) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> find_product(std::string_view id) const {
    for (std::size_t i = 0; i < products.size(); ++i)
      if (products[i].id == id || products[i].name == id) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> find_edge(std::size_t from, std::size_t to) const {
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i].from == from && edges[i].to == to) return i;
    return std::nullopt;
  }

  std::size_t vertex_index(std::string_view id) const {
    if (auto v = find_vertex(id)) return *v;
    throw UnknownEntity("unknown vertex '" + std::string(id) + "'");
  }

  std::size_t product_index(std::string_view id) const {
    if (auto k = find_product(id)) return *k;
    throw UnknownEntity("unknown product '" + std::string(id) + "'");
  }

  std::size_t edge_index(std::string_view from, std::string_view to) const {
    if (auto e = find_edge(vertex_index(from), vertex_index(to))) return *e;
    throw UnknownEntity("unknown edge (" + std::string(from) + ", " + std::string(to) + ")");
  }

  std::vector<std::size_t> in_edges(std::size_t v) const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (edges[e].to == v) out.push_back(e);
    return out;
  }

  std::vector<std::size_t> out_edges(std::size_t v) const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (edges[e].from == v) out.push_back(e);
    return out;
  }

  std::string edge_label(std::size_t e) const {
    return vertices[edges[e].from].id + "->" + vertices[edges[e].to].id;
  }

  // Products whose bom row is non-zero for successor k.
  std::vector<std::pair<std::size_t, double>> components_of(std::size_t k) const {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t c = 0; c < products.size(); ++c)
      if (bom(c, k) > 0.0) out.emplace_back(c, bom(c, k));
    return out;
  }

  double effective_production_capacity(std::size_t v) const {
    return vertices[v].available ? vertices[v].production_capacity : 0.0;
  }
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string field;
  std::string entity;
  std::string message;
};

namespace detail {

inline bool bom_has_cycle(const SupplyNetwork& net) {
  const auto k = net.num_products();
  // 0 = unvisited, 1 = on stack, 2 = done
  std::vector<int> mark(k, 0);
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t root = 0; root < k; ++root) {
    if (mark[root] != 0) continue;
    stack.emplace_back(root, 0);
    mark[root] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next == k) {
        mark[node] = 2;
        stack.pop_back();
        continue;
      }
      const auto succ = next++;
      if (net.bom(node, succ) <= 0.0) continue;
      if (mark[succ] == 1) return true;
      if (mark[succ] == 0) {
        mark[succ] = 1;
        stack.emplace_back(succ, 0);
      }
    }
  }
  return false;
}

}  // namespace detail

// Returns one entry per violated invariant; an empty report means the
// network is well formed.
inline std::vector<Violation> validate_network(const SupplyNetwork& net) {
  std::vector<Violation> report;
  auto add = [&](std::string field, std::string entity, std::string message) {
    report.push_back({std::move(field), std::move(entity), std::move(message)});
  };
  const auto nv = net.num_vertices();
  const auto nk = net.num_products();

  for (std::size_t i = 0; i < nk; ++i)
    for (std::size_t j = i + 1; j < nk; ++j)
      if (net.products[i].id == net.products[j].id)
        add("products", net.products[i].id, "duplicate product id");
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t j = i + 1; j < nv; ++j)
      if (net.vertices[i].id == net.vertices[j].id)
        add("vertices", net.vertices[i].id, "duplicate vertex id");

  const bool grids_ok = net.demand.rows() == nv && net.demand.cols() == nk &&
                        net.bom.rows() == nk && net.bom.cols() == nk &&
                        net.production_cost.same_shape(net.demand) &&
                        net.holding_cost.same_shape(net.demand) &&
                        net.initial_inventory.same_shape(net.demand) &&
                        net.shortfall_penalty.same_shape(net.demand) &&
                        net.producible.rows() == nv && net.producible.cols() == nk &&
                        net.holdable.rows() == nv && net.holdable.cols() == nk;
  if (!grids_ok) {
    add("params", "network", "parameter tables do not match vertex/product counts");
    return report;
  }

  for (std::size_t v = 0; v < nv; ++v) {
    const auto& vx = net.vertices[v];
    if (vx.production_capacity < 0) add("p_bar", vx.id, "negative production capacity");
    if (vx.line_cost < 0) add("phi", vx.id, "negative line-opening cost");
    if (vx.change_penalty < 0) add("rho_V", vx.id, "negative change penalty");
    const bool producer = vx.kind == EntityKind::OEM || vx.kind == EntityKind::TierSupplier;
    if (!producer && vx.production_capacity > 0)
      add("p_bar", vx.id, "only OEM/TierSupplier vertices may have production capacity");
    for (std::size_t k = 0; k < nk; ++k) {
      const auto entity = vx.id + "/" + net.products[k].id;
      if (net.demand(v, k) < 0) add("d", entity, "negative demand");
      if (net.demand(v, k) > 0 && vx.kind != EntityKind::Customer)
        add("d", entity, "only Customer vertices may have demand");
      if (net.production_cost(v, k) < 0) add("e", entity, "negative production cost");
      if (net.holding_cost(v, k) < 0) add("h", entity, "negative holding cost");
      if (net.initial_inventory(v, k) < 0) add("I0", entity, "negative initial inventory");
      if (net.shortfall_penalty(v, k) < 0) add("rho_d", entity, "negative demand penalty");
    }
  }

  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const auto& ed = net.edges[e];
    if (ed.from >= nv || ed.to >= nv) {
      add("edges", "edge#" + std::to_string(e), "edge references a missing vertex");
      continue;
    }
    const auto label = net.edge_label(e);
    if (ed.from == ed.to) add("edges", label, "self-loop");
    if (ed.capacity < 0) add("q", label, "negative capacity");
    if (ed.fixed_cost < 0) add("f", label, "negative fixed cost");
    if (ed.change_penalty < 0) add("rho_E", label, "negative change penalty");
    if (ed.unit_cost.size() != nk || ed.carries.size() != nk) {
      add("c", label, "unit cost vector does not match product count");
      continue;
    }
    for (std::size_t k = 0; k < nk; ++k)
      if (ed.unit_cost[k] < 0) add("c", label + "/" + net.products[k].id, "negative unit cost");
  }
  for (std::size_t a = 0; a < net.num_edges(); ++a)
    for (std::size_t b = a + 1; b < net.num_edges(); ++b)
      if (net.edges[a].from == net.edges[b].from && net.edges[a].to == net.edges[b].to)
        add("edges", "edge#" + std::to_string(b), "duplicate edge");

  for (std::size_t c = 0; c < nk; ++c)
    for (std::size_t k = 0; k < nk; ++k)
      if (net.bom(c, k) < 0)
        add("r", net.products[c].id + "->" + net.products[k].id, "negative conversion rate");
  if (detail::bom_has_cycle(net)) add("r", "bom", "bill of materials contains a cycle");

  return report;
}

// ---------------------------------------------------------------------------
// Disruptions

struct EdgeRef {
  std::string from;
  std::string to;
};

struct EdgeLoss {
  std::vector<EdgeRef> edges;
};

struct VertexLoss {
  std::string vertex;
};

struct NewDemand {
  std::string vertex;
  std::string product;
  double amount = 0.0;
};

using DisruptionEvent = std::variant<EdgeLoss, VertexLoss, NewDemand>;

inline std::string describe(const DisruptionEvent& event) {
  return std::visit(
      [](const auto& ev) -> std::string {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, EdgeLoss>) {
          std::string s = "edge-loss";
          for (const auto& e : ev.edges) s += " " + e.from + "->" + e.to;
          return s;
        } else if constexpr (std::is_same_v<T, VertexLoss>) {
          return "vertex-loss " + ev.vertex;
        } else {
          return "new-demand " + ev.vertex + " " + ev.product + " +" + std::to_string(ev.amount);
        }
      },
      event);
}

// Returns a copy of `net` with the event applied. Lost edges and vertices
// stay in the graph but are flagged unavailable; a lost vertex also loses its
// inventory and every incident edge.
[[nodiscard]] inline SupplyNetwork apply_disruption(const SupplyNetwork& net, const DisruptionEvent& event) {
  SupplyNetwork out = net;
  std::visit(
      [&](const auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, EdgeLoss>) {
          for (const auto& ref : ev.edges) out.edges[out.edge_index(ref.from, ref.to)].available = false;
        } else if constexpr (std::is_same_v<T, VertexLoss>) {
          const auto v = out.vertex_index(ev.vertex);
          out.vertices[v].available = false;
          for (std::size_t k = 0; k < out.num_products(); ++k) out.initial_inventory(v, k) = 0.0;
          for (auto& e : out.edges)
            if (e.from == v || e.to == v) e.available = false;
        } else {
          const auto v = out.vertex_index(ev.vertex);
          const auto k = out.product_index(ev.product);
          if (!(ev.amount >= 0.0)) throw InvalidNetwork("new demand must be non-negative");
          out.demand(v, k) += ev.amount;
        }
      },
      event);
  return out;
}

// Returns the network with every rho_E multiplied by `factor`.
inline SupplyNetwork scale_edge_change_penalties(SupplyNetwork net, double factor) {
  for (auto& e : net.edges) e.change_penalty *= factor;
  return net;
}

}  // namespace chainflow
