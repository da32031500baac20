#pragma once

#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "chainflow/core/network.hpp"
#include "chainflow/core/plan.hpp"

// Network definition files: JSON with sections products, vertices, edges,
// bom, params (and an optional scenarios section). See docs/network_format.md.

namespace chainflow::io {

using Json = nlohmann::ordered_json;

namespace detail {

inline double number_or(const Json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw InvalidNetwork(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

inline const Json& require(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key))
    throw InvalidNetwork(std::string("missing field '") + key + "'");
  return obj.at(key);
}

}  // namespace detail

inline DisruptionEvent event_from_json(const Json& j) {
  const auto type = detail::require(j, "type").get<std::string>();
  if (type == "vertex_loss") return VertexLoss{detail::require(j, "vertex").get<std::string>()};
  if (type == "new_demand")
    return NewDemand{detail::require(j, "vertex").get<std::string>(),
                     detail::require(j, "product").get<std::string>(),
                     detail::require(j, "amount").get<double>()};
  if (type == "edge_loss") {
    EdgeLoss ev;
    for (const auto& pair : detail::require(j, "edges"))
      ev.edges.push_back({pair.at(0).get<std::string>(), pair.at(1).get<std::string>()});
    return ev;
  }
  throw InvalidNetwork("unknown disruption type '" + type + "'");
}

inline Json event_to_json(const DisruptionEvent& event) {
  return std::visit(
      [](const auto& ev) -> Json {
        using T = std::decay_t<decltype(ev)>;
        Json j;
        if constexpr (std::is_same_v<T, VertexLoss>) {
          j["type"] = "vertex_loss";
          j["vertex"] = ev.vertex;
        } else if constexpr (std::is_same_v<T, NewDemand>) {
          j["type"] = "new_demand";
          j["vertex"] = ev.vertex;
          j["product"] = ev.product;
          j["amount"] = ev.amount;
        } else {
          j["type"] = "edge_loss";
          j["edges"] = Json::array();
          for (const auto& e : ev.edges) j["edges"].push_back(Json::array({e.from, e.to}));
        }
        return j;
      },
      event);
}

inline SupplyNetwork network_from_json(const Json& j) {
  std::vector<Product> products;
  for (const auto& p : detail::require(j, "products"))
    products.push_back({detail::require(p, "id").get<std::string>(),
                        p.value("name", p.at("id").get<std::string>())});
  std::vector<Vertex> vertices;
  for (const auto& v : detail::require(j, "vertices")) {
    Vertex vx;
    vx.id = detail::require(v, "id").get<std::string>();
    vx.kind = parse_entity_kind(detail::require(v, "kind").get<std::string>());
    vertices.push_back(std::move(vx));
  }
  SupplyNetwork net(std::move(products), std::move(vertices));

  auto vertex = [&](const std::string& id) {
    if (auto v = net.find_vertex(id)) return *v;
    throw InvalidNetwork("reference to undeclared vertex '" + id + "'");
  };
  auto product = [&](const std::string& id) {
    if (auto k = net.find_product(id)) return *k;
    throw InvalidNetwork("reference to undeclared product '" + id + "'");
  };

  for (const auto& e : detail::require(j, "edges")) {
    std::map<std::size_t, double> costs;
    if (e.contains("c"))
      for (const auto& [k, c] : e.at("c").items()) costs[product(k)] = c.get<double>();
    net.add_edge(vertex(detail::require(e, "from").get<std::string>()),
                 vertex(detail::require(e, "to").get<std::string>()),
                 detail::number_or(e, "f", 0.0), detail::number_or(e, "q", 0.0), costs,
                 detail::number_or(e, "rho_E", 0.0));
  }
  if (j.contains("bom"))
    for (const auto& b : j.at("bom"))
      net.bom(product(detail::require(b, "component").get<std::string>()),
              product(detail::require(b, "product").get<std::string>())) =
          detail::number_or(b, "r", 0.0);

  if (j.contains("params")) {
    for (const auto& [id, p] : j.at("params").items()) {
      const auto v = vertex(id);
      auto& vx = net.vertices[v];
      vx.production_capacity = detail::number_or(p, "p_bar", 0.0);
      vx.line_cost = detail::number_or(p, "phi", 0.0);
      vx.change_penalty = detail::number_or(p, "rho_V", 0.0);
      auto each = [&](const char* key, auto&& fn) {
        if (!p.contains(key)) return;
        for (const auto& [k, val] : p.at(key).items()) fn(product(k), val.template get<double>());
      };
      each("e", [&](std::size_t k, double c) { net.set_production(v, k, c); });
      each("h", [&](std::size_t k, double c) { net.set_holding(v, k, c); });
      each("I0", [&](std::size_t k, double c) { net.initial_inventory(v, k) = c; });
      each("d", [&](std::size_t k, double c) { net.demand(v, k) = c; });
      each("rho_d", [&](std::size_t k, double c) { net.shortfall_penalty(v, k) = c; });
    }
  }
  return net;
}

inline Json network_to_json(const SupplyNetwork& net) {
  Json j;
  j["products"] = Json::array();
  for (const auto& p : net.products) j["products"].push_back({{"id", p.id}, {"name", p.name}});
  j["vertices"] = Json::array();
  for (const auto& v : net.vertices)
    j["vertices"].push_back({{"id", v.id}, {"kind", std::string(to_string(v.kind))}});
  j["edges"] = Json::array();
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    const auto& ed = net.edges[e];
    Json c = Json::object();
    for (std::size_t k = 0; k < net.num_products(); ++k)
      if (ed.carries[k]) c[net.products[k].id] = ed.unit_cost[k];
    j["edges"].push_back({{"from", net.vertices[ed.from].id},
                          {"to", net.vertices[ed.to].id},
                          {"f", ed.fixed_cost},
                          {"q", ed.capacity},
                          {"c", c},
                          {"rho_E", ed.change_penalty}});
  }
  j["bom"] = Json::array();
  for (std::size_t c = 0; c < net.num_products(); ++c)
    for (std::size_t k = 0; k < net.num_products(); ++k)
      if (net.bom(c, k) != 0.0)
        j["bom"].push_back({{"component", net.products[c].id},
                            {"product", net.products[k].id},
                            {"r", net.bom(c, k)}});
  j["params"] = Json::object();
  for (std::size_t v = 0; v < net.num_vertices(); ++v) {
    const auto& vx = net.vertices[v];
    Json p = Json::object();
    if (vx.production_capacity != 0.0) p["p_bar"] = vx.production_capacity;
    if (vx.line_cost != 0.0) p["phi"] = vx.line_cost;
    if (vx.change_penalty != 0.0) p["rho_V"] = vx.change_penalty;
    auto table = [&](const char* key, auto&& include, const Grid<double>& g) {
      Json m = Json::object();
      for (std::size_t k = 0; k < net.num_products(); ++k)
        if (include(k)) m[net.products[k].id] = g(v, k);
      if (!m.empty()) p[key] = m;
    };
    table("e", [&](std::size_t k) { return net.producible(v, k) != 0; }, net.production_cost);
    table("h", [&](std::size_t k) { return net.holdable(v, k) != 0; }, net.holding_cost);
    table("I0", [&](std::size_t k) { return net.initial_inventory(v, k) != 0.0; },
          net.initial_inventory);
    table("d", [&](std::size_t k) { return net.demand(v, k) != 0.0; }, net.demand);
    table("rho_d", [&](std::size_t k) { return net.shortfall_penalty(v, k) != 0.0; },
          net.shortfall_penalty);
    j["params"][vx.id] = p;
  }
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidNetwork("'" + path + "': " + ex.what());
  }
}

inline SupplyNetwork load_network(const std::string& path) {
  try {
    return network_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidNetwork("'" + path + "': " + ex.what());
  }
}

// Named disruption scenarios stored alongside a network definition.
inline std::map<std::string, DisruptionEvent> scenarios_from_json(const Json& j) {
  std::map<std::string, DisruptionEvent> out;
  if (!j.contains("scenarios")) return out;
  for (const auto& [name, ev] : j.at("scenarios").items()) out.emplace(name, event_from_json(ev));
  return out;
}

inline Json plan_to_json(const SupplyNetwork& net, const FlowPlan& plan) {
  Json j;
  j["flows"] = Json::array();
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    if (!plan.edge_used[e]) continue;
    Json y = Json::object();
    for (std::size_t k = 0; k < net.num_products(); ++k)
      if (plan.flow(e, k) > 0.0) y[net.products[k].id] = plan.flow(e, k);
    j["flows"].push_back({{"from", net.vertices[net.edges[e].from].id},
                          {"to", net.vertices[net.edges[e].to].id},
                          {"y", y}});
  }
  j["vertices"] = Json::object();
  for (std::size_t v = 0; v < net.num_vertices(); ++v) {
    Json entry = Json::object();
    auto table = [&](const char* key, const Grid<double>& g) {
      Json m = Json::object();
      for (std::size_t k = 0; k < net.num_products(); ++k)
        if (g(v, k) != 0.0) m[net.products[k].id] = g(v, k);
      if (!m.empty()) entry[key] = m;
    };
    table("p", plan.produced);
    table("x", plan.satisfied);
    table("I", plan.inventory);
    table("shortfall", plan.shortfall);
    if (plan.line_open[v]) entry["zeta"] = 1;
    if (!entry.empty()) j["vertices"][net.vertices[v].id] = entry;
  }
  return j;
}

}  // namespace chainflow::io
