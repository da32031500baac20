#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "chainflow/core/network.hpp"

namespace chainflow::scenario {

// Parameter ranges for the generated case study. Every number drawn from
// them is a reconstruction; the published study does not list its data.
struct CaseStudyRanges {
  double demand_min = 20, demand_max = 40;
  double raw_supplier_capacity_min = 100, raw_supplier_capacity_max = 140;
  double oem_capacity_min = 130, oem_capacity_max = 170;
  double supplier_edge_capacity_min = 60, supplier_edge_capacity_max = 110;
  double oem_edge_capacity_min = 60, oem_edge_capacity_max = 100;
  double customer_edge_capacity_min = 40, customer_edge_capacity_max = 60;
  double fixed_cost_min = 5, fixed_cost_max = 20;
  double unit_cost_min = 1, unit_cost_max = 5;
  double supplier_cost_min = 2, supplier_cost_max = 6;
  double oem_cost_min = 5, oem_cost_max = 10;
  double line_cost_min = 10, line_cost_max = 40;
  double holding_cost_min = 0.5, holding_cost_max = 2;
  double shortfall_penalty_min = 200, shortfall_penalty_max = 400;
  double edge_change_penalty_min = 50, edge_change_penalty_max = 150;
  double vertex_change_penalty_min = 50, vertex_change_penalty_max = 150;
};

// Which component each tier supplier makes: T1-T3 RawBeef, T4-T5 Seasoning,
// T6-T7 Package0, T8 Package1.
inline const char* supplier_product(std::size_t supplier) {
  static const char* table[] = {"RawBeef",  "RawBeef",  "RawBeef",  "Seasoning",
                                "Seasoning", "Package0", "Package0", "Package1"};
  return table[supplier];
}

// Builds the 23-entity network: 8 tier suppliers, 3 OEMs, 4 distributors and
// 8 customers. Every supplier may ship to every OEM, every OEM to every
// distributor, and each customer is reachable from two distributors. Odd
// customers demand BeefPatty, even ones Steak.
inline SupplyNetwork build_case_study_network(std::uint64_t seed, const CaseStudyRanges& r = {}) {
  std::mt19937_64 rng(seed);
  auto draw = [&](double lo, double hi) {
    // Whole numbers keep the data readable and the LPs well scaled.
    std::uniform_int_distribution<long> dist(static_cast<long>(lo), static_cast<long>(hi));
    return static_cast<double>(dist(rng));
  };

  std::vector<Product> products = {{"RawBeef", "Raw Beef"}, {"Seasoning", "Seasoning"},
                                   {"Package0", "Package0"}, {"Package1", "Package1"},
                                   {"BeefPatty", "Beef Patty"}, {"Steak", "Steak"}};
  std::vector<Vertex> vertices;
  for (int i = 1; i <= 8; ++i) vertices.push_back({"T" + std::to_string(i), EntityKind::TierSupplier});
  for (int i = 1; i <= 3; ++i) vertices.push_back({"O" + std::to_string(i), EntityKind::OEM});
  for (int i = 1; i <= 4; ++i) vertices.push_back({"D" + std::to_string(i), EntityKind::Distributor});
  for (int i = 1; i <= 8; ++i) vertices.push_back({"C" + std::to_string(i), EntityKind::Customer});
  SupplyNetwork net(std::move(products), std::move(vertices));

  const auto raw = net.product_index("RawBeef");
  const auto seasoning = net.product_index("Seasoning");
  const auto pack0 = net.product_index("Package0");
  const auto pack1 = net.product_index("Package1");
  const auto patty = net.product_index("BeefPatty");
  const auto steak = net.product_index("Steak");
  net.bom(raw, patty) = net.bom(seasoning, patty) = net.bom(pack0, patty) = 1.0;
  net.bom(raw, steak) = net.bom(seasoning, steak) = net.bom(pack1, steak) = 1.0;

  const std::size_t first_oem = 8, first_dist = 11, first_customer = 15;

  // Demand first, so supplier capacities can be sized against it.
  double demand[2] = {0, 0};
  for (std::size_t c = 0; c < 8; ++c) {
    const auto v = first_customer + c;
    const auto k = c % 2 == 0 ? patty : steak;
    net.demand(v, k) = draw(r.demand_min, r.demand_max);
    net.shortfall_penalty(v, k) = draw(r.shortfall_penalty_min, r.shortfall_penalty_max);
    demand[k == patty ? 0 : 1] += net.demand(v, k);
  }
  const double total = demand[0] + demand[1];
  // Per component: total units required and the number of suppliers.
  auto required = [&](std::size_t k) { return k == pack0 ? demand[0] : k == pack1 ? demand[1] : total; };
  auto supplier_count = [&](std::size_t k) { return k == raw ? 3.0 : k == pack1 ? 1.0 : 2.0; };

  for (std::size_t t = 0; t < 8; ++t) {
    auto& vx = net.vertices[t];
    const auto k = net.product_index(supplier_product(t));
    // Any single supplier may drop out and the others still cover 1.5x the
    // component demand.
    const double share = 1.5 * required(k) / std::max(1.0, supplier_count(k) - 1.0);
    vx.production_capacity =
        std::max(std::ceil(share), draw(r.raw_supplier_capacity_min, r.raw_supplier_capacity_max));
    vx.line_cost = draw(r.line_cost_min, r.line_cost_max);
    vx.change_penalty = draw(r.vertex_change_penalty_min, r.vertex_change_penalty_max);
    net.set_production(t, k, draw(r.supplier_cost_min, r.supplier_cost_max));
    net.set_holding(t, k, draw(r.holding_cost_min, r.holding_cost_max));
  }
  for (std::size_t o = 0; o < 3; ++o) {
    const auto v = first_oem + o;
    auto& vx = net.vertices[v];
    vx.production_capacity = std::max(std::ceil(1.5 * total / 3.0), draw(r.oem_capacity_min, r.oem_capacity_max));
    vx.line_cost = draw(r.line_cost_min, r.line_cost_max);
    vx.change_penalty = draw(r.vertex_change_penalty_min, r.vertex_change_penalty_max);
    for (auto k : {patty, steak}) {
      net.set_production(v, k, draw(r.oem_cost_min, r.oem_cost_max));
      net.set_holding(v, k, draw(r.holding_cost_min, r.holding_cost_max));
    }
  }
  for (std::size_t d = 0; d < 4; ++d)
    for (auto k : {patty, steak}) net.set_holding(first_dist + d, k, draw(r.holding_cost_min, r.holding_cost_max));

  auto edge = [&](std::size_t from, std::size_t to, double qmin, double qmax, std::vector<std::size_t> carried) {
    const double f = draw(r.fixed_cost_min, r.fixed_cost_max);
    const double q = draw(qmin, qmax);
    std::map<std::size_t, double> costs;
    for (auto k : carried) costs[k] = draw(r.unit_cost_min, r.unit_cost_max);
    net.add_edge(from, to, f, q, costs, draw(r.edge_change_penalty_min, r.edge_change_penalty_max));
  };
  for (std::size_t t = 0; t < 8; ++t)
    for (std::size_t o = 0; o < 3; ++o)
      edge(t, first_oem + o, r.supplier_edge_capacity_min, r.supplier_edge_capacity_max,
           {net.product_index(supplier_product(t))});
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t d = 0; d < 4; ++d)
      edge(first_oem + o, first_dist + d, r.oem_edge_capacity_min, r.oem_edge_capacity_max, {patty, steak});
  for (std::size_t c = 0; c < 8; ++c)
    for (std::size_t d : {c % 4, (c + 1) % 4})
      edge(first_dist + d, first_customer + c, r.customer_edge_capacity_min, r.customer_edge_capacity_max,
           {patty, steak});
  return net;
}

}  // namespace chainflow::scenario
