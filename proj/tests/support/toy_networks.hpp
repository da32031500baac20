#pragma once

// Small hand-built and seeded networks shared by the unit and acceptance
// suites.

#include <string>

#include "chainflow/core/network.hpp"
#include "support/random_milp.hpp"

namespace chainflow::testing {

// S --(q)--> C with a single product; C demands d.
inline SupplyNetwork supplier_customer(double d, double q, double c = 1.0, double f = 10.0) {
  SupplyNetwork net({{"P", "Widget"}},
                    {{"S", EntityKind::TierSupplier}, {"C", EntityKind::Customer}});
  net.vertices[0].production_capacity = 100.0;
  net.vertices[0].line_cost = 5.0;
  net.set_production(0, 0, 2.0);
  net.demand(1, 0) = d;
  net.shortfall_penalty(1, 0) = 100.0;
  net.add_edge(0, 1, f, q, {{0, c}});
  return net;
}

// Raw supplier -> OEM -> customer with one end product built from one unit of
// each of two components (A from S1, B from S2).
inline SupplyNetwork three_echelon(double d) {
  SupplyNetwork net({{"A", "CompA"}, {"B", "CompB"}, {"P", "Product"}},
                    {{"S1", EntityKind::TierSupplier},
                     {"S2", EntityKind::TierSupplier},
                     {"O", EntityKind::OEM},
                     {"C", EntityKind::Customer}});
  net.bom(0, 2) = 1.0;
  net.bom(1, 2) = 1.0;
  for (std::size_t v : {0U, 1U, 2U}) {
    net.vertices[v].production_capacity = 50.0;
    net.vertices[v].line_cost = 20.0;
  }
  net.set_production(0, 0, 1.0);
  net.set_production(1, 1, 1.5);
  net.set_production(2, 2, 3.0);
  net.set_holding(2, 2, 0.5);
  net.demand(3, 2) = d;
  net.shortfall_penalty(3, 2) = 200.0;
  net.add_edge(0, 2, 5.0, 40.0, {{0, 1.0}});
  net.add_edge(1, 2, 5.0, 40.0, {{1, 1.0}});
  net.add_edge(2, 3, 8.0, 40.0, {{2, 2.0}});
  return net;
}

// Seeded layered network: suppliers of two components, OEMs building one end
// product, customers. Parameters are small so exact MILP solves stay fast.
inline SupplyNetwork random_layered(Rng& rng, int suppliers = 2, int oems = 2, int customers = 2) {
  std::vector<Vertex> vs;
  for (int i = 0; i < suppliers; ++i) vs.push_back({"T" + std::to_string(i + 1), EntityKind::TierSupplier});
  for (int i = 0; i < oems; ++i) vs.push_back({"O" + std::to_string(i + 1), EntityKind::OEM});
  for (int i = 0; i < customers; ++i) vs.push_back({"C" + std::to_string(i + 1), EntityKind::Customer});
  SupplyNetwork net({{"A", "CompA"}, {"B", "CompB"}, {"P", "Product"}}, std::move(vs));
  net.bom(0, 2) = 1.0;
  net.bom(1, 2) = 1.0;
  const int o0 = suppliers;
  const int c0 = suppliers + oems;
  for (int s = 0; s < suppliers; ++s) {
    auto& v = net.vertices[s];
    v.production_capacity = rng.integer(10, 40);
    v.line_cost = rng.integer(0, 30);
    v.change_penalty = rng.integer(0, 10);
    net.set_production(s, s % 2, rng.integer(1, 4));
  }
  for (int o = o0; o < c0; ++o) {
    auto& v = net.vertices[o];
    v.production_capacity = rng.integer(10, 40);
    v.line_cost = rng.integer(0, 40);
    v.change_penalty = rng.integer(0, 10);
    net.set_production(o, 2, rng.integer(2, 6));
    net.set_holding(o, 2, rng.uniform(0.1, 1.0));
    if (rng.chance(0.3)) net.initial_inventory(o, 2) = rng.integer(1, 5);
  }
  for (int c = c0; c < c0 + customers; ++c) {
    net.demand(c, 2) = rng.integer(0, 15);
    net.shortfall_penalty(c, 2) = rng.integer(30, 80);
  }
  for (int s = 0; s < suppliers; ++s)
    for (int o = o0; o < c0; ++o)
      if (rng.chance(0.8))
        net.add_edge(s, o, rng.integer(0, 15), rng.integer(5, 30), {{std::size_t(s % 2), rng.uniform(0.5, 3.0)}},
                     rng.integer(0, 10));
  for (int o = o0; o < c0; ++o)
    for (int c = c0; c < c0 + customers; ++c)
      if (rng.chance(0.8))
        net.add_edge(o, c, rng.integer(0, 15), rng.integer(5, 30), {{2, rng.uniform(0.5, 3.0)}},
                     rng.integer(0, 10));
  return net;
}

}  // namespace chainflow::testing
