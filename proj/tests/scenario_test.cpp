#include <gtest/gtest.h>

#include <filesystem>

#include "chainflow/agents/agent.hpp"
#include "chainflow/scenario/report.hpp"
#include "support/plan_checks.hpp"

namespace chainflow::scenario {
namespace {

const std::string kReference = std::string(CHAINFLOW_DATA_DIR) + "/reference_network.json";

ScenarioConfig reference_config(const char* name) {
  ScenarioConfig cfg;
  cfg.network = kReference;
  cfg.name = name;
  cfg.event = available_scenarios(cfg).at(name);
  return cfg;
}

const Baseline& reference_baseline() {
  static const Baseline base = prepare_baseline(reference_config("C5"));
  return base;
}

const RunReport& reference_run(const char* name) {
  static std::map<std::string, RunReport> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, run_scenario(reference_config(name), reference_baseline())).first;
  return it->second;
}

// ---------------------------------------------------------------------------
// Case-study network

TEST(CaseStudy, SameSeedSameNetwork) {
  EXPECT_EQ(io::network_to_json(build_case_study_network(3)), io::network_to_json(build_case_study_network(3)));
  EXPECT_NE(io::network_to_json(build_case_study_network(3)), io::network_to_json(build_case_study_network(4)));
}

TEST(CaseStudy, Structure) {
  const auto net = build_case_study_network(5);
  ASSERT_EQ(net.num_vertices(), 23u);
  ASSERT_EQ(net.num_products(), 6u);
  std::map<EntityKind, int> kinds;
  for (const auto& v : net.vertices) ++kinds[v.kind];
  EXPECT_EQ(kinds[EntityKind::TierSupplier], 8);
  EXPECT_EQ(kinds[EntityKind::OEM], 3);
  EXPECT_EQ(kinds[EntityKind::Distributor], 4);
  EXPECT_EQ(kinds[EntityKind::Customer], 8);
  EXPECT_TRUE(validate_network(net).empty());

  const auto patty = net.product_index("BeefPatty"), steak = net.product_index("Steak");
  for (const char* c : {"RawBeef", "Seasoning", "Package0"}) EXPECT_EQ(net.bom(net.product_index(c), patty), 1.0);
  for (const char* c : {"RawBeef", "Seasoning", "Package1"}) EXPECT_EQ(net.bom(net.product_index(c), steak), 1.0);
  EXPECT_EQ(net.bom(net.product_index("Package1"), patty), 0.0);

  for (const char* o : {"O1", "O2", "O3"})
    for (auto k : {patty, steak}) {
      EXPECT_TRUE(net.producible(net.vertex_index(o), k));
      EXPECT_TRUE(net.holdable(net.vertex_index(o), k));
    }
  for (const char* d : {"D1", "D2", "D3", "D4"})
    for (auto k : {patty, steak}) EXPECT_TRUE(net.holdable(net.vertex_index(d), k));

  // Every component except Package1 has at least two suppliers.
  for (const char* c : {"RawBeef", "Seasoning", "Package0"}) {
    int n = 0;
    for (std::size_t t = 0; t < 8; ++t) n += net.producible(t, net.product_index(c));
    EXPECT_GE(n, 2) << c;
  }
}

TEST(CaseStudy, T4HasASameCapabilityPeer) {
  const auto net = build_case_study_network(10);
  auto plan = FlowPlan::zeros(net);
  const auto agents = agents::init_agents(net, plan);
  const auto& t4 = agents.at(agents::AgentId::vertex(net.vertex_index("T4")));
  const auto peers = agents::same_capability_peers(
      t4, {agents::CapabilityKind::Production, net.product_index("Seasoning")});
  EXPECT_FALSE(peers.empty());
}

TEST(CaseStudy, CapacityCoversOneAndAHalfTimesDemand) {
  for (std::uint64_t seed : {1u, 7u, 10u, 99u}) {
    const auto net = build_case_study_network(seed);
    double demand = 0.0;
    for (double d : net.demand.values()) demand += d;
    for (const char* c : {"RawBeef", "Seasoning"}) {
      double cap = 0.0;
      for (std::size_t t = 0; t < 8; ++t)
        if (net.producible(t, net.product_index(c))) cap += net.vertices[t].production_capacity;
      EXPECT_GE(cap, 1.5 * demand) << seed << " " << c;
    }
    double oem = 0.0;
    for (std::size_t o = 8; o < 11; ++o) oem += net.vertices[o].production_capacity;
    EXPECT_GE(oem, 1.5 * demand) << seed;
  }
}

TEST(CaseStudy, BasePlanMeetsAllDemand) {
  const auto& base = reference_baseline();
  EXPECT_DOUBLE_EQ(testing::total_shortfall(base.plan), 0.0);
  EXPECT_EQ(testing::plan_problems(base.net, base.plan), "");
  const auto other = build_case_study_network(1);
  EXPECT_DOUBLE_EQ(testing::total_shortfall(planner::plan(other)), 0.0);
}

TEST(CaseStudy, ReferenceFileIsSeedTen) {
  const auto stored = io::load_network(kReference);
  EXPECT_EQ(io::network_to_json(stored), io::network_to_json(build_case_study_network(10)));
  const auto scenarios = io::scenarios_from_json(io::read_json_file(kReference));
  EXPECT_EQ(scenarios.size(), 3u);
  for (const auto& [name, ev] : builtin_scenarios()) EXPECT_EQ(describe(scenarios.at(name)), describe(ev));
}

// ---------------------------------------------------------------------------
// run_scenario

TEST(RunScenario, C5DistributedTalksLess) {
  const auto& r = reference_run("C5");
  ASSERT_EQ(r.runs.size(), 2u);
  const auto& c = r.run(Method::Centralized).metrics;
  const auto& d = r.run(Method::Distributed).metrics;
  EXPECT_LT(d.C_e, c.C_e);
  EXPECT_EQ(c.status, "Optimal");
  EXPECT_EQ(d.status, "Recovered");
  EXPECT_DOUBLE_EQ(r.run(Method::Centralized).unmet_demand, 0.0);
  EXPECT_DOUBLE_EQ(r.run(Method::Distributed).unmet_demand, 0.0);
}

TEST(RunScenario, T4DistributedKeepsExistingFlows) {
  const auto& d = reference_run("T4").run(Method::Distributed);
  EXPECT_EQ(d.metrics.F_c, 0u);
  EXPECT_EQ(d.metrics.E_a, 1u);
  EXPECT_EQ(d.metrics.C_e, 3u);
}

TEST(RunScenario, O1CappedCentralizedLeavesDemandUnmet) {
  auto cfg = reference_config("O1");
  cfg.method = MethodSelection::Centralized;
  const auto& base = reference_baseline();
  const auto disrupted = apply_disruption(base.net, cfg.event);
  const auto need = planner::min_added_edges_for_full_service(disrupted, base.plan);
  ASSERT_TRUE(need.has_value());
  ASSERT_GE(*need, 1u);
  cfg.added_edge_cap = *need - 1;
  const auto r = run_scenario(cfg, base);
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.runs[0].metrics.status, "UnmetDemand");
  EXPECT_GT(r.runs[0].unmet_demand, 0.0);
  EXPECT_LE(r.runs[0].metrics.E_a, *need - 1);
}

TEST(RunScenario, CentralizedNeverCostsMore) {
  for (const char* name : {"C5", "T4", "O1"}) {
    const auto& r = reference_run(name);
    EXPECT_LE(r.run(Method::Centralized).cost.total, r.run(Method::Distributed).cost.total + 1e-6) << name;
  }
}

TEST(RunScenario, PlansAreFeasible) {
  for (const char* name : {"C5", "T4", "O1"}) {
    const auto& r = reference_run(name);
    for (const auto& run : r.runs) EXPECT_EQ(testing::plan_problems(r.network, run.plan), "") << name;
  }
}

TEST(RunScenario, RejectsBadConfig) {
  auto cfg = reference_config("C5");
  cfg.rho_e_scale = 0.0;
  EXPECT_THROW(run_scenario(cfg, reference_baseline()), ScenarioError);
  cfg.rho_e_scale = 1.0;
  cfg.network = "/nonexistent/network.json";
  EXPECT_THROW(prepare_baseline(cfg), ScenarioError);
  cfg = reference_config("C5");
  cfg.event = VertexLoss{"Nowhere"};
  EXPECT_THROW(run_scenario(cfg, reference_baseline()), ScenarioError);
  EXPECT_THROW(parse_method("magic"), ScenarioError);
}

TEST(RunScenario, MissingMethodIsAnError) {
  auto cfg = reference_config("T4");
  cfg.method = MethodSelection::Distributed;
  const auto r = run_scenario(cfg, reference_baseline());
  EXPECT_THROW(r.run(Method::Centralized), ScenarioError);
  EXPECT_THROW(flow_diff_dot(r, Method::Centralized), ScenarioError);
}

// ---------------------------------------------------------------------------
// Reports

TEST(Report, CsvHasOneRowPerMethod) {
  const auto csv = to_csv(reference_run("C5").rows());
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "scenario,method,C_f,C_p,E_a,F_c,C_e,status");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST(Report, CsvRoundTrip) {
  for (const char* name : {"C5", "T4", "O1"}) {
    const auto rows = reference_run(name).rows();
    EXPECT_EQ(parse_csv(to_csv(rows)), rows);
  }
  std::vector<MetricsRow> odd = {{"with, comma \"quoted\"", "distributed", -0.1, 1e-7, 0, 3, 12, "Recovered"},
                                 {"x", "centralized", 123456.789, -2.5e10, 7, 0, 47, "Optimal"}};
  EXPECT_EQ(parse_csv(to_csv(odd)), odd);
}

TEST(Report, CsvRejectsBadInput) {
  EXPECT_THROW(parse_csv("a,b\n"), ScenarioError);
  EXPECT_THROW(parse_csv("scenario,method,C_f,C_p,E_a,F_c,C_e,status\nx,y,1,2,3,4\n"), ScenarioError);
  EXPECT_THROW(parse_csv("scenario,method,C_f,C_p,E_a,F_c,C_e,status\nx,y,abc,2,3,4,5,s\n"), ScenarioError);
}

TEST(Report, TextTableIsAligned) {
  const auto text = to_text(reference_run("C5").rows());
  std::istringstream in(text);
  std::string header, rule, line;
  std::getline(in, header);
  std::getline(in, rule);
  EXPECT_EQ(rule.find_first_not_of('-'), std::string::npos);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    // Numeric columns are right-aligned under their headers.
    for (const char* col : {"C_f", "C_p", "E_a", "F_c", "C_e"}) {
      const auto end = header.find(col) + 3;
      ASSERT_LT(end, line.size());
      EXPECT_NE(line[end - 1], ' ') << col;
      EXPECT_EQ(line[end], ' ') << col;
    }
    EXPECT_EQ(line.rfind(' ') + 1, header.find("Status"));
  }
  EXPECT_EQ(rows, 2);
  EXPECT_NE(text.find('+'), std::string::npos);
}

TEST(Report, UnwritablePathThrows) {
  EXPECT_THROW(export_report(reference_run("C5"), ReportFormat::Csv, "/nonexistent/dir/out.csv"), ScenarioError);
  EXPECT_THROW(export_flow_diff(reference_run("C5"), Method::Distributed, "/nonexistent/dir/out.dot"),
               ScenarioError);
}

TEST(Report, ExportWritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "chainflow_report_test";
  std::filesystem::create_directories(dir);
  const auto& r = reference_run("T4");
  export_report(r, ReportFormat::Csv, (dir / "m.csv").string());
  export_flow_diff(r, Method::Distributed, (dir / "d.dot").string());
  std::ifstream csv(dir / "m.csv");
  std::stringstream text;
  text << csv.rdbuf();
  EXPECT_EQ(parse_csv(text.str()), r.rows());
  EXPECT_TRUE(std::filesystem::file_size(dir / "d.dot") > 0);
  std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Flow diff

TEST(FlowDiff, NoChangeScenarioIsAllUnchanged) {
  auto cfg = reference_config("C5");
  cfg.event = NewDemand{"C5", "BeefPatty", 0.0};
  const auto r = run_scenario(cfg, reference_baseline());
  for (auto m : {Method::Centralized, Method::Distributed}) {
    const auto dot = flow_diff_dot(r, m);
    std::size_t used = 0;
    for (auto u : r.baseline.edge_used) used += u;
    EXPECT_EQ(count_annotated(dot, "unchanged"), used);
    for (const char* a : {"changed", "added", "removed"}) EXPECT_EQ(count_annotated(dot, a), 0u) << a;
  }
}

TEST(FlowDiff, T4DistributedAddsOneEdge) {
  const auto dot = flow_diff_dot(reference_run("T4"), Method::Distributed);
  EXPECT_EQ(count_annotated(dot, "added"), 1u);
  EXPECT_EQ(count_annotated(dot, "changed"), 0u);
}

TEST(FlowDiff, AnnotationsMatchMetrics) {
  for (const char* name : {"C5", "T4", "O1"}) {
    const auto& r = reference_run(name);
    for (const auto& run : r.runs) {
      const auto dot = flow_diff_dot(r, run.method);
      EXPECT_EQ(count_annotated(dot, "added"), run.metrics.E_a) << name;
      EXPECT_EQ(count_annotated(dot, "changed"), run.metrics.F_c) << name;
      EXPECT_EQ(count_annotated(dot, "removed"), run.delta.removed_edges) << name;
    }
  }
}

TEST(FlowDiff, OutputsAreReproducible) {
  const auto cfg = reference_config("O1");
  const auto a = run_scenario(cfg, reference_baseline());
  const auto b = run_scenario(cfg, reference_baseline());
  EXPECT_EQ(to_csv(a.rows()), to_csv(b.rows()));
  for (auto m : {Method::Centralized, Method::Distributed}) EXPECT_EQ(flow_diff_dot(a, m), flow_diff_dot(b, m));
}

}  // namespace
}  // namespace chainflow::scenario
