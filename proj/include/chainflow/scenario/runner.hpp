#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chainflow/core/io.hpp"
#include "chainflow/planner/centralized.hpp"
#include "chainflow/protocol/recovery.hpp"
#include "chainflow/scenario/case_study.hpp"

namespace chainflow::scenario {

class ScenarioError : public Error {
 public:
  using Error::Error;
};

enum class Method { Centralized, Distributed };
enum class MethodSelection { Centralized, Distributed, Both };

inline std::string_view to_string(Method m) { return m == Method::Centralized ? "centralized" : "distributed"; }

inline Method parse_method(std::string_view s) {
  if (s == "centralized") return Method::Centralized;
  if (s == "distributed") return Method::Distributed;
  throw ScenarioError("unknown method '" + std::string(s) + "'");
}

inline MethodSelection parse_method_selection(std::string_view s) {
  if (s == "both") return MethodSelection::Both;
  return parse_method(s) == Method::Centralized ? MethodSelection::Centralized : MethodSelection::Distributed;
}

// Network source understood by load_scenario_network: the generated case
// study or a network file.
inline constexpr std::string_view kBuiltinCaseStudy = "case-study";

inline std::map<std::string, DisruptionEvent> builtin_scenarios() {
  return {{"C5", NewDemand{"C5", "BeefPatty", 20.0}}, {"O1", VertexLoss{"O1"}}, {"T4", VertexLoss{"T4"}}};
}

struct ScenarioConfig {
  std::string network = std::string(kBuiltinCaseStudy);
  std::uint64_t seed = 10;  // used by the builtin network only
  std::string name;         // scenario label in reports
  DisruptionEvent event = NewDemand{"C5", "BeefPatty", 20.0};
  MethodSelection method = MethodSelection::Both;
  // Hard cap on added edges for the centralized re-plan; for the distributed
  // method it caps the new lanes of each allocation.
  std::optional<std::size_t> added_edge_cap;
  double rho_e_scale = 1.0;
  bool fallback_to_centralized = true;
  milp::SolverConfig solver;

  void validate() const {
    if (!(rho_e_scale > 0.0)) throw ScenarioError("rho_E scale factor must be positive");
    if (network != kBuiltinCaseStudy && !std::filesystem::exists(network))
      throw ScenarioError("network file '" + network + "' does not exist");
  }
};

inline SupplyNetwork load_scenario_network(const ScenarioConfig& cfg) {
  if (cfg.network == kBuiltinCaseStudy) return build_case_study_network(cfg.seed);
  return io::load_network(cfg.network);
}

// Named scenarios available for a config: the builtin three for the case
// study, otherwise the file's scenarios section.
inline std::map<std::string, DisruptionEvent> available_scenarios(const ScenarioConfig& cfg) {
  if (cfg.network == kBuiltinCaseStudy) return builtin_scenarios();
  return io::scenarios_from_json(io::read_json_file(cfg.network));
}

struct MetricsRow {
  std::string scenario;
  std::string method;
  double C_f = 0.0;
  double C_p = 0.0;
  std::size_t E_a = 0;
  std::size_t F_c = 0;
  std::size_t C_e = 0;
  std::string status;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct EdgeDiff {
  std::size_t edge = 0;
  std::vector<double> before;
  std::vector<double> after;
  EdgeStatus status = EdgeStatus::Unused;
};

struct MethodRun {
  Method method = Method::Centralized;
  MetricsRow metrics;
  FlowPlan plan;
  PlanDelta delta;
  CostBreakdown cost;           // with change penalties against the baseline
  double unmet_demand = 0.0;    // shortfall beyond the baseline's
  std::vector<EdgeDiff> diff;   // one entry per edge
  protocol::MessageLog log;     // distributed only
};

struct RunReport {
  std::string scenario;
  SupplyNetwork network;    // after the disruption
  FlowPlan baseline;
  CostBreakdown baseline_cost;
  std::vector<MethodRun> runs;

  const MethodRun& run(Method m) const {
    for (const auto& r : runs)
      if (r.method == m) return r;
    throw ScenarioError("method '" + std::string(to_string(m)) + "' was not run");
  }
  std::vector<MetricsRow> rows() const {
    std::vector<MetricsRow> out;
    for (const auto& r : runs) out.push_back(r.metrics);
    return out;
  }
};

// The undisrupted network with its centralized plan and agents, shared by
// every scenario on the same network. The base plan does not depend on the
// change penalties, so the rho_E scale is applied per run.
struct Baseline {
  SupplyNetwork net;
  FlowPlan plan;
  protocol::World world;
};

inline Baseline prepare_baseline(const ScenarioConfig& cfg) {
  cfg.validate();
  auto net = load_scenario_network(cfg);
  FlowPlan plan;
  try {
    plan = planner::plan(net, cfg.solver);
  } catch (const Error& ex) {
    throw ScenarioError("baseline plan: " + std::string(ex.what()));
  }
  auto world = protocol::World::make(net, plan);
  return {std::move(net), std::move(plan), std::move(world)};
}

namespace detail {

inline std::vector<EdgeDiff> flow_diff(const SupplyNetwork& net, const FlowPlan& before, const FlowPlan& after,
                                       const PlanDelta& delta) {
  std::vector<EdgeDiff> out;
  for (std::size_t e = 0; e < net.num_edges(); ++e) {
    EdgeDiff d;
    d.edge = e;
    d.status = delta.edge_status[e];
    for (std::size_t k = 0; k < net.num_products(); ++k) {
      d.before.push_back(before.flow(e, k));
      d.after.push_back(after.flow(e, k));
    }
    out.push_back(std::move(d));
  }
  return out;
}

// Shortfall above the baseline's; unserved new demand counts too.
inline double unmet_demand(const FlowPlan& baseline, const FlowPlan& plan) {
  double unmet = 0.0;
  for (std::size_t i = 0; i < plan.shortfall.values().size(); ++i) {
    const double extra = plan.shortfall.values()[i] - baseline.shortfall.values()[i];
    if (extra > kTolerance) unmet += extra;
  }
  return unmet;
}

inline void fill(MethodRun& run, const std::string& scenario, const Baseline& base, const SupplyNetwork& disrupted,
                 std::size_t comm_effort, std::string status) {
  run.delta = plan_delta(base.plan, run.plan, disrupted);
  run.cost = total_cost(disrupted, run.plan, &base.plan);
  run.unmet_demand = unmet_demand(base.plan, run.plan);
  run.diff = flow_diff(disrupted, base.plan, run.plan, run.delta);
  run.metrics = {scenario,
                 std::string(to_string(run.method)),
                 run.delta.flow_cost_change,
                 run.delta.production_cost_change,
                 run.delta.added_edges,
                 run.delta.changed_flows,
                 comm_effort,
                 std::move(status)};
}

}  // namespace detail

inline RunReport run_scenario(const ScenarioConfig& cfg, const Baseline& base) {
  cfg.validate();
  RunReport report;
  report.scenario = cfg.name.empty() ? describe(cfg.event) : cfg.name;
  report.baseline = base.plan;
  report.baseline_cost = total_cost(base.net, base.plan);
  try {
    report.network = scale_edge_change_penalties(apply_disruption(base.net, cfg.event), cfg.rho_e_scale);
  } catch (const Error& ex) {
    throw ScenarioError(report.scenario + ": " + ex.what());
  }
  auto pen = planner::ReplanPenalties::from_network(report.network);
  pen.added_edge_cap = cfg.added_edge_cap;

  const bool central = cfg.method != MethodSelection::Distributed;
  const bool distributed = cfg.method != MethodSelection::Centralized;
  try {
    if (central) {
      MethodRun run;
      run.method = Method::Centralized;
      auto r = planner::replan(report.network, base.plan, pen, cfg.solver);
      run.plan = std::move(r.plan);
      const auto effort = planner::centralized_comm_effort(report.network, r.delta);
      detail::fill(run, report.scenario, base, report.network, effort, "");
      run.metrics.status = run.unmet_demand > kTolerance ? "UnmetDemand" : "Optimal";
      report.runs.push_back(std::move(run));
    }
    if (distributed) {
      protocol::RecoveryConfig rc;
      rc.fallback_to_centralized = cfg.fallback_to_centralized;
      rc.new_lane_cap = cfg.added_edge_cap;
      rc.fallback_penalties = pen;
      rc.solver = cfg.solver;
      auto out = protocol::run_recovery(base.world, cfg.event, rc);
      MethodRun run;
      run.method = Method::Distributed;
      run.plan = std::move(out.plan);
      run.log = std::move(out.log);
      detail::fill(run, report.scenario, base, report.network, run.log.comm_effort(),
                   std::string(protocol::to_string(out.status)));
      report.runs.push_back(std::move(run));
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& ex) {
    throw ScenarioError(report.scenario + ": " + ex.what());
  }
  return report;
}

inline RunReport run_scenario(const ScenarioConfig& cfg) { return run_scenario(cfg, prepare_baseline(cfg)); }

}  // namespace chainflow::scenario
