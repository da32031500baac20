// chainflow: plan a supply network, inject disruptions and compare the
// centralized re-plan against the agent negotiation.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "chainflow/core/io.hpp"
#include "chainflow/scenario/report.hpp"

namespace {

using namespace chainflow;
using scenario::ScenarioConfig;

struct Options {
  std::string network = std::string(scenario::kBuiltinCaseStudy);
  std::uint64_t seed = 10;
  std::string scenario;
  std::string method;
  std::optional<std::size_t> ea_cap;
  double rho_e_scale = 1.0;
  std::string out;
  std::string format = "csv";
  bool no_fallback = false;
};

void add_network_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--network", o.network, "Network file, or 'case-study' for the generated network")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed for the generated case-study network")->capture_default_str();
}

void add_scenario_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--ea-cap", o.ea_cap, "Cap on added edges (per allocation for the distributed method)");
  cmd->add_option("--rho-e-scale", o.rho_e_scale, "Factor applied to every edge change penalty")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--no-fallback", o.no_fallback, "Keep partial distributed recoveries instead of re-planning");
}

ScenarioConfig base_config(const Options& o) {
  ScenarioConfig cfg;
  cfg.network = o.network;
  cfg.seed = o.seed;
  cfg.added_edge_cap = o.ea_cap;
  cfg.rho_e_scale = o.rho_e_scale;
  cfg.fallback_to_centralized = !o.no_fallback;
  return cfg;
}

ScenarioConfig named(ScenarioConfig cfg, const std::string& name) {
  const auto all = scenario::available_scenarios(cfg);
  auto it = all.find(name);
  if (it == all.end()) {
    std::string known;
    for (const auto& [n, ev] : all) known += (known.empty() ? "" : ", ") + n;
    throw scenario::ScenarioError("unknown scenario '" + name + "' (available: " + known + ")");
  }
  cfg.name = name;
  cfg.event = it->second;
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  scenario::detail::write_file(path, text);
}

int cmd_plan(const Options& o) {
  auto cfg = base_config(o);
  const auto base = scenario::prepare_baseline(cfg);
  const auto cost = total_cost(base.net, base.plan);
  std::cerr << "total cost " << cost.total << ", shortfall units ";
  double shortfall = 0.0;
  for (double v : base.plan.shortfall.values()) shortfall += v;
  std::cerr << shortfall << "\n";
  emit(o.out, io::plan_to_json(base.net, base.plan).dump(2) + "\n");
  return 0;
}

int cmd_disrupt(const Options& o) {
  auto cfg = named(base_config(o), o.scenario);
  cfg.method = scenario::parse_method_selection(o.method.empty() ? "distributed" : o.method);
  const auto report = scenario::run_scenario(cfg);
  std::cout << scenario::to_text(report.rows());
  if (!o.out.empty()) {
    io::Json j;
    j["scenario"] = report.scenario;
    j["event"] = io::event_to_json(cfg.event);
    j["runs"] = io::Json::array();
    for (const auto& run : report.runs) {
      io::Json r;
      r["method"] = run.metrics.method;
      r["status"] = run.metrics.status;
      r["metrics"] = {{"C_f", run.metrics.C_f}, {"C_p", run.metrics.C_p}, {"E_a", run.metrics.E_a},
                      {"F_c", run.metrics.F_c}, {"C_e", run.metrics.C_e}};
      r["total_cost"] = run.cost.total;
      r["unmet_demand"] = run.unmet_demand;
      r["plan"] = io::plan_to_json(report.network, run.plan);
      r["messages"] = io::Json::array();
      for (const auto& m : run.log.messages()) r["messages"].push_back(protocol::message_to_json(report.network, m));
      j["runs"].push_back(std::move(r));
    }
    emit(o.out, j.dump(2) + "\n");
  }
  return 0;
}

std::vector<scenario::RunReport> run_all(const Options& o) {
  auto cfg = base_config(o);
  cfg.method = scenario::parse_method_selection(o.method.empty() ? "both" : o.method);
  std::vector<std::string> names;
  if (!o.scenario.empty()) {
    names.push_back(o.scenario);
  } else {
    for (const auto& [name, ev] : scenario::available_scenarios(cfg)) names.push_back(name);
  }
  const auto base = scenario::prepare_baseline(cfg);
  std::vector<scenario::RunReport> reports;
  for (const auto& n : names) reports.push_back(scenario::run_scenario(named(cfg, n), base));
  return reports;
}

int cmd_compare(const Options& o) {
  const auto files = scenario::comparison_files(run_all(o));
  std::cout << files.at("metrics.txt");
  scenario::write_files(o.out.empty() ? "compare_out" : o.out, files);
  return 0;
}

int cmd_export(const Options& o) {
  if (o.format == "network") {
    auto cfg = base_config(o);
    const auto net = scenario::load_scenario_network(cfg);
    io::Json j;
    if (cfg.network == scenario::kBuiltinCaseStudy) {
      j["description"] = "Reconstructed case-study network (generated from seed " + std::to_string(o.seed) +
                         " with the default ranges); all numbers are synthetic.";
      j["seed"] = o.seed;
    }
    const auto body = io::network_to_json(net);
    for (const auto& [k, v] : body.items()) j[k] = v;
    j["scenarios"] = io::Json::object();
    for (const auto& [name, ev] : scenario::available_scenarios(cfg)) j["scenarios"][name] = io::event_to_json(ev);
    emit(o.out, j.dump(2) + "\n");
    return 0;
  }
  const auto reports = run_all(o);
  if (o.format == "csv" || o.format == "text") {
    std::vector<scenario::MetricsRow> rows;
    for (const auto& r : reports)
      for (const auto& row : r.rows()) rows.push_back(row);
    emit(o.out, scenario::render_report(rows, scenario::parse_report_format(o.format)));
    return 0;
  }
  if (reports.size() != 1) throw scenario::ScenarioError("--format " + o.format + " needs a single --scenario");
  const auto method = scenario::parse_method(o.method.empty() ? "distributed" : o.method);
  if (o.format == "dot") {
    emit(o.out, scenario::flow_diff_dot(reports[0], method));
  } else if (o.format == "log") {
    emit(o.out, protocol::to_json_lines(reports[0].network, reports[0].run(method).log));
  } else {
    throw scenario::ScenarioError("unknown export format '" + o.format + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supply network disruption recovery: centralized re-planning and agent negotiation"};
  app.require_subcommand(1);
  Options o;

  auto* plan = app.add_subcommand("plan", "Solve the base plan and print it as JSON");
  add_network_options(plan, o);
  plan->add_option("--out", o.out, "Output file (default: stdout)");

  auto* disrupt = app.add_subcommand("disrupt", "Apply a disruption and recover with one method");
  add_network_options(disrupt, o);
  add_scenario_options(disrupt, o);
  disrupt->add_option("--scenario", o.scenario, "Scenario name (C5, T4, O1 or one from the network file)")
      ->required();
  disrupt->add_option("--method", o.method, "centralized, distributed or both")
      ->check(CLI::IsMember({"centralized", "distributed", "both"}));
  disrupt->add_option("--out", o.out, "Write runs, plans and transcripts as JSON");

  auto* compare = app.add_subcommand("compare", "Run both methods and write metrics, flow diffs and transcripts");
  add_network_options(compare, o);
  add_scenario_options(compare, o);
  compare->add_option("--scenario", o.scenario, "Scenario name (default: all)");
  compare->add_option("--method", o.method, "centralized, distributed or both")
      ->check(CLI::IsMember({"centralized", "distributed", "both"}));
  compare->add_option("--out", o.out, "Output directory (default: compare_out)");

  auto* exp = app.add_subcommand("export", "Write one artifact: metrics table, flow diff, transcript or network");
  add_network_options(exp, o);
  add_scenario_options(exp, o);
  exp->add_option("--scenario", o.scenario, "Scenario name (default: all, for csv and text)");
  exp->add_option("--method", o.method, "Method for dot and log output")
      ->check(CLI::IsMember({"centralized", "distributed", "both"}));
  exp->add_option("--format", o.format, "csv, text, dot, log or network")
      ->check(CLI::IsMember({"csv", "text", "dot", "log", "network"}))
      ->capture_default_str();
  exp->add_option("--out", o.out, "Output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*plan) return cmd_plan(o);
    if (*disrupt) return cmd_disrupt(o);
    if (*compare) return cmd_compare(o);
    return cmd_export(o);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
