#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "chainflow/core/io.hpp"
#include "chainflow/planner/centralized.hpp"
#include "chainflow/protocol/recovery.hpp"
#include "support/plan_checks.hpp"
#include "support/protocol_oracles.hpp"
#include "support/random_milp.hpp"
#include "support/toy_networks.hpp"

namespace chainflow::protocol {
namespace {

using agents::Agent;
using testing::Rng;

struct Reference {
  SupplyNetwork net;
  FlowPlan plan;
  World world;
};

const Reference& reference() {
  static const Reference ref = [] {
    auto net = io::load_network(std::string(CHAINFLOW_DATA_DIR) + "/reference_network.json");
    auto plan = planner::plan(net);
    auto world = World::make(net, plan);
    return Reference{std::move(net), std::move(plan), std::move(world)};
  }();
  return ref;
}

AgentId vid(const SupplyNetwork& net, const char* id) { return AgentId::vertex(net.vertex_index(id)); }

using testing::idle_plan;
using testing::responder_agent;
using testing::responder_network;
using testing::ResponderSetup;

// ---------------------------------------------------------------------------
// make_request

TEST(MakeRequest, VertexLossAsksCapabilityPeersForOutboundFlows) {
  const auto& ref = reference();
  const auto& net = ref.net;
  const auto o1 = vid(net, "O1");
  const auto rp = make_request(ref.world.agents.at(o1), VertexLoss{"O1"}, net);
  FlowVector expected;
  for (auto e : net.out_edges(o1.index))
    for (std::size_t k = 0; k < net.num_products(); ++k)
      if (ref.plan.flow(e, k) > 0) expected[{net.edges[e].to, k}] += ref.plan.flow(e, k);
  ASSERT_FALSE(expected.empty());
  EXPECT_EQ(rp.request.amounts, expected);
  EXPECT_EQ(rp.recipients, (std::vector<AgentId>{vid(net, "O2"), vid(net, "O3")}));
}

TEST(MakeRequest, NewDemandGoesUpstream) {
  const auto& ref = reference();
  const auto& net = ref.net;
  const auto c5 = vid(net, "C5");
  const auto patty = net.product_index("BeefPatty");
  const auto rp = make_request(ref.world.agents.at(c5), NewDemand{"C5", "BeefPatty", 20}, net);
  EXPECT_EQ(rp.request.amounts, (FlowVector{{{c5.index, patty}, 20.0}}));
  // C5 is served by D1 and D2.
  EXPECT_EQ(rp.recipients, (std::vector<AgentId>{vid(net, "D1"), vid(net, "D2")}));
  EXPECT_GT(rp.request.penalties.at({c5.index, patty}), 0.0);
}

TEST(MakeRequest, NothingLostMeansNoRequest) {
  const auto net = testing::supplier_customer(0.0, 10.0);
  const auto plan = planner::plan(net);
  const auto agents = agents::init_agents(net, plan);
  const auto rp = make_request(agents.at(AgentId::vertex(0)), VertexLoss{"S"}, net);
  EXPECT_TRUE(rp.request.amounts.empty());
  EXPECT_TRUE(rp.recipients.empty());
}

TEST(MakeRequest, OtherAgentsEventIsIgnored) {
  const auto& ref = reference();
  const auto rp = make_request(ref.world.agents.at(vid(ref.net, "O2")), VertexLoss{"O1"}, ref.net);
  EXPECT_TRUE(rp.request.amounts.empty());
}

// ---------------------------------------------------------------------------
// compute_response

Request two_product_request(double p, double q, double wp = 300, double wq = 200) {
  Request req;
  req.amounts[{1, 1}] = p;
  req.amounts[{1, 2}] = q;
  req.penalties[{1, 1}] = wp;
  req.penalties[{1, 2}] = wq;
  return req;
}

TEST(ComputeResponse, AmpleCapacityOffersEverything) {
  ResponderSetup s;
  s.q[0] = s.q[1] = 100;
  s.spare_p = s.spare_q = 20;
  const auto net = responder_network(s);
  const auto req = two_product_request(6, 4);
  const auto resp = compute_response(responder_agent(net), req);
  EXPECT_EQ(resp.offered, req.amounts);
  EXPECT_DOUBLE_EQ(l1_gap(req, resp.offered), 0.0);
}

TEST(ComputeResponse, ClosedLaneOffersNothing) {
  ResponderSetup s;
  s.q[0] = 0;
  s.q[1] = 100;
  s.spare_p = s.spare_q = 20;
  const auto net = responder_network(s);
  const auto resp = compute_response(responder_agent(net), two_product_request(6, 4));
  EXPECT_TRUE(resp.offered.empty());
}

TEST(ComputeResponse, SharedLaneCapacityFollowsPenaltyOrder) {
  ResponderSetup s;
  s.q[0] = 7;
  s.spare_p = s.spare_q = 20;
  const auto net = responder_network(s);
  const auto agent = responder_agent(net);

  auto req = two_product_request(6, 4, 300, 200);
  auto resp = compute_response(agent, req);
  EXPECT_DOUBLE_EQ(total(resp.offered), 7.0);
  EXPECT_DOUBLE_EQ(l1_gap(req, resp.offered), 3.0);
  EXPECT_DOUBLE_EQ(resp.offered.at({1, 1}), 6.0);
  EXPECT_DOUBLE_EQ(resp.offered.at({1, 2}), 1.0);

  req = two_product_request(6, 4, 200, 300);
  resp = compute_response(agent, req);
  EXPECT_DOUBLE_EQ(resp.offered.at({1, 1}), 3.0);
  EXPECT_DOUBLE_EQ(resp.offered.at({1, 2}), 4.0);
}

TEST(ComputeResponse, ProductionLimitedByComponentsAndLine) {
  ResponderSetup s;
  s.q[0] = 100;
  s.spare_p = 2;
  s.spare_a = 3;
  s.line = 10;
  const auto net = responder_network(s);
  const auto req = two_product_request(6, 4);
  const auto resp = compute_response(responder_agent(net), req);
  // 2 from stock plus 3 made from the 3 units of A.
  EXPECT_DOUBLE_EQ(total(resp.offered), 5.0);
  EXPECT_DOUBLE_EQ(resp.offered.at({1, 1}), 5.0);
}

TEST(ComputeResponse, QuotesComeFromTheLane) {
  ResponderSetup s;
  s.q[0] = 100;
  s.spare_p = 10;
  const auto net = responder_network(s);
  const auto resp = compute_response(responder_agent(net), two_product_request(6, 0));
  const auto& q = resp.quotes.at({1, 1});
  EXPECT_TRUE(q.new_lane);
  EXPECT_DOUBLE_EQ(q.fixed_cost, 5.0);
  EXPECT_DOUBLE_EQ(q.unit_cost, 1.0);
  EXPECT_DOUBLE_EQ(q.prior_flow, 0.0);
}

TEST(ComputeResponse, UnavailableAgentOffersNothing) {
  ResponderSetup s;
  s.q[0] = 100;
  s.spare_p = 10;
  const auto net = responder_network(s);
  auto agent = responder_agent(net);
  agent.available = false;
  EXPECT_TRUE(compute_response(agent, two_product_request(6, 4)).offered.empty());
}

// Exhaustive search over whole-unit offers.
TEST(ComputeResponse, MatchesEnumeratedMinimalGap) {
  Rng rng(2024);
  int binding = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = testing::compute_response_trial(rng);
    EXPECT_EQ(r.problem, "") << "trial " << trial;
    binding += r.binding;
  }
  EXPECT_GE(binding, 10);
}

// ---------------------------------------------------------------------------
// select_allocation

Offer make_offer(std::size_t responder, const FlowVector& amounts, double unit_cost, bool new_lane = false,
                 double fixed = 0.0) {
  Offer o{AgentId::vertex(responder), {}};
  for (const auto& [key, a] : amounts) {
    o.response.offered[key] = a;
    o.response.quotes[key] = Quote{unit_cost, new_lane ? fixed : 0.0, new_lane, 0.0};
  }
  return o;
}

TEST(SelectAllocation, SingleExactOffer) {
  Request req;
  req.amounts[{5, 0}] = 10;
  req.penalties[{5, 0}] = 100;
  const auto alloc = select_allocation(req, {make_offer(1, req.amounts, 2.0)});
  ASSERT_EQ(alloc.flows.size(), 1u);
  EXPECT_EQ(alloc.flows.at(AgentId::vertex(1)), req.amounts);
  // Cost 2 per unit plus the new-flow term 1 per unit.
  EXPECT_NEAR(alloc.objective, 30.0, 1e-9);
}

TEST(SelectAllocation, CheaperResponderWins) {
  Request req;
  req.amounts[{5, 0}] = 10;
  req.penalties[{5, 0}] = 100;
  const auto alloc = select_allocation(req, {make_offer(1, req.amounts, 3.0), make_offer(2, req.amounts, 2.0)});
  ASSERT_EQ(alloc.flows.size(), 1u);
  EXPECT_EQ(alloc.flows.count(AgentId::vertex(2)), 1u);
}

TEST(SelectAllocation, CostTieGoesToLowerId) {
  Request req;
  req.amounts[{5, 0}] = 10;
  req.penalties[{5, 0}] = 100;
  const auto alloc = select_allocation(req, {make_offer(4, req.amounts, 2.0), make_offer(3, req.amounts, 2.0)});
  ASSERT_EQ(alloc.flows.size(), 1u);
  EXPECT_EQ(alloc.flows.at(AgentId::vertex(3)), req.amounts);
}

TEST(SelectAllocation, NoOffersLeavesEverythingUnmet) {
  Request req;
  req.amounts[{5, 0}] = 4;
  req.penalties[{5, 0}] = 9;
  const auto alloc = select_allocation(req, {});
  EXPECT_TRUE(alloc.flows.empty());
  EXPECT_DOUBLE_EQ(alloc.objective, 40.0);
}

TEST(SelectAllocation, LaneCapLimitsNewLanes) {
  Request req;
  req.amounts[{5, 0}] = 10;
  req.penalties[{5, 0}] = 100;
  AllocationOptions opt;
  opt.new_lane_cap = 1;
  const auto alloc = select_allocation(
      req, {make_offer(1, {{{5, 0}, 5.0}}, 1.0, true, 1.0), make_offer(2, {{{5, 0}, 5.0}}, 1.0, true, 1.0)}, opt);
  EXPECT_EQ(alloc.flows.size(), 1u);
  EXPECT_DOUBLE_EQ(total(alloc.aggregate()), 5.0);
}

// Brute force over whole-unit allocations for two responders and two
// products towards one target.
TEST(SelectAllocation, MatchesGridOracle) {
  Rng rng(77);
  int split = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = testing::select_allocation_trial(rng);
    EXPECT_EQ(r.problem, "") << "trial " << trial;
    split += r.binding;
  }
  EXPECT_GE(split, 5);
}

// ---------------------------------------------------------------------------
// propagate

TEST(Propagate, ProductionWithoutSlackOrdersEveryComponent) {
  const auto& ref = reference();
  const auto& net = ref.net;
  const auto o2 = vid(net, "O2");
  const auto patty = net.product_index("BeefPatty");
  const auto& agent = ref.world.agents.at(o2);
  ASSERT_TRUE(agent.state.inventory.empty() || agent.state.inventory.at(patty) == 0.0);
  const auto sp = propagate(agent, {{{net.vertex_index("D1"), patty}, 10.0}});
  EXPECT_TRUE(sp.from_inventory.empty());
  EXPECT_EQ(sp.production, (agents::Quantities{{patty, 10.0}}));
  FlowVector expected;
  for (const char* c : {"RawBeef", "Seasoning", "Package0"}) expected[{o2.index, net.product_index(c)}] = 10.0;
  EXPECT_EQ(sp.upstream.amounts, expected);
  for (const auto& [to, req] : sp.requests)
    for (const auto& [key, amount] : req.amounts) EXPECT_TRUE(agent.environment.upstream.at(key.product).contains(to));
  std::set<AgentId> recipients;
  for (const auto& [to, req] : sp.requests) recipients.insert(to);
  // Seven suppliers make RawBeef, Seasoning or Package0.
  EXPECT_EQ(recipients.size(), 7u);
}

TEST(Propagate, InventoryCoversAllocation) {
  ResponderSetup s;
  s.q[0] = 100;
  s.spare_p = 10;
  s.line = 10;
  const auto net = responder_network(s);
  const auto sp = propagate(responder_agent(net), {{{1, 1}, 6.0}});
  EXPECT_EQ(sp.from_inventory, (agents::Quantities{{1, 6.0}}));
  EXPECT_TRUE(sp.production.empty());
  EXPECT_TRUE(sp.requests.empty());
}

// ---------------------------------------------------------------------------
// run_recovery

// O1 serves C on its own; the backup O2 has a small line.
SupplyNetwork weak_backup() {
  SupplyNetwork net({{"P", "Product"}},
                    {{"O1", EntityKind::OEM}, {"O2", EntityKind::OEM}, {"C", EntityKind::Customer}});
  net.vertices[0].production_capacity = 50;
  net.vertices[1].production_capacity = 5;
  net.set_production(0, 0, 1.0);
  net.set_production(1, 0, 5.0);
  net.demand(2, 0) = 20;
  net.shortfall_penalty(2, 0) = 100;
  net.add_edge(0, 2, 1.0, 50.0, {{0, 1.0}});
  net.add_edge(1, 2, 1.0, 50.0, {{0, 1.0}});
  return net;
}

TEST(RunRecovery, T4LossMovesToPeerOverOneNewLane) {
  const auto& ref = reference();
  const auto& net = ref.net;
  const auto out = run_recovery(ref.world, VertexLoss{"T4"});
  EXPECT_EQ(out.status, RecoveryStatus::Recovered);
  EXPECT_TRUE(out.unrecovered.empty());
  const auto d = plan_delta(ref.plan, out.plan, out.disrupted);
  EXPECT_EQ(d.added_edges, 1u);
  EXPECT_EQ(d.changed_flows, 0u);
  EXPECT_EQ(out.log.size(), 3u);
  EXPECT_EQ(testing::plan_problems(out.disrupted, out.plan), "");

  // Only T4, its Seasoning peers and OEMs take part.
  const auto& t4 = ref.world.agents.at(vid(net, "T4"));
  auto allowed = agents::same_capability_peers(t4, {agents::CapabilityKind::Production, net.product_index("Seasoning")});
  allowed.insert(t4.id);
  for (const char* o : {"O1", "O2", "O3"}) allowed.insert(vid(net, o));
  for (auto id : out.log.participants()) {
    if (!id.is_vertex()) continue;
    EXPECT_TRUE(allowed.contains(id)) << net.vertices[id.index].id;
  }
}

TEST(RunRecovery, UnusedEdgeLossIsSilent) {
  const auto& ref = reference();
  const auto& net = ref.net;
  std::size_t unused = npos;
  for (std::size_t e = 0; e < net.num_edges() && unused == npos; ++e)
    if (!ref.plan.edge_used[e]) unused = e;
  ASSERT_NE(unused, npos);
  const auto& ed = net.edges[unused];
  const auto out =
      run_recovery(ref.world, EdgeLoss{{{net.vertices[ed.from].id, net.vertices[ed.to].id}}});
  EXPECT_EQ(out.status, RecoveryStatus::Recovered);
  EXPECT_TRUE(out.log.empty());
  EXPECT_EQ(out.plan.flow, ref.plan.flow);
  EXPECT_EQ(out.plan.produced, ref.plan.produced);
}

TEST(RunRecovery, InsufficientPeerFallsBackOrStaysPartial) {
  const auto net = weak_backup();
  const auto world = World::make(net, planner::plan(net));
  ASSERT_DOUBLE_EQ(world.plan.flow(0, 0), 20.0);

  auto out = run_recovery(world, VertexLoss{"O1"});
  EXPECT_EQ(out.status, RecoveryStatus::FellBackToCentralized);
  EXPECT_NEAR(out.unrecovered.at(0), 15.0, 1e-9);
  EXPECT_EQ(out.log.count("FallbackRequest"), 1u);
  EXPECT_EQ(testing::plan_problems(out.disrupted, out.plan), "");

  RecoveryConfig cfg;
  cfg.fallback_to_centralized = false;
  out = run_recovery(world, VertexLoss{"O1"}, cfg);
  EXPECT_EQ(out.status, RecoveryStatus::PartiallyRecovered);
  EXPECT_NEAR(out.plan.flow(1, 0), 5.0, 1e-9);
  EXPECT_NEAR(testing::total_shortfall(out.plan), 15.0, 1e-9);
  EXPECT_EQ(out.log.count("FallbackRequest"), 0u);
  EXPECT_EQ(testing::plan_problems(out.disrupted, out.plan), "");
}

TEST(RunRecovery, IsDeterministic) {
  const auto& ref = reference();
  for (const char* v : {"O1", "T4"}) {
    const auto a = run_recovery(ref.world, VertexLoss{v});
    const auto b = run_recovery(ref.world, VertexLoss{v});
    EXPECT_EQ(to_json_lines(ref.net, a.log), to_json_lines(ref.net, b.log));
    EXPECT_EQ(a.plan.flow, b.plan.flow);
    EXPECT_EQ(a.plan.produced, b.plan.produced);
  }
}

// Every sequence number increases, every reply points back at the right kind
// of message, and no reply exceeds what it answers.
std::string log_problems(const MessageLog& log) {
  std::string out;
  const auto& ms = log.messages();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto& m = ms[i];
    if (m.seq != i + 1) out += "bad seq; ";
    auto answers = [&](std::size_t kind) -> const Message* {
      if (!m.reply_to || *m.reply_to >= m.seq) return nullptr;
      const auto& r = ms[*m.reply_to - 1];
      return r.payload.index() == kind && r.to == m.from && m.to == r.from ? &r : nullptr;
    };
    if (const auto* resp = std::get_if<Response>(&m.payload)) {
      const auto* req = answers(0);
      if (!req) {
        out += "response without request; ";
        continue;
      }
      for (const auto& [key, a] : resp->offered)
        if (a > std::get<Request>(req->payload).amounts.at(key) + kTolerance) out += "response too large; ";
    } else if (const auto* inf = std::get_if<Inform>(&m.payload)) {
      const auto* resp = answers(1);
      if (!resp) {
        out += "inform without response; ";
        continue;
      }
      for (const auto& [key, a] : inf->accepted)
        if (a > std::get<Response>(resp->payload).offered.at(key) + kTolerance) out += "inform too large; ";
    }
  }
  return out;
}

TEST(RunRecovery, RandomNetworksKeepLogsAndPlansValid) {
  Rng rng(31);
  int recovered = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const auto net = testing::random_layered(rng, 3, 2, 3);
    const auto world = World::make(net, planner::plan(net));
    std::vector<DisruptionEvent> events;
    events.push_back(VertexLoss{net.vertices[rng.integer(0, 4)].id});
    events.push_back(NewDemand{net.vertices[rng.integer(5, 7)].id, "P", double(rng.integer(1, 10))});
    for (std::size_t e = 0; e < net.num_edges(); ++e)
      if (world.plan.edge_used[e] && rng.chance(0.3)) {
        events.push_back(EdgeLoss{{{net.vertices[net.edges[e].from].id, net.vertices[net.edges[e].to].id}}});
        break;
      }
    for (const auto& ev : events) {
      for (bool fallback : {true, false}) {
        RecoveryConfig cfg;
        cfg.fallback_to_centralized = fallback;
        const auto out = run_recovery(world, ev, cfg);
        EXPECT_EQ(log_problems(out.log), "") << trial << " " << describe(ev);
        EXPECT_EQ(testing::plan_problems(out.disrupted, out.plan), "") << trial << " " << describe(ev);
        EXPECT_EQ(out.status == RecoveryStatus::Recovered, out.unrecovered.empty());
        recovered += out.status == RecoveryStatus::Recovered;
      }
    }
  }
  EXPECT_GT(recovered, 0);
}

// ---------------------------------------------------------------------------
// Message log and communication effort

TEST(MessageLog, CountsEveryExchange) {
  MessageLog log;
  EXPECT_EQ(comm_effort(log), 0u);
  const auto d = AgentId::vertex(0), p1 = AgentId::vertex(1), p2 = AgentId::vertex(2);
  Request req;
  req.amounts[{3, 0}] = 5;
  const auto r1 = log.send_request(d, p1, req);
  const auto r2 = log.send_request(d, p2, req);
  Response resp;
  resp.offered[{3, 0}] = 5;
  const auto s1 = log.send_response(p1, r1, resp);
  const auto s2 = log.send_response(p2, r2, resp);
  log.send_inform(d, s1, Inform{{{{3, 0}, 5.0}}});
  EXPECT_EQ(comm_effort(log), 5u);
  log.send_inform(d, s2, Inform{});
  EXPECT_EQ(comm_effort(log), 6u);
  log.send_fallback(d, FallbackRequest{"test", 47});
  EXPECT_EQ(comm_effort(log), 6u + 48u);
  EXPECT_EQ(log.count("Request"), 2u);
  EXPECT_EQ(log.participants(), (std::set<AgentId>{d, p1, p2}));
}

TEST(MessageLog, RejectsMalformedReplies) {
  MessageLog log;
  const auto d = AgentId::vertex(0), p = AgentId::vertex(1);
  Request req;
  req.amounts[{3, 0}] = 5;
  const auto r = log.send_request(d, p, req);
  Response too_much;
  too_much.offered[{3, 0}] = 6;
  EXPECT_THROW(log.send_response(p, r, too_much), ProtocolViolation);
  Response foreign;
  foreign.offered[{4, 0}] = 1;
  EXPECT_THROW(log.send_response(p, r, foreign), ProtocolViolation);
  Response ok;
  ok.offered[{3, 0}] = 2;
  EXPECT_THROW(log.send_response(d, r, ok), ProtocolViolation);
  const auto s = log.send_response(p, r, ok);
  EXPECT_THROW(log.send_inform(d, s, Inform{{{{3, 0}, 3.0}}}), ProtocolViolation);
  EXPECT_THROW(log.send_inform(d, r, Inform{}), ProtocolViolation);
  EXPECT_THROW(log.send_request(d, p, Request{{{{3, 0}, -1.0}}, {}}), ProtocolViolation);
}

TEST(MessageLog, JsonLinesExport) {
  const auto& ref = reference();
  const auto out = run_recovery(ref.world, VertexLoss{"T4"});
  const auto text = to_json_lines(ref.net, out.log);
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("seq").get<std::size_t>(), ++n);
    EXPECT_TRUE(j.contains("type") && j.contains("from") && j.contains("to") && j.contains("payload"));
  }
  EXPECT_EQ(n, out.log.size());
  EXPECT_NE(text.find("\"from\":\"T4\""), std::string::npos);
}

}  // namespace
}  // namespace chainflow::protocol
