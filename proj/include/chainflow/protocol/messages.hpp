#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "chainflow/agents/agent.hpp"

namespace chainflow::protocol {

using agents::AgentId;

class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

// Flow vectors are indexed by (receiving vertex, product).
struct FlowKey {
  std::size_t target = 0;
  std::size_t product = 0;
  friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
};

using FlowVector = std::map<FlowKey, double>;

inline double total(const FlowVector& v) {
  double s = 0.0;
  for (const auto& [key, amount] : v) s += amount;
  return s;
}

struct Request {
  FlowVector amounts;    // y_d
  FlowVector penalties;  // unit shortfall penalty per entry
};

// Terms the responder attaches to each offered entry.
struct Quote {
  double unit_cost = 0.0;   // c on the responder's lane
  double fixed_cost = 0.0;  // f, charged only if the lane is not in use yet
  bool new_lane = false;
  double prior_flow = 0.0;
};

struct Response {
  FlowVector offered;  // y-bar
  std::map<FlowKey, Quote> quotes;
};

struct Inform {
  FlowVector accepted;
};

struct FallbackRequest {
  std::string reason;
  std::size_t centralized_effort = 0;
};

using Payload = std::variant<Request, Response, Inform, FallbackRequest>;

struct Message {
  std::size_t seq = 0;
  AgentId from;
  std::optional<AgentId> to;        // empty for the centralized planner
  std::optional<std::size_t> reply_to;  // seq of the referenced message
  Payload payload;

  std::string_view type() const {
    static constexpr std::string_view names[] = {"Request", "Response", "Inform", "FallbackRequest"};
    return names[payload.index()];
  }
};

// Append-only transcript. Every message is validated against the one it
// answers, so a log that exists is a well-formed conversation.
class MessageLog {
 public:
  const std::vector<Message>& messages() const { return messages_; }
  std::size_t size() const { return messages_.size(); }
  bool empty() const { return messages_.empty(); }

  std::size_t send_request(AgentId from, AgentId to, Request req) {
    for (const auto& [key, a] : req.amounts)
      if (!(a >= 0.0)) throw ProtocolViolation("request amounts must be non-negative");
    return append(from, to, std::nullopt, std::move(req));
  }

  std::size_t send_response(AgentId from, std::size_t request_seq, Response resp) {
    const auto& req = referenced(request_seq, 0, from);
    const auto& asked = std::get<Request>(req.payload).amounts;
    for (const auto& [key, a] : resp.offered) {
      auto it = asked.find(key);
      if (it == asked.end()) throw ProtocolViolation("response offers an entry that was not requested");
      if (a < 0.0 || a > it->second + kTolerance) throw ProtocolViolation("response exceeds the request");
    }
    return append(from, req.from, request_seq, std::move(resp));
  }

  std::size_t send_inform(AgentId from, std::size_t response_seq, Inform inf) {
    const auto& resp = referenced(response_seq, 1, from);
    const auto& offered = std::get<Response>(resp.payload).offered;
    for (const auto& [key, a] : inf.accepted) {
      auto it = offered.find(key);
      if (it == offered.end()) throw ProtocolViolation("inform accepts an entry that was not offered");
      if (a < 0.0 || a > it->second + kTolerance) throw ProtocolViolation("inform exceeds the offer");
    }
    return append(from, resp.from, response_seq, std::move(inf));
  }

  std::size_t send_fallback(AgentId from, FallbackRequest fb) {
    return append(from, std::nullopt, std::nullopt, std::move(fb));
  }

  // Request, Response and Inform count once each; a fallback counts once
  // plus the centralized planner's own exchanges.
  std::size_t comm_effort() const {
    std::size_t n = 0;
    for (const auto& m : messages_) {
      if (const auto* fb = std::get_if<FallbackRequest>(&m.payload))
        n += 1 + fb->centralized_effort;
      else
        ++n;
    }
    return n;
  }

  std::size_t count(std::string_view type) const {
    std::size_t n = 0;
    for (const auto& m : messages_) n += m.type() == type;
    return n;
  }

  // Every agent that sent or received a message.
  std::set<AgentId> participants() const {
    std::set<AgentId> out;
    for (const auto& m : messages_) {
      out.insert(m.from);
      if (m.to) out.insert(*m.to);
    }
    return out;
  }

 private:
  const Message& referenced(std::size_t seq, std::size_t kind, AgentId responder) const {
    if (seq == 0 || seq > messages_.size()) throw ProtocolViolation("reference to an unknown message");
    const auto& m = messages_[seq - 1];
    if (m.payload.index() != kind) throw ProtocolViolation("reference to a message of the wrong type");
    if (m.to != responder) throw ProtocolViolation("reply from an agent that was not addressed");
    return m;
  }

  std::size_t append(AgentId from, std::optional<AgentId> to, std::optional<std::size_t> reply_to, Payload p) {
    Message m;
    m.seq = messages_.size() + 1;
    m.from = from;
    m.to = to;
    m.reply_to = reply_to;
    m.payload = std::move(p);
    messages_.push_back(std::move(m));
    return messages_.back().seq;
  }

  std::vector<Message> messages_;
};

inline std::size_t comm_effort(const MessageLog& log) { return log.comm_effort(); }

// ---------------------------------------------------------------------------
// Export

inline std::string agent_label(const SupplyNetwork& net, AgentId id) {
  return id.is_vertex() ? net.vertices.at(id.index).id : "edge:" + net.edge_label(id.index);
}

inline nlohmann::ordered_json message_to_json(const SupplyNetwork& net, const Message& m) {
  using Json = nlohmann::ordered_json;
  auto entry = [&](const FlowKey& key, double amount) {
    Json e;
    e["target"] = net.vertices.at(key.target).id;
    e["product"] = net.products.at(key.product).id;
    e["amount"] = amount;
    return e;
  };
  Json payload;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Request>) {
          payload = Json::array();
          for (const auto& [key, a] : p.amounts) {
            auto e = entry(key, a);
            auto w = p.penalties.find(key);
            e["penalty"] = w == p.penalties.end() ? 0.0 : w->second;
            payload.push_back(e);
          }
        } else if constexpr (std::is_same_v<T, Response>) {
          payload = Json::array();
          for (const auto& [key, a] : p.offered) {
            auto e = entry(key, a);
            const auto& q = p.quotes.at(key);
            e["unit_cost"] = q.unit_cost;
            e["fixed_cost"] = q.fixed_cost;
            e["new_lane"] = q.new_lane;
            e["prior_flow"] = q.prior_flow;
            payload.push_back(e);
          }
        } else if constexpr (std::is_same_v<T, Inform>) {
          payload = Json::array();
          for (const auto& [key, a] : p.accepted) payload.push_back(entry(key, a));
        } else {
          payload["reason"] = p.reason;
          payload["centralized_effort"] = p.centralized_effort;
        }
      },
      m.payload);
  Json j;
  j["seq"] = m.seq;
  j["type"] = m.type();
  j["from"] = agent_label(net, m.from);
  j["to"] = m.to ? agent_label(net, *m.to) : std::string("planner");
  if (m.reply_to) j["reply_to"] = *m.reply_to;
  j["payload"] = payload;
  return j;
}

// One JSON object per line.
inline std::string to_json_lines(const SupplyNetwork& net, const MessageLog& log) {
  std::ostringstream out;
  for (const auto& m : log.messages()) out << message_to_json(net, m).dump() << '\n';
  return out.str();
}

}  // namespace chainflow::protocol
