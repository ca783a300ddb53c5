#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dmd/ids.hpp"

namespace dmd {

/// One agent's message m_i. Keys index exactly the domain of each component;
/// prices and proxies are keyed by the agent they refer to.
struct AgentMessage {
  double y = 0.0;                                     // demanded rate
  std::map<LinkId, double> y_under;                   // group-demand proxy, l in L_i
  std::map<std::pair<AgentId, LinkId>, double> n;     // summaries, j in N(i), every l
  std::map<AgentId, double> q;                        // demand proxy, j in I_i
  std::map<LinkId, double> p1;                        // own link prices, l in L_i
  std::map<std::pair<AgentId, LinkId>, double> p2;    // price proxy, j in I_i, l in L_j
  std::map<LinkId, double> w;                         // group price, l in L_i (+ relayed links)
  std::map<LinkId, double> z1;                        // group max demand, l in C_i
  std::map<LinkId, double> z2;                        // number of maximizers, l in C_i
  std::map<LinkId, double> a1;                        // l in L_i, strictly positive
  std::map<std::pair<AgentId, LinkId>, double> a2;    // proxy of a1, j in I_i, l in L_j

  /// Number of scalar components.
  std::size_t dimension() const;

  bool operator==(const AgentMessage&) const = default;
};

/// Calls fn(key, value&) for every scalar component in a fixed order. Keys
/// use full index paths: "y", "y_under.l1", "n.2.l1", "q.2", "p1.l1",
/// "p2.2.l1", "w.l1", "z1.l1", "z2.l1", "a1.l1", "a2.2.l1".
template <class Msg, class Fn>
void for_each_component(Msg& msg, Fn&& fn) {
  auto link_key = [](const char* name, LinkId l) { return std::string(name) + "." + to_string(l); };
  auto pair_key = [](const char* name, const std::pair<AgentId, LinkId>& jl) {
    return std::string(name) + "." + to_string(jl.first) + "." + to_string(jl.second);
  };
  fn(std::string("y"), msg.y);
  for (auto& [l, v] : msg.y_under) fn(link_key("y_under", l), v);
  for (auto& [jl, v] : msg.n) fn(pair_key("n", jl), v);
  for (auto& [j, v] : msg.q) fn("q." + to_string(j), v);
  for (auto& [l, v] : msg.p1) fn(link_key("p1", l), v);
  for (auto& [jl, v] : msg.p2) fn(pair_key("p2", jl), v);
  for (auto& [l, v] : msg.w) fn(link_key("w", l), v);
  for (auto& [l, v] : msg.z1) fn(link_key("z1", l), v);
  for (auto& [l, v] : msg.z2) fn(link_key("z2", l), v);
  for (auto& [l, v] : msg.a1) fn(link_key("a1", l), v);
  for (auto& [jl, v] : msg.a2) fn(pair_key("a2", jl), v);
}

/// Joint message m = (m_1, ..., m_N), indexed by agent.
class MessageProfile {
 public:
  MessageProfile() = default;
  explicit MessageProfile(std::vector<AgentMessage> messages) : messages_(std::move(messages)) {}

  std::size_t size() const { return messages_.size(); }
  AgentMessage& operator[](AgentId i) { return messages_.at(i.index()); }
  const AgentMessage& operator[](AgentId i) const { return messages_.at(i.index()); }
  const std::vector<AgentMessage>& messages() const { return messages_; }

  bool operator==(const MessageProfile&) const = default;

 private:
  std::vector<AgentMessage> messages_;
};

/// Largest absolute componentwise difference; profiles must share a shape.
double max_abs_diff(const AgentMessage& a, const AgentMessage& b);
double max_abs_diff(const MessageProfile& a, const MessageProfile& b);

}  // namespace dmd
