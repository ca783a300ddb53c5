#pragma once

// Shared fixtures, random instance generation and test-side reference
// computations. Nothing here calls the library's solver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dmd/game.hpp"
#include "dmd/mechanism.hpp"
#include "dmd/message_graph.hpp"
#include "dmd/network.hpp"
#include "dmd/oracle.hpp"

namespace dmd::test {

inline AgentId A(int v) { return AgentId{v}; }
inline GroupId G(int v) { return GroupId{v}; }
inline LinkId L(int v) { return LinkId{v}; }

struct Instance {
  std::string name;
  MulticastNetwork net;
  UndirectedGraph message_network;
  Variant variant = Variant::Base;
};

inline Instance make_instance(std::string name, const std::vector<int>& groups,
                              const std::vector<double>& alphas,
                              const std::vector<std::pair<double, std::vector<int>>>& links,
                              const std::vector<std::pair<int, int>>& edges,
                              Variant variant = Variant::Base) {
  std::vector<Agent> agents;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    agents.push_back({A(static_cast<int>(k) + 1), G(groups[k]), {ValuationFamily::LogLinear, alphas[k]}});
  }
  std::vector<Link> ls;
  std::map<LinkId, std::set<AgentId>> usage;
  for (std::size_t k = 0; k < links.size(); ++k) {
    const LinkId id = L(static_cast<int>(k) + 1);
    ls.push_back({id, links[k].first});
    for (int u : links[k].second) usage[id].insert(A(u));
  }
  UndirectedGraph g{groups.size(), {}};
  for (auto [a, b] : edges) g.edges.emplace_back(A(a), A(b));
  return {std::move(name), MulticastNetwork(agents, ls, usage), g, variant};
}

inline Instance sym2() {
  return make_instance("sym2", {1, 2}, {1.0, 1.0}, {{2.0, {1, 2}}}, {{1, 2}});
}

inline Instance duo4() {
  return make_instance("duo4", {1, 1, 2, 2}, {1.0, 2.0, 1.0, 3.0}, {{3.0, {1, 2, 3, 4}}},
                       {{1, 2}, {2, 3}, {3, 4}});
}

// Users of l2 are the two path ends, so only the relaxed assumption holds.
inline Instance relay5() {
  return make_instance("relay5", {1, 1, 2, 3, 3}, {1.0, 2.0, 1.0, 2.0, 3.0},
                       {{4.0, {1, 2, 3, 4, 5}}, {1.0, {1, 5}}}, {{1, 2}, {2, 3}, {3, 4}, {4, 5}},
                       Variant::Relay);
}

inline MessageGraph default_graph(const Instance& inst) {
  return assign_phi_and_centers(inst.net, build_spanning_tree(inst.message_network, A(1)));
}

inline Mechanism make_mechanism(const Instance& inst) {
  return Mechanism(inst.net, default_graph(inst), inst.variant);
}

// Closed-form optimum for a single link: every member of group k receives
// b_k, and b maximizes sum_k A_k ln(1 + b_k) on the capacity simplex, with
// A_k the sum of the group's alphas. Water-filling over the active set.
struct SingleLinkOptimum {
  std::vector<double> x;
  std::map<GroupId, double> b;
  double lambda = 0.0;
  std::vector<double> mu;
};

inline SingleLinkOptimum single_link_optimum(const MulticastNetwork& net) {
  const LinkId l = L(1);
  const double c = net.capacity(l);
  std::map<GroupId, double> weight;
  for (AgentId i : net.users(l)) weight[net.group_of(i)] += net.valuation(i).alpha;
  std::set<GroupId> active;
  for (const auto& [k, w] : weight) active.insert(k);
  double lambda = 0.0;
  for (;;) {
    double wsum = 0.0;
    for (GroupId k : active) wsum += weight[k];
    lambda = wsum / (c + static_cast<double>(active.size()));
    std::optional<GroupId> drop;
    for (GroupId k : active) {
      if (weight[k] / lambda - 1.0 < 0.0) drop = k;
    }
    if (!drop) break;
    active.erase(*drop);
  }
  SingleLinkOptimum out;
  for (const auto& [k, w] : weight) out.b[k] = active.contains(k) ? w / lambda - 1.0 : 0.0;
  out.lambda = lambda;
  for (AgentId i : net.agent_ids()) {
    const double b = out.b.at(net.group_of(i));
    out.x.push_back(b);
    out.mu.push_back(net.valuation(i).alpha / (1.0 + b));
  }
  return out;
}

// Random instance with N <= 8, L <= 4, K <= 4 (or singleton groups), drawn
// until the network is valid and the default tree satisfies the assumption.
inline Instance random_instance(std::uint64_t seed, bool unicast = false) {
  std::mt19937_64 rng(seed);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  for (int attempt = 0;; ++attempt) {
    const int n = uni(2, 8);
    const int nl = uni(1, 4);
    const int nk = unicast ? n : uni(1, std::min(4, n));

    std::vector<std::pair<int, int>> edges;
    for (int v = 2; v <= n; ++v) edges.emplace_back(uni(1, v - 1), v);
    const int extra = uni(0, 2);
    for (int e = 0; e < extra; ++e) {
      const int a = uni(1, n), b = uni(1, n);
      if (a != b) edges.emplace_back(std::min(a, b), std::max(a, b));
    }

    std::vector<int> groups(n);
    for (int i = 0; i < n; ++i) groups[i] = unicast ? i + 1 : uni(1, nk);
    // Dense group ids in order of first appearance.
    std::map<int, int> relabel;
    for (int& g : groups) {
      if (!relabel.contains(g)) relabel[g] = static_cast<int>(relabel.size()) + 1;
      g = relabel[g];
    }

    std::vector<double> alphas(n);
    for (double& a : alphas) a = real(0.5, 4.0);

    // Users of each link: a connected piece of the BFS tree grown from a
    // random seed node.
    UndirectedGraph g{static_cast<std::size_t>(n), {}};
    for (auto [a, b] : edges) g.edges.emplace_back(A(a), A(b));
    SpanningTree tree;
    try {
      tree = build_spanning_tree(g, A(1));
    } catch (const std::exception&) {
      continue;
    }
    std::vector<std::pair<double, std::vector<int>>> links;
    for (int l = 0; l < nl; ++l) {
      const int target = uni(2, n);
      std::set<int> users{uni(1, n)};
      while (static_cast<int>(users.size()) < target) {
        std::vector<int> frontier;
        for (int u : users) {
          for (AgentId v : tree.neighbors(A(u))) {
            if (!users.contains(v.value)) frontier.push_back(v.value);
          }
        }
        if (frontier.empty()) break;
        users.insert(frontier[uni(0, static_cast<int>(frontier.size()) - 1)]);
      }
      links.push_back({real(1.0, 6.0), std::vector<int>(users.begin(), users.end())});
    }
    // Every agent must use some link.
    for (int i = 1; i <= n; ++i) {
      bool used = false;
      for (auto& [c, us] : links) used = used || std::find(us.begin(), us.end(), i) != us.end();
      if (!used) links[uni(0, nl - 1)].second.push_back(i);
    }

    Instance inst;
    try {
      inst = make_instance((unicast ? "unicast" : "random") + std::to_string(seed), groups, alphas,
                           links, edges);
    } catch (const std::exception&) {
      continue;
    }
    if (!validate_network(inst.net).ok()) continue;
    if (!check_assumption1(inst.net, tree).ok()) continue;
    return inst;
  }
}

// Sets every demand-type component (y, y_under, q, n, z1) to gamma times its
// value.
inline MessageProfile scale_demands(const MessageProfile& m, double gamma) {
  MessageProfile out = m;
  for (std::size_t k = 0; k < out.size(); ++k) {
    AgentMessage& a = out[A(static_cast<int>(k) + 1)];
    a.y *= gamma;
    for (auto& [l, v] : a.y_under) v *= gamma;
    for (auto& [j, v] : a.q) v *= gamma;
    for (auto& [jl, v] : a.n) v *= gamma;
    for (auto& [l, v] : a.z1) v *= gamma;
  }
  return out;
}

inline double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

}  // namespace dmd::test
