#include "dmd/message_graph.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace dmd {
namespace {

std::vector<std::set<AgentId>> adjacency_of(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::set<AgentId>> adj(n);
  for (const auto& [a, b] : edges) {
    if (a.value < 1 || b.value < 1 || a.index() >= n || b.index() >= n) {
      throw std::invalid_argument("edge " + to_string(a) + "-" + to_string(b) +
                                  " refers to an unknown agent");
    }
    if (a == b) throw std::invalid_argument("self-loop on agent " + to_string(a));
    adj[a.index()].insert(b);
    adj[b.index()].insert(a);
  }
  return adj;
}

// Nodes reachable from `start` inside `allowed` using tree edges.
std::set<AgentId> reachable_within(const SpanningTree& tree, AgentId start,
                                   const std::set<AgentId>& allowed) {
  std::set<AgentId> seen{start};
  std::deque<AgentId> queue{start};
  while (!queue.empty()) {
    AgentId u = queue.front();
    queue.pop_front();
    for (AgentId v : tree.neighbors(u)) {
      if (allowed.contains(v) && seen.insert(v).second) queue.push_back(v);
    }
  }
  return seen;
}

void check_centers(const MulticastNetwork& net, const SpanningTree& tree,
                   std::vector<std::string>& failures) {
  for (LinkId l : net.link_ids()) {
    for (GroupId k : net.groups_on(l)) {
      if (eligible_centers(net, tree, k, l).empty()) {
        failures.push_back("no eligible center for (" + to_string(k) + ", " + to_string(l) +
                           "): no member adjacent to all others");
      }
    }
  }
}

}  // namespace

SpanningTree::SpanningTree(std::vector<std::set<AgentId>> adjacency)
    : adjacency_(std::move(adjacency)) {
  const std::size_t n = adjacency_.size();
  next_hop_.assign(n, std::vector<AgentId>(n));
  for (std::size_t s = 0; s < n; ++s) {
    const AgentId source{static_cast<int>(s) + 1};
    auto& row = next_hop_[s];
    row[s] = source;
    std::deque<AgentId> queue;
    std::vector<bool> seen(n, false);
    seen[s] = true;
    for (AgentId v : adjacency_[s]) {
      row[v.index()] = v;
      seen[v.index()] = true;
      queue.push_back(v);
    }
    while (!queue.empty()) {
      AgentId u = queue.front();
      queue.pop_front();
      for (AgentId v : adjacency_[u.index()]) {
        if (seen[v.index()]) continue;
        seen[v.index()] = true;
        row[v.index()] = row[u.index()];
        queue.push_back(v);
      }
    }
  }
}

SpanningTree SpanningTree::bfs(const UndirectedGraph& graph, AgentId root) {
  const std::size_t n = graph.num_nodes;
  if (n == 0) throw std::invalid_argument("message network has no nodes");
  if (root.value < 1 || root.index() >= n) {
    throw std::invalid_argument("tree root " + to_string(root) + " is not an agent");
  }
  const auto adj = adjacency_of(n, graph.edges);
  std::vector<std::set<AgentId>> tree(n);
  std::vector<bool> seen(n, false);
  std::deque<AgentId> queue{root};
  seen[root.index()] = true;
  std::size_t visited = 1;
  while (!queue.empty()) {
    AgentId u = queue.front();
    queue.pop_front();
    for (AgentId v : adj[u.index()]) {
      if (seen[v.index()]) continue;
      seen[v.index()] = true;
      ++visited;
      tree[u.index()].insert(v);
      tree[v.index()].insert(u);
      queue.push_back(v);
    }
  }
  if (visited != n) throw std::invalid_argument("message network not connected");
  return SpanningTree(std::move(tree));
}

SpanningTree SpanningTree::from_edges(std::size_t num_nodes, const std::vector<Edge>& edges) {
  if (num_nodes == 0) throw std::invalid_argument("message network has no nodes");
  if (edges.size() + 1 != num_nodes) {
    throw std::invalid_argument("tree edge list must have exactly N-1 edges");
  }
  auto adj = adjacency_of(num_nodes, edges);
  SpanningTree tree(std::move(adj));
  std::set<AgentId> all;
  for (std::size_t n = 0; n < num_nodes; ++n) all.insert(AgentId{static_cast<int>(n) + 1});
  if (reachable_within(tree, AgentId{1}, all).size() != num_nodes) {
    throw std::invalid_argument("tree edges do not span the message network");
  }
  return tree;
}

std::vector<AgentId> SpanningTree::path(AgentId i, AgentId j) const {
  std::vector<AgentId> nodes{i};
  while (i != j) {
    i = next_hop(i, j);
    nodes.push_back(i);
  }
  return nodes;
}

std::vector<Edge> SpanningTree::edges() const {
  std::vector<Edge> out;
  for (std::size_t u = 0; u < adjacency_.size(); ++u) {
    const AgentId a{static_cast<int>(u) + 1};
    for (AgentId b : adjacency_[u]) {
      if (a < b) out.emplace_back(a, b);
    }
  }
  return out;
}

SpanningTree build_spanning_tree(const UndirectedGraph& adjacency, AgentId root) {
  return SpanningTree::bfs(adjacency, root);
}

MessageGraph::MessageGraph(SpanningTree tree, std::map<AgentId, AgentId> phi,
                           std::map<std::pair<GroupId, LinkId>, AgentId> centers)
    : tree_(std::move(tree)), phi_(std::move(phi)), centers_(std::move(centers)) {
  proxied_.assign(tree_.num_nodes(), {});
  centered_.assign(tree_.num_nodes(), {});
  for (const auto& [i, designee] : phi_) proxied_.at(designee.index()).insert(i);
  for (const auto& [kl, c] : centers_) centered_.at(c.index()).insert(kl.second);
}

std::vector<AgentId> eligible_centers(const MulticastNetwork& net, const SpanningTree& tree,
                                      GroupId k, LinkId l) {
  const auto& members = net.group_users(k, l);
  std::vector<AgentId> out;
  for (AgentId c : members) {
    const bool ok = std::all_of(members.begin(), members.end(), [&](AgentId j) {
      return j == c || tree.adjacent(c, j);
    });
    if (ok) out.push_back(c);
  }
  return out;
}

MessageGraph assign_phi_and_centers(const MulticastNetwork& net, const SpanningTree& tree,
                                    const GraphOverrides& overrides) {
  if (tree.num_nodes() != net.num_agents()) {
    throw std::invalid_argument("message graph and network disagree on the number of agents");
  }
  if (net.num_agents() < 2) throw std::invalid_argument("message graph needs at least 2 agents");
  std::map<AgentId, AgentId> phi;
  for (AgentId i : net.agent_ids()) {
    auto it = overrides.phi.find(i);
    if (it != overrides.phi.end()) {
      if (!tree.adjacent(i, it->second)) {
        throw std::invalid_argument("phi override for agent " + to_string(i) +
                                    " is not a tree neighbor");
      }
      phi[i] = it->second;
    } else {
      phi[i] = *tree.neighbors(i).begin();
    }
  }
  for (const auto& [i, designee] : overrides.phi) {
    if (i.value < 1 || i.index() >= net.num_agents()) {
      throw std::invalid_argument("phi override names unknown agent " + to_string(i));
    }
  }

  std::map<std::pair<GroupId, LinkId>, AgentId> centers;
  for (LinkId l : net.link_ids()) {
    for (GroupId k : net.groups_on(l)) {
      const auto eligible = eligible_centers(net, tree, k, l);
      auto it = overrides.centers.find({k, l});
      if (it != overrides.centers.end()) {
        if (std::find(eligible.begin(), eligible.end(), it->second) == eligible.end()) {
          throw std::invalid_argument("center override " + to_string(it->second) + " for (" +
                                      to_string(k) + ", " + to_string(l) +
                                      ") is not an eligible center");
        }
        centers[{k, l}] = it->second;
      } else if (eligible.empty()) {
        throw std::invalid_argument("no eligible center for (" + to_string(k) + ", " +
                                    to_string(l) + ")");
      } else {
        centers[{k, l}] = eligible.front();
      }
    }
  }
  for (const auto& [kl, c] : overrides.centers) {
    if (!centers.contains(kl)) {
      throw std::invalid_argument("center override for (" + to_string(kl.first) + ", " +
                                  to_string(kl.second) + ") names a group not on that link");
    }
  }
  return MessageGraph(tree, std::move(phi), std::move(centers));
}

AssumptionReport check_assumption1(const MulticastNetwork& net, const SpanningTree& tree) {
  AssumptionReport report;
  for (LinkId l : net.link_ids()) {
    const auto& users = net.users(l);
    if (users.empty()) continue;
    if (reachable_within(tree, *users.begin(), users).size() != users.size()) {
      report.failures.push_back("N^" + to_string(l) + " not connected in the message graph");
    }
  }
  check_centers(net, tree, report.failures);
  return report;
}

AssumptionReport check_assumption2(const MulticastNetwork& net, const SpanningTree& tree) {
  AssumptionReport report;
  check_centers(net, tree, report.failures);
  return report;
}

LinkSubgraphs build_link_subgraphs(const MulticastNetwork& net, const SpanningTree& tree) {
  LinkSubgraphs out;
  out.relay_links.assign(net.num_agents(), {});
  for (LinkId l : net.link_ids()) {
    LinkSubgraph sub{l, {}, {}};
    const auto& users = net.users(l);
    if (!users.empty()) {
      const AgentId anchor = *users.begin();
      for (AgentId u : users) {
        for (AgentId v : tree.path(anchor, u)) sub.members.insert(v);
      }
    }
    for (const auto& [a, b] : tree.edges()) {
      if (sub.members.contains(a) && sub.members.contains(b)) sub.edges.emplace_back(a, b);
    }
    for (AgentId v : sub.members) {
      if (!users.contains(v)) out.relay_links[v.index()].insert(l);
    }
    out.by_link.emplace(l, std::move(sub));
  }
  return out;
}

}  // namespace dmd
