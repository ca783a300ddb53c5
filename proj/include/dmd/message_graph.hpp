#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dmd/ids.hpp"
#include "dmd/network.hpp"

namespace dmd {

using Edge = std::pair<AgentId, AgentId>;

/// The message network as given: who can hear whom.
struct UndirectedGraph {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
};

/// Spanning tree of the message network with a complete next-hop table.
class SpanningTree {
 public:
  SpanningTree() = default;

  /// Breadth-first tree from `root`, neighbors visited in ascending order.
  /// Throws std::invalid_argument("message network not connected") when the
  /// graph does not reach every node.
  static SpanningTree bfs(const UndirectedGraph& graph, AgentId root);

  /// Uses `edges` verbatim; throws unless they form a spanning tree on
  /// `num_nodes` nodes.
  static SpanningTree from_edges(std::size_t num_nodes, const std::vector<Edge>& edges);

  std::size_t num_nodes() const { return adjacency_.size(); }
  const std::set<AgentId>& neighbors(AgentId i) const { return adjacency_.at(i.index()); }
  bool adjacent(AgentId i, AgentId j) const { return neighbors(i).contains(j); }

  /// Neighbor of i on the unique tree path from i to j (i itself when i == j).
  AgentId next_hop(AgentId i, AgentId j) const {
    return next_hop_.at(i.index()).at(j.index());
  }
  /// Nodes on the tree path from i to j, both ends included.
  std::vector<AgentId> path(AgentId i, AgentId j) const;

  /// Edges as (smaller, larger) pairs in ascending order.
  std::vector<Edge> edges() const;

 private:
  explicit SpanningTree(std::vector<std::set<AgentId>> adjacency);

  std::vector<std::set<AgentId>> adjacency_;
  std::vector<std::vector<AgentId>> next_hop_;
};

struct GraphOverrides {
  std::map<AgentId, AgentId> phi;
  std::map<std::pair<GroupId, LinkId>, AgentId> centers;
};

/// Spanning tree plus the designee map phi, the proxy sets I_i and the group
/// centers c(k,l).
class MessageGraph {
 public:
  MessageGraph() = default;
  MessageGraph(SpanningTree tree, std::map<AgentId, AgentId> phi,
               std::map<std::pair<GroupId, LinkId>, AgentId> centers);

  const SpanningTree& tree() const { return tree_; }
  std::size_t num_nodes() const { return tree_.num_nodes(); }
  const std::set<AgentId>& neighbors(AgentId i) const { return tree_.neighbors(i); }

  AgentId phi(AgentId i) const { return phi_.at(i); }
  const std::map<AgentId, AgentId>& phi_map() const { return phi_; }
  /// I_i: neighbors h with phi(h) == i.
  const std::set<AgentId>& proxied_by(AgentId i) const { return proxied_.at(i.index()); }

  AgentId center(GroupId k, LinkId l) const { return centers_.at({k, l}); }
  const std::map<std::pair<GroupId, LinkId>, AgentId>& centers() const { return centers_; }
  /// C_i: links on which agent i is the center of its group.
  const std::set<LinkId>& centered_links(AgentId i) const { return centered_.at(i.index()); }
  bool is_center(AgentId i, LinkId l) const { return centered_links(i).contains(l); }

 private:
  SpanningTree tree_;
  std::map<AgentId, AgentId> phi_;
  std::map<std::pair<GroupId, LinkId>, AgentId> centers_;
  std::vector<std::set<AgentId>> proxied_;
  std::vector<std::set<LinkId>> centered_;
};

SpanningTree build_spanning_tree(const UndirectedGraph& adjacency, AgentId root);

/// Lowest-index neighbor for phi, lowest-index eligible member for every
/// center, unless overridden. Throws std::invalid_argument naming the (k,l)
/// pair when no member is eligible, or when an override is inadmissible.
MessageGraph assign_phi_and_centers(const MulticastNetwork& net, const SpanningTree& tree,
                                    const GraphOverrides& overrides = {});

/// Members of G_k^l that are tree-adjacent to every other member.
std::vector<AgentId> eligible_centers(const MulticastNetwork& net, const SpanningTree& tree,
                                      GroupId k, LinkId l);

struct AssumptionReport {
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Users of every link induce a connected subtree, and every group on every
/// link has an eligible center.
AssumptionReport check_assumption1(const MulticastNetwork& net, const SpanningTree& tree);
/// Only the center condition.
AssumptionReport check_assumption2(const MulticastNetwork& net, const SpanningTree& tree);

struct LinkSubgraph {
  LinkId link;
  std::set<AgentId> members;
  std::vector<Edge> edges;
};

struct LinkSubgraphs {
  std::map<LinkId, LinkSubgraph> by_link;
  /// L^i: links agent i relays without using them.
  std::vector<std::set<LinkId>> relay_links;

  const std::set<AgentId>& members(LinkId l) const { return by_link.at(l).members; }
};

/// Smallest connected subtree containing every user of each link: the union
/// of tree paths between users.
LinkSubgraphs build_link_subgraphs(const MulticastNetwork& net, const SpanningTree& tree);

}  // namespace dmd
