#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dmd/ids.hpp"
#include "dmd/message.hpp"
#include "dmd/message_graph.hpp"
#include "dmd/network.hpp"

namespace dmd {

/// Base mechanism, or the extended one in which agents off a link relay its
/// price so that users of the link need not be tree-connected.
enum class Variant { Base, Relay };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

/// Numerical conventions for quantities the exact formulas leave undefined
/// off equilibrium. None of the guards is active at an equilibrium with
/// positive demand.
struct MechanismParams {
  double eps_f = 1e-12;    // floor on f_i^l in the radial factor
  double r_max = 1e6;      // cap on the radial factor
  double tau_ind = 1e-9;   // relative tolerance of the equality indicator
  double eps_a = 1e-9;     // floor on the a-messages
  double y_max = 1e6;      // cap on demanded rates
};

/// Group maximum demand seen by an agent and the number of members at it.
struct ZBar {
  double max_demand = 0.0;
  double count = 0.0;
};

struct RadialFactor {
  std::map<LinkId, double> f;
  double r = 0.0;
};

struct WQuantities {
  double w_hat = 0.0;
  double w_bar_minus = 0.0;
};

struct TaxTerm {
  std::string name;
  std::optional<LinkId> link;
  double value = 0.0;
  bool quadratic = false;
};

struct TaxBreakdown {
  double total = 0.0;
  std::vector<TaxTerm> terms;

  /// Value of the named term on link l (or the link-free term), 0 if absent.
  double term(const std::string& name, std::optional<LinkId> l = std::nullopt) const;
};

/// The distributed mechanism on one network and message graph: message
/// shapes, radial allocation, taxes and utilities. Every quantity agent i
/// computes reads only m_i and the messages of its tree neighbors.
class Mechanism {
 public:
  /// Throws std::invalid_argument when the message graph violates the
  /// assumption the variant needs (connected link users for Base, centers
  /// for Relay).
  Mechanism(MulticastNetwork net, MessageGraph graph, Variant variant = Variant::Base,
            MechanismParams params = {});

  const MulticastNetwork& network() const { return net_; }
  const MessageGraph& graph() const { return graph_; }
  Variant variant() const { return variant_; }
  const MechanismParams& params() const { return params_; }

  /// L^i (empty for the base variant).
  const std::set<LinkId>& relay_links(AgentId i) const { return relay_links_.at(i.index()); }
  /// N^l(i): tree neighbors of i that carry a price message for link l.
  const std::vector<AgentId>& link_neighbors(AgentId i, LinkId l) const;
  const std::optional<LinkSubgraphs>& link_subgraphs() const { return subgraphs_; }

  /// Message of the right shape with zero rates and prices and a at its floor.
  AgentMessage blank_message(AgentId i) const;
  MessageProfile blank_profile() const;
  /// Throws std::invalid_argument describing the first shape mismatch.
  void check_shape(const MessageProfile& m) const;

  /// 1 + 4 L_i + N(i) L + |I_i| + 2 sum_{j in I_i} L_j + 2 |C_i| (+ L^i).
  std::size_t message_dimension(AgentId i) const;
  /// Network-wide total in its averaged form; equals the sum of
  /// message_dimension over agents.
  double total_dimension_formula() const;

  bool indicator(double target, double value) const;

  /// y_j^l: the group-demand proxy extended by zero off L_j.
  double extended_group_demand(AgentId j, LinkId l, const MessageProfile& m) const;
  ZBar zbar(AgentId i, LinkId l, const MessageProfile& m) const;
  /// q_{phi(i)}^i 1{q}(zbar1) / zbar2, the agent's own group-demand share.
  double own_group_share(AgentId i, LinkId l, const MessageProfile& m) const;
  /// sum_{j in N(i)} (y_j^l + sum_{h in N(j), h != i} n_j^{h,l}).
  double neighbor_summary(AgentId i, LinkId l, const MessageProfile& m) const;
  RadialFactor f_and_r(AgentId i, const MessageProfile& m) const;

  std::vector<double> allocation(const MessageProfile& m) const;
  double allocation(AgentId i, const MessageProfile& m) const;

  /// Requires l in L_i, or l in L^i for the w-bar part under Relay.
  WQuantities w_quantities(AgentId i, LinkId l, const MessageProfile& m) const;
  double w_bar_minus(AgentId i, LinkId l, const MessageProfile& m) const;

  TaxBreakdown tax(AgentId i, const MessageProfile& m) const;
  double utility(AgentId i, const MessageProfile& m) const;

 private:
  const AgentMessage& msg(const MessageProfile& m, AgentId i) const { return m[i]; }

  MulticastNetwork net_;
  MessageGraph graph_;
  Variant variant_;
  MechanismParams params_;
  std::optional<LinkSubgraphs> subgraphs_;
  std::vector<std::set<LinkId>> relay_links_;
  std::map<std::pair<AgentId, LinkId>, std::vector<AgentId>> link_neighbors_;
};

}  // namespace dmd
