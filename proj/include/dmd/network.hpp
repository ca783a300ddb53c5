#pragma once

#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmd/ids.hpp"

namespace dmd {

/// Default tolerance for feasibility checks on rate vectors.
inline constexpr double kFeasibilityTol = 1e-9;

enum class ValuationFamily { LogLinear };

/// Value and first two derivatives of a valuation at one rate.
struct ValuationPoint {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// v(x) = alpha * ln(1 + x). Strictly concave, strictly increasing and C^2 on
/// x >= 0 for every alpha > 0.
struct Valuation {
  ValuationFamily family = ValuationFamily::LogLinear;
  double alpha = 1.0;

  /// Throws std::domain_error for x < 0.
  ValuationPoint eval(double x) const;

  double value(double x) const { return eval(x).value; }
  double derivative(double x) const { return eval(x).d1; }

  /// Smallest x >= 0 with v'(x) <= price; +inf when price <= 0.
  double inverse_derivative(double price) const;
};

ValuationPoint valuation_eval(const Valuation& v, double x);

struct Agent {
  AgentId id;
  GroupId group;
  Valuation valuation;
};

struct Link {
  LinkId id;
  double capacity = 0.0;
};

/// A multicast network instance: agents partitioned into groups, links with
/// capacities, and the set of agents using each link.
///
/// Construction only rejects malformed references (non-dense ids, users that
/// name unknown agents or links). Semantic invariants such as positive
/// capacities or two groups per link are reported by validate_network.
class MulticastNetwork {
 public:
  MulticastNetwork() = default;
  MulticastNetwork(std::vector<Agent> agents, std::vector<Link> links,
                   std::map<LinkId, std::set<AgentId>> usage);

  std::size_t num_agents() const { return agents_.size(); }
  std::size_t num_links() const { return links_.size(); }
  std::size_t num_groups() const { return group_members_.size(); }

  const std::vector<Agent>& agents() const { return agents_; }
  const std::vector<Link>& links() const { return links_; }
  const std::map<LinkId, std::set<AgentId>>& usage() const { return usage_; }

  const Agent& agent(AgentId i) const { return agents_.at(i.index()); }
  GroupId group_of(AgentId i) const { return agent(i).group; }
  const Valuation& valuation(AgentId i) const { return agent(i).valuation; }
  double capacity(LinkId l) const { return links_.at(l.index()).capacity; }

  std::vector<AgentId> agent_ids() const;
  std::vector<LinkId> link_ids() const;
  std::vector<GroupId> group_ids() const;

  /// Links used by agent i, ascending.
  const std::vector<LinkId>& links_of(AgentId i) const { return agent_links_.at(i.index()); }
  bool uses(AgentId i, LinkId l) const;
  /// Agents using link l, ascending.
  const std::set<AgentId>& users(LinkId l) const;
  /// Groups with at least one member on link l, ascending.
  const std::vector<GroupId>& groups_on(LinkId l) const { return link_groups_.at(l.index()); }
  /// Members of group k that use link l.
  const std::vector<AgentId>& group_users(GroupId k, LinkId l) const;
  const std::vector<AgentId>& group_members(GroupId k) const;

 private:
  std::vector<Agent> agents_;
  std::vector<Link> links_;
  std::map<LinkId, std::set<AgentId>> usage_;

  std::vector<std::vector<LinkId>> agent_links_;
  std::vector<std::vector<GroupId>> link_groups_;
  std::map<GroupId, std::vector<AgentId>> group_members_;
  std::map<std::pair<GroupId, LinkId>, std::vector<AgentId>> group_link_users_;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_network(const MulticastNetwork& net);

/// Per-link multicast load: sum over groups of the largest member rate.
/// Throws std::domain_error if any rate is negative.
std::map<LinkId, double> link_load(const MulticastNetwork& net, std::span<const double> x);

bool is_feasible(const MulticastNetwork& net, std::span<const double> x,
                 double tol = kFeasibilityTol);

double welfare(const MulticastNetwork& net, std::span<const double> x);

}  // namespace dmd
