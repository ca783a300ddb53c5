#include "dmd/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dmd {

ValuationPoint Valuation::eval(double x) const {
  if (x < 0.0 || std::isnan(x)) {
    throw std::domain_error("valuation evaluated at negative rate " + std::to_string(x));
  }
  const double one_plus = 1.0 + x;
  return {alpha * std::log1p(x), alpha / one_plus, -alpha / (one_plus * one_plus)};
}

double Valuation::inverse_derivative(double price) const {
  if (price <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, alpha / price - 1.0);
}

ValuationPoint valuation_eval(const Valuation& v, double x) { return v.eval(x); }

MulticastNetwork::MulticastNetwork(std::vector<Agent> agents, std::vector<Link> links,
                                   std::map<LinkId, std::set<AgentId>> usage)
    : agents_(std::move(agents)), links_(std::move(links)), usage_(std::move(usage)) {
  for (std::size_t n = 0; n < agents_.size(); ++n) {
    if (agents_[n].id.value != static_cast<int>(n) + 1) {
      throw std::invalid_argument("agent ids must be dense and ascending from 1");
    }
  }
  for (std::size_t n = 0; n < links_.size(); ++n) {
    if (links_[n].id.value != static_cast<int>(n) + 1) {
      throw std::invalid_argument("link ids must be dense and ascending from 1");
    }
  }
  for (const auto& [l, users] : usage_) {
    if (l.value < 1 || l.index() >= links_.size()) {
      throw std::invalid_argument("usage refers to unknown link " + to_string(l));
    }
    for (AgentId i : users) {
      if (i.value < 1 || i.index() >= agents_.size()) {
        throw std::invalid_argument("link " + to_string(l) + " lists unknown agent " +
                                    to_string(i));
      }
    }
  }
  for (const Link& link : links_) usage_[link.id];

  agent_links_.assign(agents_.size(), {});
  link_groups_.assign(links_.size(), {});
  for (const Agent& a : agents_) group_members_[a.group].push_back(a.id);
  for (const auto& [l, users] : usage_) {
    std::set<GroupId> groups;
    for (AgentId i : users) {
      agent_links_[i.index()].push_back(l);
      groups.insert(group_of(i));
      group_link_users_[{group_of(i), l}].push_back(i);
    }
    link_groups_[l.index()].assign(groups.begin(), groups.end());
  }
}

std::vector<AgentId> MulticastNetwork::agent_ids() const {
  std::vector<AgentId> ids;
  for (const Agent& a : agents_) ids.push_back(a.id);
  return ids;
}

std::vector<LinkId> MulticastNetwork::link_ids() const {
  std::vector<LinkId> ids;
  for (const Link& l : links_) ids.push_back(l.id);
  return ids;
}

std::vector<GroupId> MulticastNetwork::group_ids() const {
  std::vector<GroupId> ids;
  for (const auto& [k, members] : group_members_) ids.push_back(k);
  return ids;
}

bool MulticastNetwork::uses(AgentId i, LinkId l) const {
  const auto& ls = links_of(i);
  return std::binary_search(ls.begin(), ls.end(), l);
}

const std::set<AgentId>& MulticastNetwork::users(LinkId l) const { return usage_.at(l); }

const std::vector<AgentId>& MulticastNetwork::group_users(GroupId k, LinkId l) const {
  static const std::vector<AgentId> kEmpty;
  auto it = group_link_users_.find({k, l});
  return it == group_link_users_.end() ? kEmpty : it->second;
}

const std::vector<AgentId>& MulticastNetwork::group_members(GroupId k) const {
  static const std::vector<AgentId> kEmpty;
  auto it = group_members_.find(k);
  return it == group_members_.end() ? kEmpty : it->second;
}

ValidationReport validate_network(const MulticastNetwork& net) {
  ValidationReport report;
  auto& v = report.violations;
  if (net.num_agents() == 0) v.push_back("network has no agents");
  if (net.num_links() == 0) v.push_back("network has no links");
  for (const Agent& a : net.agents()) {
    if (!(a.valuation.alpha > 0.0)) {
      v.push_back("alpha > 0 violated for agent " + to_string(a.id));
    }
    if (a.group.value < 1) v.push_back("agent " + to_string(a.id) + " has no group");
    if (net.links_of(a.id).empty()) {
      v.push_back("agent " + to_string(a.id) + " uses no link (L_i >= 1)");
    }
  }
  const auto groups = net.group_ids();
  for (std::size_t n = 0; n < groups.size(); ++n) {
    if (groups[n].value != static_cast<int>(n) + 1) {
      v.push_back("group ids must be dense and ascending from 1");
      break;
    }
  }
  for (const Link& link : net.links()) {
    if (!(link.capacity > 0.0)) {
      v.push_back("capacity > 0 violated on link " + to_string(link.id));
    }
    const std::size_t k_l = net.groups_on(link.id).size();
    if (k_l < 2) {
      std::ostringstream msg;
      msg << "K^l = " << k_l << " < 2 on link " << to_string(link.id);
      v.push_back(msg.str());
    }
  }
  return report;
}

std::map<LinkId, double> link_load(const MulticastNetwork& net, std::span<const double> x) {
  if (x.size() != net.num_agents()) {
    throw std::invalid_argument("rate vector size does not match the number of agents");
  }
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (x[n] < 0.0) {
      throw std::domain_error("negative rate for agent " + std::to_string(n + 1));
    }
  }
  std::map<LinkId, double> load;
  for (LinkId l : net.link_ids()) {
    double total = 0.0;
    for (GroupId k : net.groups_on(l)) {
      double group_max = 0.0;
      for (AgentId i : net.group_users(k, l)) group_max = std::max(group_max, x[i.index()]);
      total += group_max;
    }
    load[l] = total;
  }
  return load;
}

bool is_feasible(const MulticastNetwork& net, std::span<const double> x, double tol) {
  if (x.size() != net.num_agents()) return false;
  std::vector<double> clipped(x.begin(), x.end());
  for (double& xi : clipped) {
    if (xi < -tol) return false;
    xi = std::max(xi, 0.0);
  }
  for (const auto& [l, load] : link_load(net, clipped)) {
    if (load > net.capacity(l) + tol) return false;
  }
  return true;
}

double welfare(const MulticastNetwork& net, std::span<const double> x) {
  double total = 0.0;
  for (const Agent& a : net.agents()) total += a.valuation.value(x[a.id.index()]);
  return total;
}

}  // namespace dmd
