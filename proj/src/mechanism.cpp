#include "dmd/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dmd {

std::string to_string(Variant v) { return v == Variant::Base ? "base" : "relay"; }

Variant parse_variant(const std::string& s) {
  if (s == "base") return Variant::Base;
  // "section5" is accepted as an alias.
  if (s == "relay" || s == "section5") return Variant::Relay;
  throw std::invalid_argument("unknown mechanism variant '" + s + "' (expected base or relay)");
}

double TaxBreakdown::term(const std::string& name, std::optional<LinkId> l) const {
  for (const auto& t : terms) {
    if (t.name == name && t.link == l) return t.value;
  }
  return 0.0;
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::ostringstream os;
  for (std::size_t k = 0; k < items.size(); ++k) os << (k ? "; " : "") << items[k];
  return os.str();
}

double sq(double v) { return v * v; }

}  // namespace

Mechanism::Mechanism(MulticastNetwork net, MessageGraph graph, Variant variant,
                     MechanismParams params)
    : net_(std::move(net)), graph_(std::move(graph)), variant_(variant), params_(params) {
  if (graph_.num_nodes() != net_.num_agents()) {
    throw std::invalid_argument("message graph and network disagree on the number of agents");
  }
  const auto report = variant_ == Variant::Base ? check_assumption1(net_, graph_.tree())
                                                : check_assumption2(net_, graph_.tree());
  if (!report.ok()) throw std::invalid_argument(join(report.failures));

  relay_links_.assign(net_.num_agents(), {});
  if (variant_ == Variant::Relay) {
    subgraphs_ = build_link_subgraphs(net_, graph_.tree());
    relay_links_ = subgraphs_->relay_links;
  }

  for (AgentId i : net_.agent_ids()) {
    std::set<LinkId> priced(net_.links_of(i).begin(), net_.links_of(i).end());
    priced.insert(relay_links_[i.index()].begin(), relay_links_[i.index()].end());
    for (LinkId l : priced) {
      std::vector<AgentId> nbrs;
      for (AgentId j : graph_.neighbors(i)) {
        const bool carries = variant_ == Variant::Base ? net_.uses(j, l)
                                                       : subgraphs_->members(l).contains(j);
        if (carries) nbrs.push_back(j);
      }
      link_neighbors_[{i, l}] = std::move(nbrs);
    }
  }
}

const std::vector<AgentId>& Mechanism::link_neighbors(AgentId i, LinkId l) const {
  auto it = link_neighbors_.find({i, l});
  if (it == link_neighbors_.end()) {
    throw std::invalid_argument("agent " + to_string(i) + " quotes no price for " + to_string(l));
  }
  return it->second;
}

AgentMessage Mechanism::blank_message(AgentId i) const {
  AgentMessage m;
  for (LinkId l : net_.links_of(i)) {
    m.y_under[l] = 0.0;
    m.p1[l] = 0.0;
    m.w[l] = 0.0;
    m.a1[l] = params_.eps_a;
  }
  for (LinkId l : relay_links(i)) m.w[l] = 0.0;
  for (AgentId j : graph_.neighbors(i)) {
    for (LinkId l : net_.link_ids()) m.n[{j, l}] = 0.0;
  }
  for (AgentId j : graph_.proxied_by(i)) {
    m.q[j] = 0.0;
    for (LinkId l : net_.links_of(j)) {
      m.p2[{j, l}] = 0.0;
      m.a2[{j, l}] = params_.eps_a;
    }
  }
  for (LinkId l : graph_.centered_links(i)) {
    m.z1[l] = 0.0;
    m.z2[l] = 0.0;
  }
  return m;
}

MessageProfile Mechanism::blank_profile() const {
  std::vector<AgentMessage> msgs;
  for (AgentId i : net_.agent_ids()) msgs.push_back(blank_message(i));
  return MessageProfile(std::move(msgs));
}

void Mechanism::check_shape(const MessageProfile& m) const {
  if (m.size() != net_.num_agents()) {
    throw std::invalid_argument("profile has " + std::to_string(m.size()) + " messages, expected " +
                                std::to_string(net_.num_agents()));
  }
  for (AgentId i : net_.agent_ids()) {
    std::vector<std::string> want, got;
    const AgentMessage blank = blank_message(i);
    for_each_component(blank, [&](const std::string& k, const double&) { want.push_back(k); });
    std::string bad;
    for_each_component(m[i], [&](const std::string& k, const double& v) {
      got.push_back(k);
      const bool in_domain = std::isfinite(v) && (k.starts_with("a") ? v > 0.0 : v >= 0.0);
      if (!in_domain && bad.empty()) bad = k;
    });
    if (want != got) {
      for (std::size_t k = 0; k < std::max(want.size(), got.size()); ++k) {
        if (k >= want.size() || k >= got.size() || want[k] != got[k]) {
          const std::string which = k < got.size() ? "unexpected component " + got[k]
                                                   : "missing component " + want[k];
          throw std::invalid_argument("agent " + to_string(i) + ": " + which);
        }
      }
    }
    if (!bad.empty()) {
      throw std::invalid_argument("agent " + to_string(i) + ": component " + bad +
                                  " outside its domain");
    }
  }
}

std::size_t Mechanism::message_dimension(AgentId i) const {
  std::size_t proxied_links = 0;
  for (AgentId j : graph_.proxied_by(i)) proxied_links += net_.links_of(j).size();
  std::size_t m = 1 + 4 * net_.links_of(i).size() + graph_.neighbors(i).size() * net_.num_links() +
                  graph_.proxied_by(i).size() + 2 * proxied_links +
                  2 * graph_.centered_links(i).size();
  if (variant_ == Variant::Relay) m += relay_links(i).size();
  return m;
}

double Mechanism::total_dimension_formula() const {
  const double n = static_cast<double>(net_.num_agents());
  const double l = static_cast<double>(net_.num_links());
  double sum_li = 0.0, sum_deg = 0.0, sum_kl = 0.0, sum_relay = 0.0;
  for (AgentId i : net_.agent_ids()) {
    sum_li += static_cast<double>(net_.links_of(i).size());
    sum_deg += static_cast<double>(graph_.neighbors(i).size());
    sum_relay += static_cast<double>(relay_links(i).size());
  }
  for (LinkId k : net_.link_ids()) sum_kl += static_cast<double>(net_.groups_on(k).size());
  const double l_bar = sum_li / n;
  const double n_bar = sum_deg / n;
  double total = n * (2.0 + 4.0 * l_bar + n_bar * l + 2.0 * sum_li / n + 2.0 * sum_kl / n);
  if (variant_ == Variant::Relay) total += sum_relay;
  return total;
}

bool Mechanism::indicator(double target, double value) const {
  return std::abs(target - value) <= params_.tau_ind * std::max(1.0, std::abs(value));
}

double Mechanism::extended_group_demand(AgentId j, LinkId l, const MessageProfile& m) const {
  const auto& yu = msg(m, j).y_under;
  auto it = yu.find(l);
  return it == yu.end() ? 0.0 : it->second;
}

ZBar Mechanism::zbar(AgentId i, LinkId l, const MessageProfile& m) const {
  const GroupId k = net_.group_of(i);
  if (!graph_.is_center(i, l)) {
    const AgentId c = graph_.center(k, l);
    return {msg(m, c).z1.at(l), msg(m, c).z2.at(l)};
  }
  const double q = msg(m, graph_.phi(i)).q.at(i);
  double top = q;
  for (AgentId j : net_.group_users(k, l)) {
    if (j != i) top = std::max(top, msg(m, j).y);
  }
  double count = indicator(q, top) ? 1.0 : 0.0;
  for (AgentId j : net_.group_users(k, l)) {
    if (j != i && indicator(msg(m, j).y, top)) count += 1.0;
  }
  return {top, count};
}

double Mechanism::own_group_share(AgentId i, LinkId l, const MessageProfile& m) const {
  const ZBar z = zbar(i, l, m);
  // A zero count only arises off equilibrium, where a non-center copies a
  // center's unset z message; the share is taken as zero there.
  if (z.count <= 0.0) return 0.0;
  const double q = msg(m, graph_.phi(i)).q.at(i);
  return indicator(q, z.max_demand) ? q / z.count : 0.0;
}

double Mechanism::neighbor_summary(AgentId i, LinkId l, const MessageProfile& m) const {
  double s = 0.0;
  for (AgentId j : graph_.neighbors(i)) {
    s += extended_group_demand(j, l, m);
    for (AgentId h : graph_.neighbors(j)) {
      if (h != i) s += msg(m, j).n.at({h, l});
    }
  }
  return s;
}

RadialFactor Mechanism::f_and_r(AgentId i, const MessageProfile& m) const {
  RadialFactor out;
  double r = params_.r_max;
  for (LinkId l : net_.link_ids()) {
    double f = neighbor_summary(i, l, m);
    if (net_.uses(i, l)) f += own_group_share(i, l, m);
    out.f[l] = f;
    r = std::min(r, net_.capacity(l) / std::max(f, params_.eps_f));
  }
  out.r = r;
  return out;
}

double Mechanism::allocation(AgentId i, const MessageProfile& m) const {
  return f_and_r(i, m).r * msg(m, i).y;
}

std::vector<double> Mechanism::allocation(const MessageProfile& m) const {
  std::vector<double> x;
  x.reserve(net_.num_agents());
  for (AgentId i : net_.agent_ids()) x.push_back(allocation(i, m));
  return x;
}

double Mechanism::w_bar_minus(AgentId i, LinkId l, const MessageProfile& m) const {
  const auto& nbrs = link_neighbors(i, l);
  if (nbrs.empty()) {
    throw std::invalid_argument("no link-" + to_string(l) + " neighbor for agent " + to_string(i));
  }
  double s = 0.0;
  for (AgentId j : nbrs) s += msg(m, j).w.at(l);
  return s / static_cast<double>(nbrs.size());
}

WQuantities Mechanism::w_quantities(AgentId i, LinkId l, const MessageProfile& m) const {
  WQuantities out;
  out.w_bar_minus = w_bar_minus(i, l, m);
  if (!net_.uses(i, l)) return out;

  const AgentMessage& mi = msg(m, i);
  const AgentMessage& mphi = msg(m, graph_.phi(i));
  const double a_gap = mi.a1.at(l) - mphi.a2.at({i, l});
  const GroupId k = net_.group_of(i);
  if (graph_.is_center(i, l)) {
    double s = 0.0;
    for (AgentId j : net_.group_users(k, l)) s += msg(m, j).p1.at(l);
    out.w_hat = s + a_gap;
  } else {
    const AgentId c = graph_.center(k, l);
    out.w_hat = msg(m, c).w.at(l) - mphi.p2.at({i, l}) + mi.p1.at(l) + a_gap;
  }
  return out;
}

TaxBreakdown Mechanism::tax(AgentId i, const MessageProfile& m) const {
  TaxBreakdown out;
  auto add = [&](std::string name, std::optional<LinkId> l, double v, bool quad) {
    out.terms.push_back({std::move(name), l, v, quad});
  };

  const AgentMessage& mi = msg(m, i);
  const AgentId phi = graph_.phi(i);
  const AgentMessage& mphi = msg(m, phi);

  double p_cons = 0.0, a_cons = 0.0, q_cons = 0.0;
  for (AgentId j : graph_.proxied_by(i)) {
    for (LinkId l : net_.links_of(j)) {
      p_cons += sq(mi.p2.at({j, l}) - msg(m, j).p1.at(l));
      a_cons += sq(mi.a2.at({j, l}) - msg(m, j).a1.at(l));
    }
    q_cons += sq(mi.q.at(j) - msg(m, j).y);
  }
  add("p2_consensus", std::nullopt, p_cons, true);
  add("a2_consensus", std::nullopt, a_cons, true);
  add("q_consensus", std::nullopt, q_cons, true);

  const RadialFactor rf = f_and_r(i, m);
  const double x_hat = rf.r * mi.y;
  const GroupId k = net_.group_of(i);

  for (LinkId l : net_.link_ids()) {
    double summary = 0.0;
    for (AgentId j : graph_.neighbors(i)) {
      double target = extended_group_demand(j, l, m);
      for (AgentId h : graph_.neighbors(j)) {
        if (h != i) target += msg(m, j).n.at({h, l});
      }
      summary += sq(mi.n.at({j, l}) - target);
    }
    const double slack = net_.capacity(l) - rf.r * rf.f.at(l);

    if (net_.uses(i, l)) {
      const double p2 = mphi.p2.at({i, l});
      const double q = mphi.q.at(i);
      const ZBar z = zbar(i, l, m);
      const WQuantities wq = w_quantities(i, l, m);
      const double gap = wq.w_hat - wq.w_bar_minus;

      add("price_rate", l, p2 * x_hat, false);
      add("summary_consensus", l, summary, true);
      add("y_under_consensus", l, sq(mi.y_under.at(l) - own_group_share(i, l, m)), true);
      if (graph_.is_center(i, l)) {
        add("z1_consensus", l, sq(mi.z1.at(l) - z.max_demand), true);
        add("z2_consensus", l, sq(mi.z2.at(l) - z.count), true);
        double others = 0.0;
        for (AgentId j : net_.group_users(k, l)) {
          if (j != i) others += msg(m, j).p1.at(l);
        }
        add("w_group_sum", l, sq(mi.w.at(l) - p2 - others), true);
      }
      add("w_slackness", l, wq.w_bar_minus * gap * sq(slack), false);
      add("w_hat_consensus", l, sq(gap), true);
      add("p_slackness", l, p2 * (mi.p1.at(l) - p2) * sq(z.max_demand - q), false);
      if (!graph_.is_center(i, l)) {
        const AgentId c = graph_.center(k, l);
        add("w_copy", l, sq(mi.w.at(l) - msg(m, c).w.at(l)), true);
      }
    } else if (relay_links(i).contains(l)) {
      const double wbar = w_bar_minus(i, l, m);
      const double gap = mi.w.at(l) - wbar;
      add("summary_consensus", l, summary, true);
      add("w_relay_consensus", l, sq(gap), true);
      add("w_relay_slackness", l, wbar * gap * sq(slack), false);
    } else {
      add("summary_consensus", l, summary, true);
    }
  }

  double total = 0.0;
  for (const auto& t : out.terms) total += t.value;
  out.total = total;
  return out;
}

double Mechanism::utility(AgentId i, const MessageProfile& m) const {
  return net_.valuation(i).value(allocation(i, m)) - tax(i, m).total;
}

}  // namespace dmd
