#include "dmd/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dmd {

bool LemmaReport::pass() const { return failing().empty(); }

double LemmaReport::residual(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e.residual;
  }
  throw std::out_of_range("no residual named " + name + " in " + id);
}

double LemmaReport::max_residual() const {
  double worst = 0.0;
  for (const auto& e : entries) {
    if (!e.soft) worst = std::max(worst, e.residual);
  }
  return worst;
}

std::vector<std::string> LemmaReport::failing() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (!e.soft && !(e.residual <= tolerance)) out.push_back(e.name);
  }
  return out;
}

namespace {

// Running maximum of |residual| for one family.
class Tracker {
 public:
  explicit Tracker(std::string name, bool soft = false) {
    entry_.name = std::move(name);
    entry_.soft = soft;
  }

  void add(double r, const std::string& where) {
    r = std::isnan(r) ? std::numeric_limits<double>::infinity() : std::abs(r);
    if (entry_.where.empty() || r > entry_.residual) {
      entry_.residual = r;
      entry_.where = where;
    }
  }
  ResidualEntry done() const { return entry_; }

 private:
  ResidualEntry entry_;
};

std::string at(AgentId i) { return "agent " + to_string(i); }
std::string at(AgentId i, AgentId j) { return "agent " + to_string(i) + ", " + to_string(j); }
std::string at(AgentId i, LinkId l) { return "agent " + to_string(i) + ", " + to_string(l); }
std::string at(AgentId i, AgentId j, LinkId l) {
  return "agent " + to_string(i) + ", " + to_string(j) + ", " + to_string(l);
}

LemmaReport make(std::string id, double tol) {
  LemmaReport r;
  r.id = std::move(id);
  r.tolerance = tol;
  return r;
}

double own_price_sum(const Mechanism& mech, AgentId i, const MessageProfile& m) {
  double s = 0.0;
  for (LinkId l : mech.network().links_of(i)) s += m[i].p1.at(l);
  return s;
}

}  // namespace

LemmaReport check_lemma2(const Mechanism& mech, const MessageProfile& m, double tol) {
  mech.check_shape(m);
  const auto& net = mech.network();
  const auto& graph = mech.graph();
  Tracker q("q_proxy"), yu("y_under"), p2("p2_consensus"), w("w"), n("summary"), z1("z1"),
      z2("z2"), a2("a2_consensus");

  for (AgentId i : net.agent_ids()) {
    const AgentMessage& mi = m[i];
    for (const auto& [j, v] : mi.q) q.add(v - m[j].y, at(i, j));
    for (const auto& [l, v] : mi.y_under) yu.add(v - mech.own_group_share(i, l, m), at(i, l));
    for (const auto& [jl, v] : mi.p2) {
      p2.add(v - m[jl.first].p1.at(jl.second), at(i, jl.first, jl.second));
    }
    for (const auto& [jl, v] : mi.a2) {
      a2.add(v - m[jl.first].a1.at(jl.second), at(i, jl.first, jl.second));
    }
    for (const auto& [jl, v] : mi.n) {
      const auto [j, l] = jl;
      double target = mech.extended_group_demand(j, l, m);
      for (AgentId h : graph.neighbors(j)) {
        if (h != i) target += m[j].n.at({h, l});
      }
      n.add(v - target, at(i, j, l));
    }
    const GroupId k = net.group_of(i);
    for (LinkId l : net.links_of(i)) {
      if (graph.is_center(i, l)) {
        double target = m[graph.phi(i)].p2.at({i, l});
        for (AgentId j : net.group_users(k, l)) {
          if (j != i) target += m[j].p1.at(l);
        }
        w.add(mi.w.at(l) - target, at(i, l));
        const ZBar z = mech.zbar(i, l, m);
        z1.add(mi.z1.at(l) - z.max_demand, at(i, l));
        z2.add(mi.z2.at(l) - z.count, at(i, l));
      } else {
        w.add(mi.w.at(l) - m[graph.center(k, l)].w.at(l), at(i, l));
      }
    }
  }

  LemmaReport r = make("lemma2", tol);
  for (const Tracker& t : {q, yu, p2, w, n, z1, z2, a2}) r.entries.push_back(t.done());
  return r;
}

LemmaReport check_lemma3(const Mechanism& mech, const MessageProfile& m, double tol) {
  const auto& net = mech.network();
  const auto& graph = mech.graph();
  const std::vector<double> x = mech.allocation(m);
  const auto load = link_load(net, x);

  Tracker feas("feasibility");
  for (LinkId l : net.link_ids()) {
    feas.add(std::max(0.0, load.at(l) - net.capacity(l)), to_string(l));
  }
  for (AgentId i : net.agent_ids()) {
    if (x[i.index()] < 0.0) feas.add(x[i.index()], at(i));
  }

  // The remaining identities are consequences of the consensus equations and
  // are only binding when those hold.
  const bool consensus = check_lemma2(mech, m, tol).pass();
  Tracker share("group_share_identity", !consensus), fcons("f_consensus", !consensus),
      tele("telescoping", !consensus), tele_sum("telescoping_sum", !consensus);

  for (LinkId l : net.link_ids()) {
    for (GroupId k : net.groups_on(l)) {
      const auto& members = net.group_users(k, l);
      double top = 0.0;
      for (AgentId j : members) top = std::max(top, m[j].y);
      double count = 0.0;
      for (AgentId j : members) count += mech.indicator(m[j].y, top) ? 1.0 : 0.0;
      for (AgentId j : members) {
        const double expected = mech.indicator(m[j].y, top) ? m[j].y / count : 0.0;
        share.add(mech.extended_group_demand(j, l, m) - expected, at(j, l));
      }
    }
  }
  for (AgentId i : net.agent_ids()) {
    const RadialFactor rf = mech.f_and_r(i, m);
    for (LinkId l : net.link_ids()) {
      double total = 0.0, others = 0.0;
      for (AgentId h : net.agent_ids()) {
        const double yh = mech.extended_group_demand(h, l, m);
        total += yh;
        if (h != i) others += yh;
      }
      fcons.add(rf.f.at(l) - total, at(i, l));
      double nsum = 0.0;
      for (AgentId j : graph.neighbors(i)) {
        double sub = 0.0;
        for (AgentId h : net.agent_ids()) {
          if (h != i && graph.tree().next_hop(i, h) == j) sub += mech.extended_group_demand(h, l, m);
        }
        const double nij = m[i].n.at({j, l});
        tele.add(nij - sub, at(i, j, l));
        nsum += nij;
      }
      tele_sum.add(nsum - others, at(i, l));
    }
  }

  LemmaReport r = make("lemma3", tol);
  for (const Tracker& t : {feas, share, fcons, tele, tele_sum}) r.entries.push_back(t.done());
  return r;
}

LemmaReport check_lemma4(const Mechanism& mech, const MessageProfile& m, double tol) {
  mech.check_shape(m);
  const auto& net = mech.network();
  const auto& graph = mech.graph();
  Tracker w_eq("w_hat_agreement"), w_slack("link_slackness"), p_slack("group_slackness");
  Tracker relay_eq("relay_agreement"), relay_slack("relay_slackness");

  for (AgentId i : net.agent_ids()) {
    const RadialFactor rf = mech.f_and_r(i, m);
    for (LinkId l : net.links_of(i)) {
      const WQuantities wq = mech.w_quantities(i, l, m);
      w_eq.add(wq.w_hat - wq.w_bar_minus, at(i, l));
      w_slack.add(wq.w_bar_minus * (net.capacity(l) - rf.r * rf.f.at(l)), at(i, l));
      const double p2 = m[graph.phi(i)].p2.at({i, l});
      const double q = m[graph.phi(i)].q.at(i);
      p_slack.add(p2 * (mech.zbar(i, l, m).max_demand - q), at(i, l));
    }
    for (LinkId l : mech.relay_links(i)) {
      const double wbar = mech.w_bar_minus(i, l, m);
      relay_eq.add(m[i].w.at(l) - wbar, at(i, l));
      relay_slack.add(wbar * (net.capacity(l) - rf.r * rf.f.at(l)), at(i, l));
    }
  }

  LemmaReport r = make("lemma4", tol);
  for (const Tracker& t : {w_eq, w_slack, p_slack}) r.entries.push_back(t.done());
  if (mech.variant() == Variant::Relay) {
    r.entries.push_back(relay_eq.done());
    r.entries.push_back(relay_slack.done());
  }
  return r;
}

LemmaReport check_lemma5(const Mechanism& mech, const MessageProfile& m, double tol) {
  mech.check_shape(m);
  const auto& net = mech.network();
  Tracker st("stationarity");
  for (AgentId i : net.agent_ids()) {
    const double x = mech.allocation(i, m);
    const double vp = net.valuation(i).derivative(std::max(0.0, x));
    const double p = own_price_sum(mech, i, m);
    st.add(x > tol ? vp - p : std::max(0.0, vp - p), at(i));
  }
  LemmaReport r = make("lemma5", tol);
  r.entries.push_back(st.done());
  return r;
}

LemmaReport check_lemma6(const Mechanism& mech, const MessageProfile& m, double tol) {
  mech.check_shape(m);
  const auto& net = mech.network();
  Tracker ir("individual_rationality"), bb("budget_balance");
  double total_tax = 0.0;
  for (AgentId i : net.agent_ids()) {
    const double u = mech.utility(i, m);
    ir.add(std::max(0.0, net.valuation(i).value(0.0) - u), at(i));
    total_tax += mech.tax(i, m).total;
  }
  bb.add(std::max(0.0, -total_tax), "network");
  LemmaReport r = make("lemma6", tol);
  r.entries.push_back(ir.done());
  r.entries.push_back(bb.done());
  r.info["total_tax"] = total_tax;
  return r;
}

LemmaReport check_theorem1(const Mechanism& mech, const MessageProfile& m,
                           const OracleSolution& sol, double tol) {
  mech.check_shape(m);
  const auto& net = mech.network();
  Tracker alloc("allocation_gap"), b("capacity_gap", true), mu("mu_gap", true),
      lambda("lambda_gap", true);
  for (AgentId i : net.agent_ids()) {
    const RadialFactor rf = mech.f_and_r(i, m);
    alloc.add(rf.r * m[i].y - sol.x(i), at(i));
    for (LinkId l : net.links_of(i)) {
      b.add(rf.r * mech.zbar(i, l, m).max_demand - sol.b(net.group_of(i), l), at(i, l));
      mu.add(m[i].p1.at(l) - sol.mu(i, l), at(i, l));
      lambda.add(m[i].w.at(l) - sol.lambda(l), at(i, l));
    }
  }
  LemmaReport r = make("theorem1", tol);
  for (const Tracker& t : {alloc, b, mu, lambda}) r.entries.push_back(t.done());
  return r;
}

}  // namespace dmd
