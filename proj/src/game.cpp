#include "dmd/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dmd {

namespace {

double sq(double v) { return v * v; }

// Minimizer of s^2 + beta*s + gamma*p over p >= 0, a >= eps_a, where
// s = c + p + a. Only the sum p + a matters unless gamma > 0, in which case p
// is pushed to zero. Otherwise the pair closest to (p0, a0) is kept, so a
// profile already at the optimum is left untouched.
std::pair<double, double> price_block(double c, double beta, double gamma, double p0, double a0,
                                      double eps_a) {
  const double s = std::max(-beta / 2.0, c + eps_a);
  const double total = s - c;
  if (gamma > 0.0) return {0.0, total};
  const double shift = (total - p0 - a0) / 2.0;
  double p = p0 + shift;
  double a = a0 + shift;
  if (p < 0.0) {
    p = 0.0;
    a = total;
  } else if (a < eps_a) {
    a = eps_a;
    p = total - eps_a;
  }
  return {p, a};
}

}  // namespace

AgentMessage best_response(const Mechanism& mech, AgentId i, const MessageProfile& m) {
  const auto& net = mech.network();
  const auto& graph = mech.graph();
  const auto& prm = mech.params();
  const AgentId phi = graph.phi(i);
  const AgentMessage& mphi = m[phi];
  const GroupId k = net.group_of(i);
  AgentMessage out = m[i];

  const RadialFactor rf = mech.f_and_r(i, m);
  double price = 0.0;
  for (LinkId l : net.links_of(i)) price += mphi.p2.at({i, l});
  const double x = net.valuation(i).inverse_derivative(price);
  out.y = std::isfinite(x) ? std::clamp(x / rf.r, 0.0, prm.y_max) : prm.y_max;

  for (auto& [j, v] : out.q) v = std::max(0.0, m[j].y);
  for (auto& [jl, v] : out.p2) v = std::max(0.0, m[jl.first].p1.at(jl.second));
  for (auto& [jl, v] : out.a2) v = std::max(prm.eps_a, m[jl.first].a1.at(jl.second));
  for (auto& [jl, v] : out.n) {
    const auto [j, l] = jl;
    double target = mech.extended_group_demand(j, l, m);
    for (AgentId h : graph.neighbors(j)) {
      if (h != i) target += m[j].n.at({h, l});
    }
    v = std::max(0.0, target);
  }
  for (auto& [l, v] : out.y_under) v = std::max(0.0, mech.own_group_share(i, l, m));
  for (LinkId l : graph.centered_links(i)) {
    const ZBar z = mech.zbar(i, l, m);
    out.z1.at(l) = std::max(0.0, z.max_demand);
    out.z2.at(l) = std::max(0.0, z.count);
  }

  for (LinkId l : net.links_of(i)) {
    const double p2 = mphi.p2.at({i, l});
    if (graph.is_center(i, l)) {
      double others = 0.0;
      for (AgentId j : net.group_users(k, l)) {
        if (j != i) others += m[j].p1.at(l);
      }
      out.w.at(l) = std::max(0.0, p2 + others);
    } else {
      out.w.at(l) = std::max(0.0, m[graph.center(k, l)].w.at(l));
    }

    const WQuantities wq = mech.w_quantities(i, l, m);
    const double p0 = m[i].p1.at(l);
    const double a0 = m[i].a1.at(l);
    const double c = wq.w_hat - wq.w_bar_minus - p0 - a0;
    const double beta = wq.w_bar_minus * sq(net.capacity(l) - rf.r * rf.f.at(l));
    // A proxy that ties the group maximum within the indicator tolerance
    // exerts no pull; otherwise round-off alone would zero the price.
    const double zmax = mech.zbar(i, l, m).max_demand;
    const double gamma = mech.indicator(mphi.q.at(i), zmax) ? 0.0 : p2 * sq(zmax - mphi.q.at(i));
    const auto [p, a] = price_block(c, beta, gamma, p0, a0, prm.eps_a);
    out.p1.at(l) = p;
    out.a1.at(l) = a;
  }

  for (LinkId l : mech.relay_links(i)) {
    const double wbar = mech.w_bar_minus(i, l, m);
    const double slack = net.capacity(l) - rf.r * rf.f.at(l);
    out.w.at(l) = std::max(0.0, wbar - wbar * sq(slack) / 2.0);
  }
  return out;
}

double deviation_gain(const Mechanism& mech, AgentId i, const MessageProfile& m) {
  MessageProfile dev = m;
  dev[i] = best_response(mech, i, m);
  return mech.utility(i, dev) - mech.utility(i, m);
}

Schedule parse_schedule(const std::string& s) {
  if (s == "round_robin") return Schedule::RoundRobin;
  if (s == "random") return Schedule::Random;
  throw std::invalid_argument("unknown schedule '" + s + "' (expected round_robin or random)");
}

std::string to_string(Schedule s) { return s == Schedule::RoundRobin ? "round_robin" : "random"; }

std::string to_string(DynamicsStatus s) {
  return s == DynamicsStatus::FixedPoint ? "fixed_point" : "iteration_cap";
}

namespace {

TraceRecord snapshot(const Mechanism& mech, const MessageProfile& m, int iter, int agent,
                     double change) {
  TraceRecord rec;
  rec.iter = iter;
  rec.agent_updated = agent;
  rec.change = change;
  rec.x_hat = mech.allocation(m);
  rec.welfare = welfare(mech.network(), rec.x_hat);
  rec.load = link_load(mech.network(), rec.x_hat);
  for (AgentId i : mech.network().agent_ids()) {
    rec.gains.push_back(deviation_gain(mech, i, m));
  }
  rec.max_gain = rec.gains.empty() ? 0.0 : *std::max_element(rec.gains.begin(), rec.gains.end());
  return rec;
}

}  // namespace

DynamicsResult run_dynamics(const Mechanism& mech, const MessageProfile& m0,
                            const DynamicsOptions& opts) {
  mech.check_shape(m0);
  DynamicsResult res;
  res.profile = m0;
  res.trace.records.push_back(snapshot(mech, m0, 0, 0, 0.0));

  std::vector<AgentId> order = mech.network().agent_ids();
  std::mt19937_64 rng(opts.seed);
  int iter = 0;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    if (opts.schedule == Schedule::Random) std::shuffle(order.begin(), order.end(), rng);
    double sweep_change = 0.0;
    for (AgentId i : order) {
      AgentMessage next = best_response(mech, i, res.profile);
      const double change = max_abs_diff(next, res.profile[i]);
      sweep_change = std::max(sweep_change, change);
      res.profile[i] = std::move(next);
      res.trace.records.push_back(snapshot(mech, res.profile, ++iter, i.value, change));
    }
    res.sweeps = sweep + 1;
    if (sweep_change <= opts.tol) {
      res.status = DynamicsStatus::FixedPoint;
      return res;
    }
  }
  res.status = DynamicsStatus::IterationCap;
  return res;
}

MessageProfile perturb_profile(const Mechanism& mech, const MessageProfile& m, double rel,
                               std::uint64_t seed) {
  mech.check_shape(m);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  MessageProfile out = m;
  const double eps_a = mech.params().eps_a;
  for (AgentId i : mech.network().agent_ids()) {
    for_each_component(out[i], [&](const std::string& key, double& v) {
      v *= 1.0 + rel * unit(rng);
      v = key.starts_with("a") ? std::max(v, eps_a) : std::max(v, 0.0);
    });
  }
  return out;
}

MessageProfile construct_ne(const Mechanism& mech, const OracleSolution& sol) {
  const auto& net = mech.network();
  const auto& graph = mech.graph();

  const auto load = link_load(net, sol.x_star);
  bool tight = false;
  for (LinkId l : net.link_ids()) {
    const double c = net.capacity(l);
    if (std::abs(load.at(l) - c) <= 1e-9 * std::max(1.0, c)) tight = true;
  }
  if (!tight) throw std::invalid_argument("no tight link at the supplied solution");

  MessageProfile m = mech.blank_profile();
  for (AgentId i : net.agent_ids()) m[i].y = sol.x(i);
  for (AgentId i : net.agent_ids()) {
    for (auto& [j, v] : m[i].q) v = m[j].y;
  }
  for (AgentId i : net.agent_ids()) {
    for (LinkId l : graph.centered_links(i)) {
      const ZBar z = mech.zbar(i, l, m);
      m[i].z1.at(l) = z.max_demand;
      m[i].z2.at(l) = z.count;
    }
  }
  for (AgentId i : net.agent_ids()) {
    for (auto& [l, v] : m[i].y_under) v = mech.own_group_share(i, l, m);
  }
  for (AgentId i : net.agent_ids()) {
    for (auto& [jl, v] : m[i].n) {
      const auto [j, l] = jl;
      double s = 0.0;
      for (AgentId h : net.agent_ids()) {
        if (h != i && graph.tree().next_hop(i, h) == j) s += mech.extended_group_demand(h, l, m);
      }
      v = s;
    }
  }
  for (AgentId i : net.agent_ids()) {
    for (auto& [l, v] : m[i].p1) v = sol.mu(i, l);
    for (auto& [l, v] : m[i].a1) v = 1.0;
  }
  for (AgentId i : net.agent_ids()) {
    for (auto& [jl, v] : m[i].p2) v = m[jl.first].p1.at(jl.second);
    for (auto& [jl, v] : m[i].a2) v = m[jl.first].a1.at(jl.second);
  }
  for (const auto& [kl, c] : graph.centers()) {
    const auto [k, l] = kl;
    double others = 0.0;
    for (AgentId j : net.group_users(k, l)) {
      if (j != c) others += m[j].p1.at(l);
    }
    m[c].w.at(l) = m[graph.phi(c)].p2.at({c, l}) + others;
  }
  for (AgentId i : net.agent_ids()) {
    for (LinkId l : net.links_of(i)) {
      if (!graph.is_center(i, l)) m[i].w.at(l) = m[graph.center(net.group_of(i), l)].w.at(l);
    }
    for (LinkId l : mech.relay_links(i)) m[i].w.at(l) = sol.lambda(l);
  }
  return m;
}

double NeCertificate::max_gain() const {
  return gains.empty() ? 0.0 : *std::max_element(gains.begin(), gains.end());
}

NeCertificate epsilon_ne_check(const Mechanism& mech, const MessageProfile& m, double eps) {
  mech.check_shape(m);
  NeCertificate cert;
  cert.tolerance = eps;
  for (AgentId i : mech.network().agent_ids()) cert.gains.push_back(deviation_gain(mech, i, m));
  cert.pass = cert.max_gain() <= eps;
  return cert;
}

}  // namespace dmd
