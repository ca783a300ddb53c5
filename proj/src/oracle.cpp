#include "dmd/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace dmd {
namespace {

// Ties between rates are decided relative to this tolerance, matching the
// indicator convention used by the mechanism.
constexpr double kTieTol = 1e-9;
constexpr double kZeroRate = 1e-10;

// Variable layout: x_1..x_N followed by one b per (group, link) pair.
// Inequality rows: -x_i <= 0, sum_k b_k^l <= c^l, x_i - b_k(i)^l <= 0.
struct Layout {
  std::size_t n_agents = 0;
  std::size_t num_links = 0;
  std::vector<std::pair<GroupId, LinkId>> pairs;
  std::map<std::pair<GroupId, LinkId>, std::size_t> pair_col;
  std::vector<std::pair<AgentId, LinkId>> coupling;
  Eigen::MatrixXd A;
  Eigen::VectorXd h;

  std::size_t n_vars() const { return n_agents + pairs.size(); }
  std::size_t link_row(LinkId l) const { return n_agents + l.index(); }
  std::size_t coupling_row(std::size_t c) const { return n_agents + num_links + c; }
};

Layout make_layout(const MulticastNetwork& net) {
  Layout lay;
  lay.n_agents = net.num_agents();
  lay.num_links = net.num_links();
  for (LinkId l : net.link_ids()) {
    for (GroupId k : net.groups_on(l)) {
      lay.pair_col[{k, l}] = lay.n_agents + lay.pairs.size();
      lay.pairs.emplace_back(k, l);
    }
  }
  for (AgentId i : net.agent_ids()) {
    for (LinkId l : net.links_of(i)) lay.coupling.emplace_back(i, l);
  }
  const std::size_t m = lay.n_agents + lay.num_links + lay.coupling.size();
  lay.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                static_cast<Eigen::Index>(lay.n_vars()));
  lay.h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < lay.n_agents; ++i) lay.A(i, i) = -1.0;
  for (LinkId l : net.link_ids()) {
    const auto row = static_cast<Eigen::Index>(lay.link_row(l));
    for (GroupId k : net.groups_on(l)) lay.A(row, lay.pair_col.at({k, l})) = 1.0;
    lay.h(row) = net.capacity(l);
  }
  for (std::size_t c = 0; c < lay.coupling.size(); ++c) {
    const auto [i, l] = lay.coupling[c];
    const auto row = static_cast<Eigen::Index>(lay.coupling_row(c));
    lay.A(row, i.index()) = 1.0;
    lay.A(row, lay.pair_col.at({net.group_of(i), l})) = -1.0;
  }
  return lay;
}

bool tied(double a, double b) { return std::abs(a - b) <= kTieTol * std::max(1.0, std::abs(b)); }

OracleSolution extract(const MulticastNetwork& net, const Layout& lay, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& u) {
  OracleSolution sol;
  sol.x_star.resize(lay.n_agents);
  for (std::size_t i = 0; i < lay.n_agents; ++i) {
    sol.x_star[i] = z(i) < kZeroRate ? 0.0 : z(i);
  }
  auto group_max = [&](GroupId k, LinkId l) {
    double best = 0.0;
    for (AgentId j : net.group_users(k, l)) best = std::max(best, sol.x_star[j.index()]);
    return best;
  };
  for (const auto& kl : lay.pairs) sol.b_star[kl] = group_max(kl.first, kl.second);

  // An agent that sits at its bottleneck capacity (up to round-off) is set to
  // it exactly so that ties are exact ties.
  for (AgentId i : net.agent_ids()) {
    double bottleneck = std::numeric_limits<double>::infinity();
    for (LinkId l : net.links_of(i)) {
      bottleneck = std::min(bottleneck, sol.b_star.at({net.group_of(i), l}));
    }
    double& xi = sol.x_star[i.index()];
    if (xi > 0.0 && tied(xi, bottleneck)) xi = bottleneck;
  }
  for (const auto& kl : lay.pairs) sol.b_star[kl] = group_max(kl.first, kl.second);

  for (LinkId l : net.link_ids()) {
    sol.lambda_star[l] = std::max(0.0, u(static_cast<Eigen::Index>(lay.link_row(l))));
  }
  for (std::size_t c = 0; c < lay.coupling.size(); ++c) {
    const auto [i, l] = lay.coupling[c];
    double mu = std::max(0.0, u(static_cast<Eigen::Index>(lay.coupling_row(c))));
    const double b = sol.b_star.at({net.group_of(i), l});
    if (!tied(sol.x_star[i.index()], b)) mu = 0.0;
    sol.mu_star[{i, l}] = mu;
  }
  return sol;
}

}  // namespace

double KktResidual::max() const {
  return std::max({primal_feasibility, dual_feasibility, lambda_slackness, mu_slackness,
                   stationarity, price_splitting});
}

OracleSolution solve_cp2(const MulticastNetwork& net, const SolverOptions& opts) {
  const Layout lay = make_layout(net);
  const auto n = static_cast<Eigen::Index>(lay.n_vars());
  const auto m = lay.A.rows();
  const auto N = static_cast<Eigen::Index>(lay.n_agents);
  std::vector<double> alpha;
  for (const Agent& a : net.agents()) alpha.push_back(a.valuation.alpha);

  double share = std::numeric_limits<double>::infinity();
  for (LinkId l : net.link_ids()) {
    share = std::min(share, net.capacity(l) / static_cast<double>(net.groups_on(l).size()));
  }
  const double start = std::clamp(opts.initial_scale, 1e-3, 0.45) * share;
  Eigen::VectorXd z(n);
  z.head(N).setConstant(start);
  z.tail(n - N).setConstant(2.0 * start);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(m);

  auto gradient = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < N; ++i) g(i) = -alpha[i] / (1.0 + v(i));
    return g;
  };
  auto residual_norm = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& w, double t) {
    const Eigen::VectorXd s = lay.h - lay.A * v;
    const Eigen::VectorXd r_dual = gradient(v) + lay.A.transpose() * w;
    const Eigen::VectorXd r_cent = (w.array() * s.array() - 1.0 / t).matrix();
    return std::sqrt(r_dual.squaredNorm() + r_cent.squaredNorm());
  };

  constexpr double kMu = 10.0;
  constexpr double kGapTarget = 1e-14;
  constexpr double kDualTarget = 1e-13;
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const Eigen::VectorXd s = lay.h - lay.A * z;
    const double gap = s.dot(u);
    const Eigen::VectorXd grad = gradient(z);
    const double r_dual = (grad + lay.A.transpose() * u).norm();
    if (gap <= kGapTarget && r_dual <= kDualTarget) break;
    const double t = kMu * static_cast<double>(m) / gap;

    Eigen::MatrixXd H = lay.A.transpose() * (u.array() / s.array()).matrix().asDiagonal() * lay.A;
    for (Eigen::Index i = 0; i < N; ++i) H(i, i) += alpha[i] / ((1.0 + z(i)) * (1.0 + z(i)));
    const Eigen::VectorXd rhs =
        -grad - lay.A.transpose() * (1.0 / (t * s.array())).matrix();
    const Eigen::VectorXd dz = H.ldlt().solve(rhs);
    const Eigen::VectorXd Adz = lay.A * dz;
    const Eigen::VectorXd du =
        (-u.array() + 1.0 / (t * s.array()) + (u.array() / s.array()) * Adz.array()).matrix();

    double step = 1.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (du(j) < 0.0) step = std::min(step, -u(j) / du(j));
    }
    step *= 0.99;
    auto admissible = [&](double a) {
      const Eigen::VectorXd zn = z + a * dz;
      if (((lay.h - lay.A * zn).array() <= 0.0).any()) return false;
      return (zn.head(N).array() > -1.0).all();
    };
    while (step > 1e-16 && !admissible(step)) step *= 0.5;
    const double r0 = residual_norm(z, u, t);
    while (step > 1e-16 && residual_norm(z + step * dz, u + step * du, t) > (1.0 - 0.01 * step) * r0) {
      step *= 0.5;
    }
    if (step <= 1e-16) break;  // round-off floor
    z += step * dz;
    u += step * du;
  }

  OracleSolution sol = extract(net, lay, z, u);
  sol.iterations = iter;
  const double residual = kkt_residual(net, sol).max();
  if (!(residual <= opts.tol)) {
    throw SolverError("welfare solver did not reach KKT residual " + std::to_string(opts.tol) +
                          " (best " + std::to_string(residual) + ")",
                      residual);
  }
  return sol;
}

KktResidual kkt_residual(const MulticastNetwork& net, const OracleSolution& sol) {
  KktResidual r;
  auto bump = [](double& slot, double v) { slot = std::max(slot, v); };
  for (AgentId i : net.agent_ids()) bump(r.primal_feasibility, -sol.x(i));
  for (LinkId l : net.link_ids()) {
    double sum_b = 0.0;
    for (GroupId k : net.groups_on(l)) sum_b += sol.b(k, l);
    bump(r.primal_feasibility, sum_b - net.capacity(l));
    const double lambda = sol.lambda(l);
    bump(r.dual_feasibility, -lambda);
    bump(r.lambda_slackness, std::abs(lambda * (net.capacity(l) - sum_b)));
    for (GroupId k : net.groups_on(l)) {
      double mu_sum = 0.0;
      for (AgentId i : net.group_users(k, l)) {
        const double mu = sol.mu(i, l);
        mu_sum += mu;
        bump(r.primal_feasibility, sol.x(i) - sol.b(k, l));
        bump(r.dual_feasibility, -mu);
        bump(r.mu_slackness, std::abs(mu * (sol.x(i) - sol.b(k, l))));
      }
      bump(r.price_splitting, std::abs(lambda - mu_sum));
    }
  }
  for (AgentId i : net.agent_ids()) {
    double mu_sum = 0.0;
    for (LinkId l : net.links_of(i)) mu_sum += sol.mu(i, l);
    const double xi = sol.x(i);
    const double marginal = net.valuation(i).derivative(std::max(xi, 0.0));
    if (xi > 0.0) {
      bump(r.stationarity, std::abs(marginal - mu_sum));
    } else {
      bump(r.stationarity, std::max(0.0, marginal - mu_sum));
    }
  }
  return r;
}

namespace {

// All ways to split `total` units among `parts` slots.
void compositions(int total, int parts, std::vector<int>& current,
                  std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    current.push_back(total);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int first = 0; first <= total; ++first) {
    current.push_back(first);
    compositions(total - first, parts - 1, current, out);
    current.pop_back();
  }
}

double binomial(double n, double k) {
  double r = 1.0;
  for (int j = 1; j <= static_cast<int>(k); ++j) r *= (n - k + j) / j;
  return r;
}

int units_for(double capacity, double step) {
  return std::max(1, static_cast<int>(std::lround(capacity / step)));
}

}  // namespace

double grid_size(const MulticastNetwork& net, double step) {
  double total = 1.0;
  for (LinkId l : net.link_ids()) {
    const double k = static_cast<double>(net.groups_on(l).size());
    total *= binomial(units_for(net.capacity(l), step) + k - 1.0, k - 1.0);
  }
  return total;
}

GridResult grid_oracle(const MulticastNetwork& net, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (grid_size(net, step) > 1e8) {
    throw std::length_error("grid oracle refuses more than 1e8 points");
  }
  const auto links = net.link_ids();
  std::vector<std::vector<std::vector<int>>> choices(links.size());
  std::vector<double> unit(links.size());
  for (std::size_t n = 0; n < links.size(); ++n) {
    const int units = units_for(net.capacity(links[n]), step);
    unit[n] = net.capacity(links[n]) / units;
    std::vector<int> current;
    compositions(units, static_cast<int>(net.groups_on(links[n]).size()), current, choices[n]);
  }
  // Position of each agent's group within groups_on(l), per used link.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> slots(net.num_agents());
  for (AgentId i : net.agent_ids()) {
    for (LinkId l : net.links_of(i)) {
      const auto& gs = net.groups_on(l);
      const auto pos = static_cast<std::size_t>(
          std::find(gs.begin(), gs.end(), net.group_of(i)) - gs.begin());
      slots[i.index()].emplace_back(l.index(), pos);
    }
  }

  GridResult best;
  best.welfare = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> odometer(links.size(), 0);
  std::vector<double> x(net.num_agents());
  while (true) {
    for (std::size_t a = 0; a < x.size(); ++a) {
      double rate = std::numeric_limits<double>::infinity();
      for (const auto& [ln, pos] : slots[a]) {
        rate = std::min(rate, unit[ln] * choices[ln][odometer[ln]][pos]);
      }
      x[a] = std::isinf(rate) ? 0.0 : rate;
    }
    const double w = welfare(net, x);
    ++best.points;
    if (w > best.welfare) {
      best.welfare = w;
      best.x = x;
    }
    std::size_t d = 0;
    for (; d < odometer.size(); ++d) {
      if (++odometer[d] < choices[d].size()) break;
      odometer[d] = 0;
    }
    if (d == odometer.size()) break;
  }
  return best;
}

}  // namespace dmd
