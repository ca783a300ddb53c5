#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dmd/ids.hpp"
#include "dmd/network.hpp"

namespace dmd {

/// Primal-dual solution of the welfare problem in its (x, b) form.
struct OracleSolution {
  std::vector<double> x_star;
  std::map<std::pair<GroupId, LinkId>, double> b_star;
  std::map<LinkId, double> lambda_star;
  std::map<std::pair<AgentId, LinkId>, double> mu_star;
  int iterations = 0;

  double x(AgentId i) const { return x_star.at(i.index()); }
  double b(GroupId k, LinkId l) const { return b_star.at({k, l}); }
  double lambda(LinkId l) const { return lambda_star.at(l); }
  double mu(AgentId i, LinkId l) const { return mu_star.at({i, l}); }
};

struct SolverOptions {
  double tol = 1e-9;
  int max_iters = 1'000'000;
  /// Starting point as a fraction of the tightest per-group capacity share.
  /// Distinct values give independent solver runs.
  double initial_scale = 0.25;
};

/// Largest violation of each KKT condition family.
struct KktResidual {
  double primal_feasibility = 0.0;  // x >= 0, sum_k b <= c, x <= b
  double dual_feasibility = 0.0;    // lambda, mu >= 0
  double lambda_slackness = 0.0;    // lambda_l (c_l - sum_k b_k^l) = 0
  double mu_slackness = 0.0;        // mu_i^l (x_i - b_k^l) = 0
  double stationarity = 0.0;        // v'(x) = sum mu (x > 0), v'(0) <= sum mu
  double price_splitting = 0.0;     // lambda_l = sum_{i in G_k^l} mu_i^l

  double max() const;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

/// Solves the welfare problem with a primal-dual interior-point method and
/// cleans the result so that exact ties and zero rates are represented
/// exactly. Throws SolverError if the KKT residual cannot be brought under
/// `opts.tol` within `opts.max_iters` iterations.
OracleSolution solve_cp2(const MulticastNetwork& net, const SolverOptions& opts = {});

KktResidual kkt_residual(const MulticastNetwork& net, const OracleSolution& sol);

struct GridResult {
  std::vector<double> x;
  double welfare = 0.0;
  std::size_t points = 0;
};

/// Number of points the grid oracle would visit at this step.
double grid_size(const MulticastNetwork& net, double step);

/// Exhaustive search over per-link group capacities on the tight simplex
/// with resolution `step`; each agent receives the smallest capacity its
/// group holds on the links it uses. Throws std::length_error beyond 1e8
/// points.
GridResult grid_oracle(const MulticastNetwork& net, double step);

}  // namespace dmd
