#pragma once

#include <map>
#include <string>
#include <vector>

#include "dmd/mechanism.hpp"
#include "dmd/message.hpp"
#include "dmd/oracle.hpp"

namespace dmd {

/// Largest residual of one equation family and where it occurs. Soft entries
/// are reported but do not affect the verdict.
struct ResidualEntry {
  std::string name;
  double residual = 0.0;
  std::string where;
  bool soft = false;
};

struct LemmaReport {
  std::string id;
  double tolerance = 0.0;
  std::vector<ResidualEntry> entries;
  /// Informational values such as total tax; never part of the verdict.
  std::map<std::string, double> info;

  bool pass() const;
  /// Residual of the named entry; throws std::out_of_range if absent.
  double residual(const std::string& name) const;
  double max_residual() const;
  /// Names of hard entries above tolerance.
  std::vector<std::string> failing() const;
};

/// Consensus equations satisfied at every equilibrium: q proxies, group
/// demand proxies, p2 proxies, the two-case w equation, summary recursion,
/// z1 and z2 at centers, a2 proxies.
LemmaReport check_lemma2(const Mechanism& mech, const MessageProfile& m, double tol = 1e-9);

/// Feasibility of the allocation. When the consensus equations hold, also
/// the group-share identity, f consensus, and summary telescoping.
LemmaReport check_lemma3(const Mechanism& mech, const MessageProfile& m, double tol = 1e-9);

/// w-hat agreement, link-price slackness and group-price slackness (and the
/// relay analogues when relays are present).
LemmaReport check_lemma4(const Mechanism& mech, const MessageProfile& m, double tol = 1e-9);

/// Stationarity: v'(x) equals the sum of own link prices when x > 0 and
/// does not exceed it otherwise.
LemmaReport check_lemma5(const Mechanism& mech, const MessageProfile& m, double tol = 1e-6);

/// Individual rationality per agent and weak budget balance.
LemmaReport check_lemma6(const Mechanism& mech, const MessageProfile& m, double tol = 1e-9);

/// Allocation equals the welfare optimum (hard); group capacities, per-agent
/// and per-link prices compared with the duals (soft).
LemmaReport check_theorem1(const Mechanism& mech, const MessageProfile& m,
                           const OracleSolution& sol, double tol = 1e-6);

}  // namespace dmd
