#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dmd/mechanism.hpp"
#include "dmd/message.hpp"
#include "dmd/oracle.hpp"

namespace dmd {

/// Agent i's utility-maximizing message against m_{-i}. The utility is
/// separable across message coordinates, so each block is solved on its own:
/// consensus components take their targets, y solves the first-order
/// condition in closed form, and each (p1, a1) pair is placed at the
/// minimizer of its tax terms.
AgentMessage best_response(const Mechanism& mech, AgentId i, const MessageProfile& m);

/// u_i(best_response, m_{-i}) - u_i(m); never meaningfully negative.
double deviation_gain(const Mechanism& mech, AgentId i, const MessageProfile& m);

enum class Schedule { RoundRobin, Random };
Schedule parse_schedule(const std::string& s);
std::string to_string(Schedule s);

struct DynamicsOptions {
  Schedule schedule = Schedule::RoundRobin;
  std::uint64_t seed = 0;
  int max_sweeps = 500;
  /// Sup-norm profile change over one sweep at or below which the run stops.
  double tol = 1e-12;
};

struct TraceRecord {
  int iter = 0;            // 0 for the starting profile, then one per update
  int agent_updated = 0;   // 0 for the starting profile
  double welfare = 0.0;
  std::vector<double> x_hat;
  std::map<LinkId, double> load;
  std::vector<double> gains;
  double max_gain = 0.0;
  double change = 0.0;     // sup-norm change of the updated message
};

struct DynamicsTrace {
  std::vector<TraceRecord> records;
};

enum class DynamicsStatus { FixedPoint, IterationCap };
std::string to_string(DynamicsStatus s);

struct DynamicsResult {
  MessageProfile profile;
  DynamicsTrace trace;
  DynamicsStatus status = DynamicsStatus::IterationCap;
  int sweeps = 0;
};

/// Sequential best-response sweeps; each update sees the latest messages.
DynamicsResult run_dynamics(const Mechanism& mech, const MessageProfile& m0,
                            const DynamicsOptions& opts = {});

/// Multiplies every component by 1 + rel * u with u uniform on [-1, 1], then
/// projects back into the message space.
MessageProfile perturb_profile(const Mechanism& mech, const MessageProfile& m, double rel,
                               std::uint64_t seed);

/// Equilibrium profile built from a solution of the welfare problem: rates at
/// scale one, consensus messages at their targets, prices from the duals.
/// Throws std::invalid_argument if no link is tight at the solution.
MessageProfile construct_ne(const Mechanism& mech, const OracleSolution& sol);

struct NeCertificate {
  std::vector<double> gains;
  double tolerance = 0.0;
  bool pass = false;

  double max_gain() const;
};

NeCertificate epsilon_ne_check(const Mechanism& mech, const MessageProfile& m, double eps);

}  // namespace dmd
