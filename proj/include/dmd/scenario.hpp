#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dmd/game.hpp"
#include "dmd/mechanism.hpp"
#include "dmd/message_graph.hpp"
#include "dmd/network.hpp"
#include "dmd/oracle.hpp"
#include "dmd/verification.hpp"

namespace dmd {

/// Malformed scenario or profile input. The message names the offending
/// field, or the line and column for JSON syntax errors.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One instance plus everything needed to drive every subcommand.
struct Scenario {
  std::string name;
  MulticastNetwork net;
  UndirectedGraph message_network;
  std::optional<AgentId> tree_root;
  std::optional<std::vector<Edge>> tree_edges;
  GraphOverrides overrides;
  Variant variant = Variant::Base;
  SolverOptions solver;
  DynamicsOptions dynamics;
  double perturb = 0.01;
};

Scenario parse_scenario(const std::string& text, const std::string& name = "<input>");
/// Throws ScenarioError if the file cannot be read or parsed.
Scenario load_scenario(const std::string& path);

/// Network invariants, then the message-graph assumption the variant needs.
ValidationReport validate_scenario(const Scenario& sc);

/// Spanning tree (given edges, or breadth-first from the root, lowest id by
/// default) with phi and centers. Throws std::invalid_argument.
MessageGraph resolve_graph(const Scenario& sc);

Mechanism build_mechanism(const Scenario& sc);

/// Tree, phi, centers, variant, solver and dynamics settings as used.
nlohmann::json resolved_defaults(const Scenario& sc, const MessageGraph& graph);

nlohmann::json profile_to_json(const MessageProfile& m);
/// Every component of the mechanism's message shape must be present and no
/// others. Throws ScenarioError naming the first offending key.
MessageProfile profile_from_json(const Mechanism& mech, const nlohmann::json& j);

nlohmann::json report_to_json(const LemmaReport& r);
nlohmann::json kkt_to_json(const KktResidual& r);
nlohmann::json certificate_to_json(const NeCertificate& c);

/// Header "iter,agent_updated,welfare,x_hat_<id>...,load_<link>...,max_gain".
std::string trace_csv(const Mechanism& mech, const DynamicsTrace& trace);

}  // namespace dmd
