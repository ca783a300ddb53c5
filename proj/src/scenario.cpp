#include "dmd/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dmd {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ScenarioError(where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

// Accepts 3, "3", or the prefixed form ("l3", "g3") for links and groups.
int prefixed_id(const json& v, char prefix, const std::string& where) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (!s.empty() && s[0] == prefix) s.erase(0, 1);
    try {
      std::size_t used = 0;
      const int id = std::stoi(s, &used);
      if (used == s.size()) return id;
    } catch (const std::exception&) {
    }
  }
  fail(where, "expected an id");
}

AgentId agent_id(const json& v, const std::string& where) { return AgentId{prefixed_id(v, '\0', where)}; }
GroupId group_id(const json& v, const std::string& where) { return GroupId{prefixed_id(v, 'g', where)}; }
LinkId link_id(const json& v, const std::string& where) { return LinkId{prefixed_id(v, 'l', where)}; }

std::vector<Edge> edge_list(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of [a, b] pairs");
  std::vector<Edge> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string at = where + "[" + std::to_string(k) + "]";
    if (!v[k].is_array() || v[k].size() != 2) fail(at, "expected a pair [a, b]");
    out.emplace_back(agent_id(v[k][0], at), agent_id(v[k][1], at));
  }
  return out;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json edges_json(const std::vector<Edge>& edges) {
  json out = json::array();
  for (const auto& [a, b] : edges) out.push_back({a.value, b.value});
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ScenarioError(name + ":" + std::to_string(line) + ":" + std::to_string(col) +
                        ": parse error");
  }
  if (!doc.is_object()) fail(name, "top level must be an object");
  if (!doc.contains("message_network")) throw ScenarioError("message network required");

  Scenario sc;
  sc.name = name;

  std::vector<Agent> agents;
  const json& ja = require(doc, "agents", name);
  if (!ja.is_array()) fail("agents", "expected an array");
  for (std::size_t k = 0; k < ja.size(); ++k) {
    const std::string at = "agents[" + std::to_string(k) + "]";
    Agent a;
    a.id = agent_id(require(ja[k], "id", at), at + ".id");
    a.group = group_id(require(ja[k], "group", at), at + ".group");
    const json& jv = require(ja[k], "valuation", at);
    const std::string vat = at + ".valuation";
    if (jv.contains("family")) {
      const json& fam = jv["family"];
      if (!fam.is_string() || (fam != "log" && fam != "log_linear")) {
        fail(vat + ".family", "unsupported valuation family (expected \"log\")");
      }
    }
    a.valuation.alpha = number(require(jv, "alpha", vat), vat + ".alpha");
    agents.push_back(a);
  }

  std::vector<Link> links;
  std::map<LinkId, std::set<AgentId>> usage;
  const json& jl = require(doc, "links", name);
  if (!jl.is_array()) fail("links", "expected an array");
  for (std::size_t k = 0; k < jl.size(); ++k) {
    const std::string at = "links[" + std::to_string(k) + "]";
    Link l;
    l.id = link_id(require(jl[k], "id", at), at + ".id");
    l.capacity = number(require(jl[k], "capacity", at), at + ".capacity");
    const json& ju = require(jl[k], "users", at);
    if (!ju.is_array()) fail(at + ".users", "expected an array");
    auto& users = usage[l.id];
    for (std::size_t u = 0; u < ju.size(); ++u) {
      users.insert(agent_id(ju[u], at + ".users[" + std::to_string(u) + "]"));
    }
    links.push_back(l);
  }

  try {
    sc.net = MulticastNetwork(std::move(agents), std::move(links), std::move(usage));
  } catch (const std::invalid_argument& e) {
    fail(name, e.what());
  }

  const json& mn = doc["message_network"];
  sc.message_network.num_nodes = sc.net.num_agents();
  sc.message_network.edges = edge_list(require(mn, "edges", "message_network"), "message_network.edges");

  if (doc.contains("overrides")) {
    const json& ov = doc["overrides"];
    if (!ov.is_object()) fail("overrides", "expected an object");
    if (ov.contains("tree_root") && ov.contains("tree_edges")) {
      fail("overrides", "give tree_root or tree_edges, not both");
    }
    if (ov.contains("tree_root")) sc.tree_root = agent_id(ov["tree_root"], "overrides.tree_root");
    if (ov.contains("tree_edges")) sc.tree_edges = edge_list(ov["tree_edges"], "overrides.tree_edges");
    if (ov.contains("phi")) {
      const json& jp = ov["phi"];
      if (!jp.is_object()) fail("overrides.phi", "expected an object keyed by agent id");
      for (const auto& [key, val] : jp.items()) {
        const std::string at = "overrides.phi." + key;
        sc.overrides.phi[agent_id(json(key), at)] = agent_id(val, at);
      }
    }
    if (ov.contains("centers")) {
      const json& jc = ov["centers"];
      if (!jc.is_array()) fail("overrides.centers", "expected an array");
      for (std::size_t k = 0; k < jc.size(); ++k) {
        const std::string at = "overrides.centers[" + std::to_string(k) + "]";
        const GroupId g = group_id(require(jc[k], "group", at), at + ".group");
        const LinkId l = link_id(require(jc[k], "link", at), at + ".link");
        sc.overrides.centers[{g, l}] = agent_id(require(jc[k], "agent", at), at + ".agent");
      }
    }
  }

  if (doc.contains("variant")) {
    if (!doc["variant"].is_string()) fail("variant", "expected a string");
    try {
      sc.variant = parse_variant(doc["variant"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail("variant", e.what());
    }
  }

  if (doc.contains("solver")) {
    const json& js = doc["solver"];
    if (js.contains("tol")) sc.solver.tol = number(js["tol"], "solver.tol");
    if (js.contains("max_iters")) sc.solver.max_iters = integer(js["max_iters"], "solver.max_iters");
  }

  if (doc.contains("dynamics")) {
    const json& jd = doc["dynamics"];
    if (jd.contains("schedule")) {
      if (!jd["schedule"].is_string()) fail("dynamics.schedule", "expected a string");
      try {
        sc.dynamics.schedule = parse_schedule(jd["schedule"].get<std::string>());
      } catch (const std::invalid_argument& e) {
        fail("dynamics.schedule", e.what());
      }
    }
    if (jd.contains("seed")) sc.dynamics.seed = static_cast<std::uint64_t>(integer(jd["seed"], "dynamics.seed"));
    if (jd.contains("perturb")) sc.perturb = number(jd["perturb"], "dynamics.perturb");
    if (jd.contains("max_iters")) sc.dynamics.max_sweeps = integer(jd["max_iters"], "dynamics.max_iters");
    if (jd.contains("tol")) sc.dynamics.tol = number(jd["tol"], "dynamics.tol");
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

MessageGraph resolve_graph(const Scenario& sc) {
  for (const auto& [a, b] : sc.message_network.edges) {
    const int n = static_cast<int>(sc.net.num_agents());
    if (a.value < 1 || a.value > n || b.value < 1 || b.value > n) {
      throw std::invalid_argument("message network edge names an unknown agent");
    }
  }
  SpanningTree tree;
  if (sc.tree_edges) {
    std::set<std::pair<AgentId, AgentId>> allowed;
    for (auto [a, b] : sc.message_network.edges) allowed.insert({std::min(a, b), std::max(a, b)});
    for (auto [a, b] : *sc.tree_edges) {
      if (!allowed.contains({std::min(a, b), std::max(a, b)})) {
        throw std::invalid_argument("tree edge " + to_string(a) + "-" + to_string(b) +
                                    " is not in the message network");
      }
    }
    tree = SpanningTree::from_edges(sc.net.num_agents(), *sc.tree_edges);
  } else {
    tree = build_spanning_tree(sc.message_network, sc.tree_root.value_or(AgentId{1}));
  }
  return assign_phi_and_centers(sc.net, tree, sc.overrides);
}

ValidationReport validate_scenario(const Scenario& sc) {
  ValidationReport rep = validate_network(sc.net);
  if (!rep.ok()) return rep;
  try {
    const MessageGraph g = resolve_graph(sc);
    const AssumptionReport a = sc.variant == Variant::Base ? check_assumption1(sc.net, g.tree())
                                                           : check_assumption2(sc.net, g.tree());
    rep.violations.insert(rep.violations.end(), a.failures.begin(), a.failures.end());
  } catch (const std::exception& e) {
    rep.violations.push_back(e.what());
  }
  return rep;
}

Mechanism build_mechanism(const Scenario& sc) {
  return Mechanism(sc.net, resolve_graph(sc), sc.variant);
}

json resolved_defaults(const Scenario& sc, const MessageGraph& graph) {
  json out;
  out["tree_edges"] = edges_json(graph.tree().edges());
  if (sc.tree_root) out["tree_root"] = sc.tree_root->value;
  else if (!sc.tree_edges) out["tree_root"] = 1;
  json phi = json::object();
  for (const auto& [i, j] : graph.phi_map()) phi[to_string(i)] = j.value;
  out["phi"] = phi;
  json centers = json::array();
  for (const auto& [kl, c] : graph.centers()) {
    centers.push_back({{"group", kl.first.value}, {"link", to_string(kl.second)}, {"agent", c.value}});
  }
  out["centers"] = centers;
  out["variant"] = to_string(sc.variant);
  out["solver"] = {{"tol", sc.solver.tol}, {"max_iters", sc.solver.max_iters}};
  out["dynamics"] = {{"schedule", to_string(sc.dynamics.schedule)},
                     {"seed", sc.dynamics.seed},
                     {"perturb", sc.perturb},
                     {"max_iters", sc.dynamics.max_sweeps},
                     {"tol", sc.dynamics.tol}};
  return out;
}

json profile_to_json(const MessageProfile& m) {
  json out = json::object();
  for (std::size_t k = 0; k < m.size(); ++k) {
    json msg = json::object();
    for_each_component(m.messages()[k], [&](const std::string& key, const double& v) { msg[key] = v; });
    out[std::to_string(k + 1)] = msg;
  }
  return out;
}

MessageProfile profile_from_json(const Mechanism& mech, const json& j) {
  if (!j.is_object()) throw ScenarioError("profile: expected an object keyed by agent id");
  MessageProfile m = mech.blank_profile();
  for (const auto& [key, val] : j.items()) {
    const AgentId i = agent_id(json(key), "profile." + key);
    if (i.value < 1 || i.index() >= m.size()) throw ScenarioError("profile." + key + ": unknown agent");
  }
  for (AgentId i : mech.network().agent_ids()) {
    const std::string at = "profile." + to_string(i);
    const json& jm = require(j, to_string(i).c_str(), "profile");
    if (!jm.is_object()) fail(at, "expected an object");
    std::size_t seen = 0;
    for_each_component(m[i], [&](const std::string& key, double& v) {
      auto it = jm.find(key);
      if (it == jm.end()) fail(at, "missing component " + key);
      v = number(*it, at + "." + key);
      ++seen;
    });
    if (seen != jm.size()) {
      for (const auto& [key, val] : jm.items()) {
        bool known = false;
        for_each_component(m[i], [&](const std::string& k, double&) { known = known || k == key; });
        if (!known) fail(at, "unexpected component " + key);
      }
    }
  }
  try {
    mech.check_shape(m);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("profile: ") + e.what());
  }
  return m;
}

json report_to_json(const LemmaReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"name", e.name},
                       {"residual", e.residual},
                       {"where", e.where},
                       {"soft", e.soft},
                       {"pass", e.soft || e.residual <= r.tolerance}});
  }
  json out = {{"id", r.id}, {"tolerance", r.tolerance}, {"pass", r.pass()}, {"entries", entries}};
  if (!r.info.empty()) out["info"] = r.info;
  return out;
}

json kkt_to_json(const KktResidual& r) {
  return {{"primal_feasibility", r.primal_feasibility},
          {"dual_feasibility", r.dual_feasibility},
          {"lambda_slackness", r.lambda_slackness},
          {"mu_slackness", r.mu_slackness},
          {"stationarity", r.stationarity},
          {"price_splitting", r.price_splitting},
          {"max", r.max()}};
}

json certificate_to_json(const NeCertificate& c) {
  return {{"gains", c.gains}, {"max_gain", c.max_gain()}, {"tolerance", c.tolerance}, {"pass", c.pass}};
}

std::string trace_csv(const Mechanism& mech, const DynamicsTrace& trace) {
  std::ostringstream os;
  os << "iter,agent_updated,welfare";
  for (AgentId i : mech.network().agent_ids()) os << ",x_hat_" << to_string(i);
  for (LinkId l : mech.network().link_ids()) os << ",load_" << to_string(l);
  os << ",max_gain\n";
  for (const auto& rec : trace.records) {
    os << rec.iter << ',' << rec.agent_updated << ',' << format_double(rec.welfare);
    for (double x : rec.x_hat) os << ',' << format_double(x);
    for (const auto& [l, v] : rec.load) os << ',' << format_double(v);
    os << ',' << format_double(rec.max_gain) << '\n';
  }
  return os.str();
}

}  // namespace dmd
