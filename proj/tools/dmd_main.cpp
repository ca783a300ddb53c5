// dmd: command-line driver for the distributed multicast mechanism.
//
// Exit codes: 0 success, 1 bad input, 2 a check failed, 3 no convergence.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dmd/game.hpp"
#include "dmd/mechanism.hpp"
#include "dmd/oracle.hpp"
#include "dmd/scenario.hpp"
#include "dmd/verification.hpp"

using nlohmann::json;
using namespace dmd;

namespace {

constexpr int kOk = 0;
constexpr int kInput = 1;
constexpr int kCheck = 2;
constexpr int kNoConvergence = 3;

constexpr double kEpsNe = 1e-6;
constexpr double kConsensusTol = 1e-9;
constexpr double kOptTol = 1e-6;
constexpr double kDynamicsTol = 1e-4;

struct Input {
  Scenario sc;
  MessageGraph graph;
};

// Loads and validates; prints the reason and returns nullopt on failure.
std::optional<Input> load(const std::string& path) {
  try {
    Scenario sc = load_scenario(path);
    const ValidationReport rep = validate_scenario(sc);
    if (!rep.ok()) {
      for (const auto& v : rep.violations) std::cerr << "validation error: " << v << '\n';
      return std::nullopt;
    }
    MessageGraph g = resolve_graph(sc);
    return Input{std::move(sc), std::move(g)};
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return std::nullopt;
  }
}

json solution_json(const MulticastNetwork& net, const OracleSolution& sol) {
  json x = json::object(), lambda = json::object(), mu = json::object(), b = json::object();
  for (AgentId i : net.agent_ids()) x[to_string(i)] = sol.x(i);
  for (const auto& [l, v] : sol.lambda_star) lambda[to_string(l)] = v;
  for (const auto& [il, v] : sol.mu_star) mu[to_string(il.first) + "." + to_string(il.second)] = v;
  for (const auto& [kl, v] : sol.b_star) b[to_string(kl.first) + "." + to_string(kl.second)] = v;
  return {{"x_star", x}, {"lambda_star", lambda}, {"mu_star", mu}, {"b_star", b},
          {"iterations", sol.iterations}};
}

json allocation_json(const MulticastNetwork& net, const std::vector<double>& x) {
  json out = json::object();
  for (AgentId i : net.agent_ids()) out[to_string(i)] = x[i.index()];
  return out;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

std::vector<LemmaReport> lemma_suite(const Mechanism& mech, const MessageProfile& m) {
  return {check_lemma2(mech, m, kConsensusTol), check_lemma3(mech, m, kConsensusTol),
          check_lemma4(mech, m, kConsensusTol), check_lemma5(mech, m, kOptTol),
          check_lemma6(mech, m, kConsensusTol)};
}

int cmd_validate(const std::string& path) {
  auto in = load(path);
  if (!in) return kInput;
  print({{"scenario", in->sc.name}, {"valid", true}, {"resolved", resolved_defaults(in->sc, in->graph)}});
  return kOk;
}

int cmd_solve(const std::string& path) {
  auto in = load(path);
  if (!in) return kInput;
  try {
    const OracleSolution sol = solve_cp2(in->sc.net, in->sc.solver);
    const KktResidual kkt = kkt_residual(in->sc.net, sol);
    json out = {{"scenario", in->sc.name},
                {"resolved", resolved_defaults(in->sc, in->graph)},
                {"solution", solution_json(in->sc.net, sol)},
                {"welfare", welfare(in->sc.net, sol.x_star)},
                {"kkt", kkt_to_json(kkt)}};
    print(out);
    return kkt.max() <= in->sc.solver.tol ? kOk : kCheck;
  } catch (const SolverError& e) {
    std::cerr << "solver did not converge: " << e.what() << " (best residual "
              << e.best_residual() << ")\n";
    return kNoConvergence;
  }
}

int cmd_construct(const std::string& path, const std::string& out_path) {
  auto in = load(path);
  if (!in) return kInput;
  OracleSolution sol;
  try {
    sol = solve_cp2(in->sc.net, in->sc.solver);
  } catch (const SolverError& e) {
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return kNoConvergence;
  }
  try {
    const Mechanism mech(in->sc.net, in->graph, in->sc.variant);
    const MessageProfile m = construct_ne(mech, sol);
    json reports = json::array();
    bool ok = true;
    for (const auto& r : lemma_suite(mech, m)) {
      ok = ok && r.pass();
      reports.push_back(report_to_json(r));
    }
    const LemmaReport thm = check_theorem1(mech, m, sol, kOptTol);
    const NeCertificate cert = epsilon_ne_check(mech, m, kEpsNe);
    ok = ok && thm.pass() && cert.pass;
    if (!out_path.empty()) {
      std::ofstream f(out_path);
      if (!f) {
        std::cerr << "error: cannot write " << out_path << '\n';
        return kInput;
      }
      f << profile_to_json(m).dump(2) << '\n';
    }
    print({{"scenario", in->sc.name},
           {"resolved", resolved_defaults(in->sc, in->graph)},
           {"x_star", allocation_json(in->sc.net, sol.x_star)},
           {"x_hat", allocation_json(in->sc.net, mech.allocation(m))},
           {"lemmas", reports},
           {"theorem1", report_to_json(thm)},
           {"certificate", certificate_to_json(cert)},
           {"pass", ok}});
    return ok ? kOk : kCheck;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
}

int cmd_dynamics(const std::string& path, std::optional<double> perturb,
                 std::optional<std::uint64_t> seed, std::optional<int> max_iters,
                 const std::string& trace_path) {
  auto in = load(path);
  if (!in) return kInput;
  Scenario& sc = in->sc;
  if (perturb) sc.perturb = *perturb;
  if (seed) sc.dynamics.seed = *seed;
  if (max_iters) sc.dynamics.max_sweeps = *max_iters;

  OracleSolution sol;
  try {
    sol = solve_cp2(sc.net, sc.solver);
  } catch (const SolverError& e) {
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return kNoConvergence;
  }
  const Mechanism mech(sc.net, in->graph, sc.variant);
  const MessageProfile m0 = perturb_profile(mech, construct_ne(mech, sol), sc.perturb, sc.dynamics.seed);
  const DynamicsResult res = run_dynamics(mech, m0, sc.dynamics);
  const NeCertificate cert = epsilon_ne_check(mech, res.profile, kEpsNe);
  const std::vector<double> x = mech.allocation(res.profile);
  double gap = 0.0;
  for (AgentId i : sc.net.agent_ids()) gap = std::max(gap, std::abs(x[i.index()] - sol.x(i)));

  const std::string csv = trace_csv(mech, res.trace);
  json summary = {{"scenario", sc.name},
                  {"resolved", resolved_defaults(sc, in->graph)},
                  {"status", to_string(res.status)},
                  {"sweeps", res.sweeps},
                  {"x_hat", allocation_json(sc.net, x)},
                  {"x_star", allocation_json(sc.net, sol.x_star)},
                  {"allocation_gap", gap},
                  {"certificate", certificate_to_json(cert)}};
  if (trace_path.empty()) {
    std::cout << csv;
    std::cerr << summary.dump(2) << '\n';
  } else {
    std::ofstream f(trace_path);
    if (!f) {
      std::cerr << "error: cannot write " << trace_path << '\n';
      return kInput;
    }
    f << csv;
    summary["trace"] = trace_path;
    print(summary);
  }
  if (res.status != DynamicsStatus::FixedPoint) return kNoConvergence;
  return cert.pass && gap <= kDynamicsTol ? kOk : kCheck;
}

int cmd_check(const std::string& path, const std::string& profile_path) {
  auto in = load(path);
  if (!in) return kInput;
  try {
    const Mechanism mech(in->sc.net, in->graph, in->sc.variant);
    std::ifstream f(profile_path);
    if (!f) {
      std::cerr << "error: cannot open " << profile_path << '\n';
      return kInput;
    }
    json pj;
    try {
      pj = json::parse(f);
    } catch (const json::parse_error& e) {
      std::cerr << "error: " << profile_path << ": parse error at byte " << e.byte << '\n';
      return kInput;
    }
    const MessageProfile m = profile_from_json(mech, pj);

    json reports = json::array();
    std::vector<std::string> failing;
    for (const auto& r : lemma_suite(mech, m)) {
      for (const auto& name : r.failing()) failing.push_back(r.id + "." + name);
      reports.push_back(report_to_json(r));
    }
    json out = {{"scenario", in->sc.name}, {"resolved", resolved_defaults(in->sc, in->graph)},
                {"x_hat", allocation_json(in->sc.net, mech.allocation(m))}, {"lemmas", reports}};
    try {
      const OracleSolution sol = solve_cp2(in->sc.net, in->sc.solver);
      const LemmaReport thm = check_theorem1(mech, m, sol, kOptTol);
      for (const auto& name : thm.failing()) failing.push_back(thm.id + "." + name);
      out["theorem1"] = report_to_json(thm);
    } catch (const SolverError& e) {
      std::cerr << "solver did not converge: " << e.what() << '\n';
      return kNoConvergence;
    }
    const NeCertificate cert = epsilon_ne_check(mech, m, kEpsNe);
    if (!cert.pass) failing.push_back("certificate");
    out["certificate"] = certificate_to_json(cert);
    out["failing"] = failing;
    out["pass"] = failing.empty();
    print(out);
    for (const auto& name : failing) std::cerr << "check failed: " << name << '\n';
    return failing.empty() ? kOk : kCheck;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
}

int cmd_dims(const std::string& path) {
  auto in = load(path);
  if (!in) return kInput;
  const Mechanism mech(in->sc.net, in->graph, in->sc.variant);
  const MessageProfile m = mech.blank_profile();
  std::size_t total = 0;
  bool ok = true;
  std::cout << std::left << std::setw(8) << "agent" << std::setw(10) << "formula" << std::setw(10)
            << "counted" << "match\n";
  for (AgentId i : in->sc.net.agent_ids()) {
    const std::size_t f = mech.message_dimension(i);
    const std::size_t c = m[i].dimension();
    ok = ok && f == c;
    total += c;
    std::cout << std::setw(8) << i.value << std::setw(10) << f << std::setw(10) << c
              << (f == c ? "yes" : "NO") << '\n';
  }
  const double network = mech.total_dimension_formula();
  const bool net_ok = std::abs(network - static_cast<double>(total)) <= 1e-9 * std::max(1.0, network);
  std::cout << "total " << total << ", network formula " << network << ", match "
            << (net_ok ? "yes" : "NO") << '\n';
  return ok && net_ok ? kOk : kCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed multicast rate allocation mechanism"};
  app.require_subcommand(1);

  std::string file;
  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("file", file, "scenario JSON")->required();
  auto* solve = app.add_subcommand("solve", "solve the welfare problem and report KKT residuals");
  solve->add_option("file", file, "scenario JSON")->required();

  std::string out_path;
  auto* construct = app.add_subcommand("construct", "build the equilibrium profile and run all checks");
  construct->add_option("file", file, "scenario JSON")->required();
  construct->add_option("--out", out_path, "write the profile JSON here");

  std::optional<double> perturb;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iters;
  std::string trace_path;
  auto* dynamics = app.add_subcommand("dynamics", "best-response dynamics from a perturbed equilibrium");
  dynamics->add_option("file", file, "scenario JSON")->required();
  dynamics->add_option("--perturb", perturb, "relative perturbation");
  dynamics->add_option("--seed", seed, "random seed");
  dynamics->add_option("--max-iters", max_iters, "maximum number of sweeps");
  dynamics->add_option("--trace", trace_path, "write the trace CSV here instead of stdout");

  std::string profile_path;
  auto* check = app.add_subcommand("check", "run the checks on a stored profile");
  check->add_option("file", file, "scenario JSON")->required();
  check->add_option("--profile", profile_path, "profile JSON")->required();

  auto* dims = app.add_subcommand("dims", "message dimension per agent");
  dims->add_option("file", file, "scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kInput;
  }

  if (validate->parsed()) return cmd_validate(file);
  if (solve->parsed()) return cmd_solve(file);
  if (construct->parsed()) return cmd_construct(file, out_path);
  if (dynamics->parsed()) return cmd_dynamics(file, perturb, seed, max_iters, trace_path);
  if (check->parsed()) return cmd_check(file, profile_path);
  if (dims->parsed()) return cmd_dims(file);
  std::cerr << app.help();
  return kInput;
}
