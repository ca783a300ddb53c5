#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "dmd/scenario.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace dmd {
namespace {

// Results cross the boundary as JSON text; the Python side decodes them.
class PyScenario {
 public:
  explicit PyScenario(Scenario sc) : sc_(std::move(sc)) {}

  std::string name() const { return sc_.name; }

  std::vector<std::string> validate() const { return validate_scenario(sc_).violations; }

  std::string solve() const {
    const OracleSolution sol = solve_cp2(sc_.net, sc_.solver);
    json x = json::object(), lambda = json::object();
    for (AgentId i : sc_.net.agent_ids()) x[to_string(i)] = sol.x(i);
    for (const auto& [l, v] : sol.lambda_star) lambda[to_string(l)] = v;
    return json{{"x_star", x},
                {"lambda_star", lambda},
                {"welfare", welfare(sc_.net, sol.x_star)},
                {"kkt", kkt_to_json(kkt_residual(sc_.net, sol))}}
        .dump();
  }

  std::string construct(double eps) const {
    const Mechanism mech = build_mechanism(sc_);
    const OracleSolution sol = solve_cp2(sc_.net, sc_.solver);
    const MessageProfile m = construct_ne(mech, sol);
    json out = checks(mech, m, sol, eps);
    out["profile"] = profile_to_json(m);
    return out.dump();
  }

  std::string check(const std::string& profile, double eps) const {
    const Mechanism mech = build_mechanism(sc_);
    const MessageProfile m = profile_from_json(mech, json::parse(profile));
    return checks(mech, m, solve_cp2(sc_.net, sc_.solver), eps).dump();
  }

  std::string dims() const {
    const Mechanism mech = build_mechanism(sc_);
    json per = json::object();
    std::size_t total = 0;
    for (AgentId i : sc_.net.agent_ids()) {
      const std::size_t c = mech.blank_message(i).dimension();
      per[to_string(i)] = {{"formula", mech.message_dimension(i)}, {"counted", c}};
      total += c;
    }
    return json{{"agents", per}, {"total", total}, {"formula_total", mech.total_dimension_formula()}}.dump();
  }

  std::string dynamics(double perturb, std::uint64_t seed, int max_sweeps, const std::string& schedule) const {
    const Mechanism mech = build_mechanism(sc_);
    const OracleSolution sol = solve_cp2(sc_.net, sc_.solver);
    const MessageProfile m0 = perturb_profile(mech, construct_ne(mech, sol), perturb, seed);
    DynamicsOptions opts = sc_.dynamics;
    opts.seed = seed;
    opts.max_sweeps = max_sweeps;
    opts.schedule = parse_schedule(schedule);
    const DynamicsResult res = run_dynamics(mech, m0, opts);
    return json{{"status", to_string(res.status)},
                {"sweeps", res.sweeps},
                {"x_hat", allocation(mech.allocation(res.profile))},
                {"x_star", allocation(sol.x_star)},
                {"certificate", certificate_to_json(epsilon_ne_check(mech, res.profile, 1e-6))},
                {"trace_csv", trace_csv(mech, res.trace)}}
        .dump();
  }

 private:
  json allocation(const std::vector<double>& x) const {
    json out = json::object();
    for (AgentId i : sc_.net.agent_ids()) out[to_string(i)] = x[i.index()];
    return out;
  }

  json checks(const Mechanism& mech, const MessageProfile& m, const OracleSolution& sol, double eps) const {
    json reports = json::object();
    bool ok = true;
    for (const LemmaReport& r : {check_lemma2(mech, m), check_lemma3(mech, m), check_lemma4(mech, m),
                                 check_lemma5(mech, m), check_lemma6(mech, m), check_theorem1(mech, m, sol)}) {
      ok = ok && r.pass();
      reports[r.id] = report_to_json(r);
    }
    const NeCertificate cert = epsilon_ne_check(mech, m, eps);
    return {{"x_hat", allocation(mech.allocation(m))},
            {"x_star", allocation(sol.x_star)},
            {"reports", reports},
            {"certificate", certificate_to_json(cert)},
            {"pass", ok && cert.pass}};
  }

  Scenario sc_;
};

}  // namespace
}  // namespace dmd

PYBIND11_MODULE(_core, mod) {
  using dmd::PyScenario;
  py::register_exception<dmd::ScenarioError>(mod, "ScenarioError", PyExc_ValueError);
  py::register_exception<dmd::SolverError>(mod, "SolverError", PyExc_RuntimeError);

  py::class_<PyScenario>(mod, "Scenario")
      .def_static("load", [](const std::string& path) { return PyScenario(dmd::load_scenario(path)); })
      .def_static("parse",
                  [](const std::string& text, const std::string& name) {
                    return PyScenario(dmd::parse_scenario(text, name));
                  },
                  py::arg("text"), py::arg("name") = "<input>")
      .def_property_readonly("name", &PyScenario::name)
      .def("validate", &PyScenario::validate)
      .def("solve", &PyScenario::solve)
      .def("construct", &PyScenario::construct, py::arg("eps") = 1e-6)
      .def("check", &PyScenario::check, py::arg("profile"), py::arg("eps") = 1e-6)
      .def("dims", &PyScenario::dims)
      .def("dynamics", &PyScenario::dynamics, py::arg("perturb"), py::arg("seed"), py::arg("max_sweeps"),
           py::arg("schedule"));
}
