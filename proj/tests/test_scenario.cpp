#include "doctest.h"

#include "dmd/scenario.hpp"
#include "support.hpp"

using namespace dmd;
using namespace dmd::test;

namespace {

const char* kDuo4 = R"({
  "agents": [
    {"id": 1, "group": 1, "valuation": {"family": "log", "alpha": 1.0}},
    {"id": 2, "group": 1, "valuation": {"family": "log", "alpha": 2.0}},
    {"id": 3, "group": "g2", "valuation": {"family": "log_linear", "alpha": 1.0}},
    {"id": 4, "group": 2, "valuation": {"family": "log", "alpha": 3.0}}
  ],
  "links": [{"id": "l1", "capacity": 3.0, "users": [1, 2, 3, 4]}],
  "message_network": {"edges": [[1, 2], [2, 3], [3, 4]]},
  "dynamics": {"schedule": "random", "seed": 5, "max_iters": 40}
})";

}  // namespace

TEST_CASE("scenario parses ids, families and settings") {
  const auto sc = parse_scenario(kDuo4, "duo4");
  CHECK(sc.net.num_agents() == 4);
  CHECK(sc.net.group_of(A(3)) == G(2));
  CHECK(sc.net.capacity(L(1)) == 3.0);
  CHECK(sc.variant == Variant::Base);
  CHECK(sc.dynamics.schedule == Schedule::Random);
  CHECK(sc.dynamics.seed == 5);
  CHECK(sc.dynamics.max_sweeps == 40);
  CHECK(validate_scenario(sc).ok());

  const auto mech = build_mechanism(sc);
  const auto defaults = resolved_defaults(sc, mech.graph());
  CHECK(defaults.at("tree_root") == 1);
  CHECK(defaults.at("variant") == "base");
  CHECK(defaults.at("tree_edges").size() == 3);
}

TEST_CASE("scenario errors name the problem") {
  CHECK_THROWS_WITH_AS(parse_scenario(R"({"agents": [], "links": []})"),
                       doctest::Contains("message network required"), ScenarioError);
  CHECK_THROWS_WITH_AS(parse_scenario("{\n  \"agents\": [,\n}", "bad.json"),
                       doctest::Contains("bad.json:2:"), ScenarioError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/file.json"), ScenarioError);

  std::string zero = kDuo4;
  zero.replace(zero.find("3.0, \"users\""), 3, "0.0");
  const auto sc = parse_scenario(zero);
  const auto rep = validate_scenario(sc);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.violations.front().find("capacity > 0") != std::string::npos);
}

TEST_CASE("tree and overrides from the scenario") {
  std::string text = kDuo4;
  text.insert(text.rfind('}'),
              R"(, "overrides": {"tree_root": 4, "phi": {"3": 4}, "centers": [{"group": 1, "link": "l1", "agent": 2}]})");
  const auto sc = parse_scenario(text);
  const auto g = resolve_graph(sc);
  CHECK(g.phi(A(3)) == A(4));
  CHECK(g.center(G(1), L(1)) == A(2));

  std::string bad = kDuo4;
  bad.insert(bad.rfind('}'), R"(, "overrides": {"tree_edges": [[1, 3], [1, 2], [3, 4]]})");
  CHECK_THROWS_AS(resolve_graph(parse_scenario(bad)), std::invalid_argument);
}

TEST_CASE("profile json round trip is exact and strict") {
  const auto sc = parse_scenario(kDuo4);
  const auto mech = build_mechanism(sc);
  const auto m = construct_ne(mech, solve_cp2(sc.net));
  const auto j = profile_to_json(m);
  const auto back = profile_from_json(mech, nlohmann::json::parse(j.dump()));
  CHECK(back == m);

  auto extra = j;
  extra["1"]["q.4"] = 1.0;
  CHECK_THROWS_AS(profile_from_json(mech, extra), ScenarioError);
  auto missing = j;
  missing["2"].erase("y");
  CHECK_THROWS_AS(profile_from_json(mech, missing), ScenarioError);
}

TEST_CASE("relay variant and alias") {
  std::string text = R"({
    "agents": [
      {"id": 1, "group": 1, "valuation": {"family": "log", "alpha": 1.0}},
      {"id": 2, "group": 2, "valuation": {"family": "log", "alpha": 1.0}},
      {"id": 3, "group": 3, "valuation": {"family": "log", "alpha": 1.0}}
    ],
    "links": [{"id": 1, "capacity": 1.0, "users": [1, 3]}, {"id": 2, "capacity": 2.0, "users": [1, 2, 3]}],
    "message_network": {"edges": [[1, 2], [2, 3]]},
    "variant": "section5"
  })";
  const auto sc = parse_scenario(text);
  CHECK(sc.variant == Variant::Relay);
  CHECK(validate_scenario(sc).ok());
  const auto mech = build_mechanism(sc);
  CHECK(mech.relay_links(A(2)) == std::set<LinkId>{L(1)});

  text.replace(text.find("section5"), 8, "base");
  const auto rep = validate_scenario(parse_scenario(text));
  CHECK_FALSE(rep.ok());
}

TEST_CASE("trace csv layout") {
  const auto sc = parse_scenario(kDuo4);
  const auto mech = build_mechanism(sc);
  const auto m = construct_ne(mech, solve_cp2(sc.net));
  const auto res = run_dynamics(mech, m, {.max_sweeps = 1});
  const auto csv = trace_csv(mech, res.trace);
  CHECK(csv.starts_with("iter,agent_updated,welfare,x_hat_1,x_hat_2,x_hat_3,x_hat_4,load_l1,max_gain\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 1 + 4);
}
