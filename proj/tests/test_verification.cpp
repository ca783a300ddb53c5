#include "doctest.h"

#include "dmd/verification.hpp"
#include "support.hpp"

using namespace dmd;
using namespace dmd::test;

namespace {

struct Duo4 {
  Instance inst = duo4();
  Mechanism mech = make_mechanism(inst);
  OracleSolution sol = solve_cp2(inst.net);
  MessageProfile ne = construct_ne(mech, sol);
};

}  // namespace

TEST_CASE("every check passes at the constructed equilibrium") {
  for (auto inst : {sym2(), duo4(), relay5()}) {
    const auto mech = make_mechanism(inst);
    const auto sol = solve_cp2(inst.net);
    const auto m = construct_ne(mech, sol);
    for (const auto& r : {check_lemma2(mech, m), check_lemma3(mech, m), check_lemma4(mech, m),
                          check_lemma5(mech, m), check_lemma6(mech, m), check_theorem1(mech, m, sol)}) {
      INFO(inst.name << " " << r.id);
      CHECK(r.pass());
      CHECK(r.max_residual() <= 1e-12);
    }
  }
}

TEST_CASE("a wrong summary is reported by name and size") {
  Duo4 d;
  auto m = d.ne;
  m[A(1)].n[{A(2), L(1)}] += 0.1;
  const auto r = check_lemma2(d.mech, m);
  CHECK_FALSE(r.pass());
  CHECK(r.residual("summary") == doctest::Approx(0.1));
  CHECK(r.failing() == std::vector<std::string>{"summary"});
  // Downstream identities are then informational only.
  const auto r3 = check_lemma3(d.mech, m);
  CHECK(r3.pass());
}

TEST_CASE("summary recursion on duo4") {
  Duo4 d;
  // Agent 2 summarizes agents 3 and 4 across the edge (2, 3): two shares of
  // the group-2 maximum 13/7.
  CHECK(d.ne[A(2)].n.at({A(3), L(1)}) ==
        doctest::Approx(d.ne[A(3)].y_under.at(L(1)) + d.ne[A(4)].y_under.at(L(1))));
  CHECK(d.ne[A(3)].n.at({A(2), L(1)}) == doctest::Approx(8.0 / 7.0));
  const auto r = check_lemma3(d.mech, d.ne);
  CHECK(r.residual("telescoping") <= 1e-15);
  CHECK(r.residual("telescoping_sum") <= 1e-15);
}

TEST_CASE("zero profile passes the consensus checks") {
  Duo4 d;
  auto zero = d.mech.blank_profile();
  zero[A(1)].z2[L(1)] = 2.0;
  zero[A(3)].z2[L(1)] = 2.0;
  CHECK(check_lemma2(d.mech, zero).pass());
  CHECK(check_lemma3(d.mech, zero).pass());
  CHECK(check_lemma6(d.mech, zero).pass());
}

TEST_CASE("stationarity residual tracks an inflated price") {
  Duo4 d;
  auto m = d.ne;
  m[A(1)].p1[L(1)] += 1.0;
  const auto r = check_lemma5(d.mech, m);
  CHECK_FALSE(r.pass());
  CHECK(r.residual("stationarity") == doctest::Approx(1.0));
}

TEST_CASE("total tax on duo4") {
  Duo4 d;
  const auto r = check_lemma6(d.mech, d.ne);
  CHECK(r.info.at("total_tax") == doctest::Approx(21.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("theorem check catches a wrong allocation") {
  Duo4 d;
  auto m = d.ne;
  m[A(1)].y *= 0.5;
  const auto r = check_theorem1(d.mech, m, d.sol);
  CHECK_FALSE(r.pass());
  CHECK(r.residual("allocation_gap") > 0.1);
  CHECK_THROWS_AS(r.residual("missing"), std::out_of_range);
}

TEST_CASE("check chain holds on random instances") {
  // Equilibrium -> consensus -> feasibility -> slackness -> stationarity ->
  // optimality, each at its own tolerance.
  for (std::uint64_t s = 0; s < 25; ++s) {
    const auto inst = random_instance(1000 + s);
    INFO(inst.name);
    const auto mech = make_mechanism(inst);
    const auto sol = solve_cp2(inst.net);
    const auto m = construct_ne(mech, sol);
    REQUIRE(epsilon_ne_check(mech, m, 1e-6).pass);
    CHECK(check_lemma2(mech, m).pass());
    CHECK(check_lemma3(mech, m).pass());
    CHECK(check_lemma4(mech, m).pass());
    CHECK(check_lemma5(mech, m).pass());
    CHECK(check_lemma6(mech, m).pass());
    CHECK(check_theorem1(mech, m, sol).pass());
  }
}

TEST_CASE("relay checks only appear for the relay variant") {
  Duo4 d;
  const auto base = check_lemma4(d.mech, d.ne);
  CHECK_THROWS_AS(base.residual("relay_agreement"), std::out_of_range);

  const auto inst = relay5();
  const auto mech = make_mechanism(inst);
  auto m = construct_ne(mech, solve_cp2(inst.net));
  CHECK(check_lemma4(mech, m).residual("relay_agreement") <= 1e-15);
  m[A(3)].w[L(2)] += 0.25;
  CHECK(check_lemma4(mech, m).residual("relay_agreement") == doctest::Approx(0.25));
}
