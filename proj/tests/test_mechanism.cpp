#include "doctest.h"

#include <cmath>

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

// Random point of the message space with every component in [0, hi).
MessageProfile random_profile(const Mechanism& mech, std::mt19937_64& rng, double hi = 3.0) {
  std::uniform_real_distribution<double> u(0.0, hi);
  MessageProfile m = mech.blank_profile();
  for (AgentId i : mech.network().agent_ids()) {
    for_each_component(m[i], [&](const std::string& key, double& v) {
      v = key.starts_with("a") ? 1e-3 + u(rng) : u(rng);
    });
  }
  return m;
}

}  // namespace

TEST_CASE("extended group demand") {
  Duo4 d;
  CHECK(d.mech.extended_group_demand(A(1), L(1), d.ne) == doctest::Approx(4.0 / 7.0));
  auto m = d.ne;
  m[A(1)].y_under[L(1)] = 0.3;
  CHECK(d.mech.extended_group_demand(A(1), L(1), m) == 0.3);

  const auto r = relay5();
  const auto rm = make_mechanism(r);
  const auto rne = construct_ne(rm, solve_cp2(r.net));
  CHECK(rm.extended_group_demand(A(3), L(2), rne) == 0.0);
}

TEST_CASE("group maximum seen by centers and copied by others") {
  Duo4 d;
  const ZBar z = d.mech.zbar(A(1), L(1), d.ne);
  CHECK(z.max_demand == doctest::Approx(8.0 / 7.0));
  CHECK(z.count == 2.0);

  auto m = d.ne;
  m[A(2)].q[A(1)] = 5.0;
  m[A(2)].y = 3.0;
  const ZBar strict = d.mech.zbar(A(1), L(1), m);
  CHECK(strict.max_demand == 5.0);
  CHECK(strict.count == 1.0);

  m[A(1)].z1[L(1)] = 0.7;
  m[A(1)].z2[L(1)] = 4.0;
  const ZBar copied = d.mech.zbar(A(2), L(1), m);
  CHECK(copied.max_demand == 0.7);
  CHECK(copied.count == 4.0);
}

TEST_CASE("radial factor") {
  Duo4 d;
  for (AgentId i : d.inst.net.agent_ids()) {
    const auto rf = d.mech.f_and_r(i, d.ne);
    CHECK(rf.f.at(L(1)) == doctest::Approx(3.0));
    CHECK(rf.r == doctest::Approx(1.0));
  }

  const auto zero = d.mech.blank_profile();
  const auto rf0 = d.mech.f_and_r(A(2), zero);
  CHECK(rf0.f.at(L(1)) == 0.0);
  CHECK(rf0.r == d.mech.params().r_max);
  for (double x : d.mech.allocation(zero)) CHECK(x == 0.0);
}

TEST_CASE("radial factor from doubled summaries") {
  auto inst = sym2();
  const auto mech = make_mechanism(inst);
  auto m = construct_ne(mech, solve_cp2(inst.net));
  // Agent 1 sees f = own share + y_2^l, 1 + 1 at equilibrium.
  m[A(2)].q[A(1)] = 2.0;
  m[A(2)].y_under[L(1)] = 4.0;
  const auto rf = mech.f_and_r(A(1), m);
  CHECK(rf.f.at(L(1)) == doctest::Approx(6.0));
  CHECK(rf.r == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("allocation at the equilibrium and under scaling") {
  Duo4 d;
  const std::vector<double> expect{8.0 / 7.0, 8.0 / 7.0, 13.0 / 7.0, 13.0 / 7.0};
  CHECK(max_abs(d.mech.allocation(d.ne), expect) <= 1e-12);
  for (double gamma : {0.5, 2.0, 10.0}) {
    const auto scaled = scale_demands(d.ne, gamma);
    CHECK(max_abs(d.mech.allocation(scaled), expect) <= 1e-9);
    CHECK(d.mech.f_and_r(A(1), scaled).r == doctest::Approx(1.0 / gamma));
  }
  auto m = d.ne;
  m[A(2)].y = 0.0;
  CHECK(d.mech.allocation(A(2), m) == 0.0);
}

TEST_CASE("w quantities") {
  Duo4 d;
  const auto c = d.mech.w_quantities(A(1), L(1), d.ne);
  CHECK(c.w_hat == doctest::Approx(7.0 / 5.0));
  CHECK(c.w_bar_minus == doctest::Approx(7.0 / 5.0));

  auto m = d.ne;
  m[A(2)].w[L(1)] = 5.0;
  m[A(1)].a2[{A(2), L(1)}] = 1.0;
  m[A(2)].a1[L(1)] = 1.0;
  const double p2 = m[A(1)].p2.at({A(2), L(1)});
  m[A(2)].p1[L(1)] = p2;
  m[A(1)].w[L(1)] = 5.0;
  // Non-center 2 with center 1: w_c - p2-proxy + own p1 + a gap.
  CHECK(d.mech.w_quantities(A(2), L(1), m).w_hat == doctest::Approx(5.0));
  m[A(2)].a1[L(1)] = 1.25;
  CHECK(d.mech.w_quantities(A(2), L(1), m).w_hat == doctest::Approx(5.25));
  CHECK_THROWS_AS(d.mech.w_quantities(A(2), L(2), m), std::invalid_argument);
}

TEST_CASE("tax and utility at the equilibrium") {
  Duo4 d;
  const auto t1 = d.mech.tax(A(1), d.ne);
  CHECK(t1.total == doctest::Approx(8.0 / 15.0).epsilon(1e-12));
  CHECK(t1.term("price_rate", L(1)) == doctest::Approx(8.0 / 15.0));
  for (const auto& term : t1.terms) {
    if (term.name != "price_rate") CHECK(std::abs(term.value) <= 1e-12);
  }
  CHECK(d.mech.utility(A(1), d.ne) == doctest::Approx(std::log(15.0 / 7.0) - 8.0 / 15.0));
  for (AgentId i : d.inst.net.agent_ids()) CHECK(d.mech.utility(i, d.ne) >= 0.0);

  // All-zero rates with the centers' tie counts filled in.
  auto zero = d.mech.blank_profile();
  zero[A(1)].z2[L(1)] = 2.0;
  zero[A(3)].z2[L(1)] = 2.0;
  for (AgentId i : d.inst.net.agent_ids()) {
    CHECK(d.mech.tax(i, zero).total == 0.0);
    CHECK(d.mech.utility(i, zero) == 0.0);
  }
}

TEST_CASE("one off-consensus summary costs exactly its squared error") {
  Duo4 d;
  const double before = d.mech.tax(A(2), d.ne).total;
  for (double delta : {0.1, -0.3, 1.7}) {
    auto m = d.ne;
    m[A(2)].n[{A(3), L(1)}] += delta;
    const double after = d.mech.tax(A(2), m).total;
    CHECK(after - before == doctest::Approx(delta * delta).epsilon(1e-12));
  }
}

TEST_CASE("tax breakdown is exact and its quadratic terms are nonnegative") {
  std::mt19937_64 rng(21);
  for (const auto& inst : {duo4(), relay5(), random_instance(601), random_instance(602)}) {
    const auto mech = make_mechanism(inst);
    for (int t = 0; t < 20; ++t) {
      const auto m = random_profile(mech, rng);
      for (AgentId i : inst.net.agent_ids()) {
        const auto tax = mech.tax(i, m);
        double s = 0.0;
        for (const auto& term : tax.terms) {
          s += term.value;
          if (term.quadratic) CHECK(term.value >= 0.0);
        }
        CHECK(s == tax.total);
        CHECK(std::isfinite(tax.total));
        CHECK(std::isfinite(mech.utility(i, m)));
      }
    }
  }
}

TEST_CASE("f and r ignore the agent's own message") {
  std::mt19937_64 rng(8);
  for (const auto& inst : {duo4(), relay5(), random_instance(701), random_instance(702)}) {
    const auto mech = make_mechanism(inst);
    const auto base = random_profile(mech, rng);
    for (AgentId i : inst.net.agent_ids()) {
      const auto ref = mech.f_and_r(i, base);
      for (int t = 0; t < 25; ++t) {
        auto m = base;
        const auto other = random_profile(mech, rng, 10.0);
        m[i] = other[i];
        const auto got = mech.f_and_r(i, m);
        CHECK(got.r == ref.r);
        CHECK(got.f == ref.f);
      }
    }
  }
}

TEST_CASE("message dimension matches the component count") {
  Duo4 d;
  CHECK(d.mech.message_dimension(A(4)) == 6);
  CHECK(d.mech.message_dimension(A(1)) == 11);
  CHECK(d.mech.message_dimension(A(2)) == 13);
  CHECK(d.mech.message_dimension(A(3)) == 12);
  for (const auto& inst : {sym2(), duo4(), relay5(), random_instance(801), random_instance(802, true)}) {
    const auto mech = make_mechanism(inst);
    std::size_t total = 0;
    for (AgentId i : inst.net.agent_ids()) {
      CHECK(mech.message_dimension(i) == mech.blank_message(i).dimension());
      total += mech.blank_message(i).dimension();
    }
    CHECK(mech.total_dimension_formula() == doctest::Approx(static_cast<double>(total)));
  }
}

TEST_CASE("shape checking") {
  Duo4 d;
  CHECK_NOTHROW(d.mech.check_shape(d.ne));
  auto m = d.ne;
  m[A(4)].q[A(1)] = 0.0;
  CHECK_THROWS_WITH_AS(d.mech.check_shape(m), doctest::Contains("unexpected component"),
                       std::invalid_argument);
  m = d.ne;
  m[A(1)].a1[L(1)] = 0.0;
  CHECK_THROWS_WITH_AS(d.mech.check_shape(m), doctest::Contains("a1.l1"), std::invalid_argument);
}

TEST_CASE("mechanism refuses a graph that breaks its assumption") {
  const auto r = relay5();
  CHECK_THROWS_AS(Mechanism(r.net, default_graph(r), Variant::Base), std::invalid_argument);
  CHECK_NOTHROW(Mechanism(r.net, default_graph(r), Variant::Relay));
  CHECK(parse_variant("section5") == Variant::Relay);
  CHECK_THROWS_AS(parse_variant("other"), std::invalid_argument);
}

TEST_CASE("indicator tolerance is relative") {
  Duo4 d;
  CHECK(d.mech.indicator(1e6, 1e6 + 1e-4));
  CHECK_FALSE(d.mech.indicator(1.0, 1.0 + 1e-8));
  CHECK(d.mech.indicator(0.0, 1e-10));
}
