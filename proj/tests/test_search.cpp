#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "dsvrp/search.hpp"
#include "test_support.hpp"

using namespace dsvrp;
using testing_support::req;

namespace {

RoutePlan plan_with(std::vector<std::vector<VertexId>> routes, WaitingStrategy s = WaitingStrategy::kDriveFirst,
                    bool relocation = false) {
  RoutePlan p = RoutePlan::empty(static_cast<int>(routes.size()), 1, s, relocation);
  for (std::size_t k = 0; k < routes.size(); ++k)
    for (VertexId v : routes[k]) p.routes[k].push_back(Visit::service(req(v)));
  return p;
}

std::multiset<VertexId> services(const RoutePlan& p) {
  std::multiset<VertexId> out;
  for (const auto& r : p.routes)
    for (const auto& v : r)
      if (v.is_service()) out.insert(v.vertex);
  return out;
}

}  // namespace

TEST_CASE("swap on a two-visit route reverses it") {
  const RoutePlan p = plan_with({{1, 2}});
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const RoutePlan c = apply_move(p, MoveOperator::kSwap, rng, {});
    REQUIRE(c.routes[0].size() == 2);
    CHECK(c.routes[0][0].vertex == 2);
    CHECK(c.routes[0][1].vertex == 1);
  }
}

TEST_CASE("inverted 2-opt on a length-1 route is the identity") {
  const RoutePlan p = plan_with({{5}, {}});
  Rng rng(2);
  for (int i = 0; i < 10; ++i) CHECK(apply_move(p, MoveOperator::kInverted2Opt, rng, {}) == p);
}

TEST_CASE("inverted 2-opt reverses one contiguous segment") {
  const RoutePlan p = plan_with({{1, 2, 3, 4, 5, 6}});
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const RoutePlan c = apply_move(p, MoveOperator::kInverted2Opt, rng, {});
    std::vector<VertexId> got;
    for (const auto& v : c.routes[0]) got.push_back(v.vertex);
    bool found = false;
    for (std::size_t a = 0; a < 6 && !found; ++a)
      for (std::size_t b = a; b < 6 && !found; ++b) {
        std::vector<VertexId> want{1, 2, 3, 4, 5, 6};
        std::reverse(want.begin() + static_cast<std::ptrdiff_t>(a), want.begin() + static_cast<std::ptrdiff_t>(b + 1));
        found = want == got;
      }
    CHECK(found);
  }
}

TEST_CASE("cross-exchange preserves the multiset of service visits") {
  std::mt19937_64 gen(4);
  Rng rng(4);
  int changed = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::vector<VertexId>> routes(3);
    std::uniform_int_distribution<int> len(0, 5), vtx(1, 20), veh(0, 2);
    const int n = len(gen) + 2;
    for (int j = 0; j < n; ++j) routes[static_cast<std::size_t>(veh(gen))].push_back(vtx(gen));
    const RoutePlan p = plan_with(routes);
    const RoutePlan c = apply_move(p, MoveOperator::kCrossExchange, rng, {});
    CHECK(services(c) == services(p));
    CHECK(c.visit_count() == p.visit_count());
    if (!(c == p)) ++changed;
  }
  CHECK(changed > 500);
}

TEST_CASE("relocate and swap preserve services") {
  Rng rng(5);
  const RoutePlan p = plan_with({{1, 2, 3}, {4}, {}});
  for (int i = 0; i < 200; ++i) {
    CHECK(services(apply_move(p, MoveOperator::kRelocateVisit, rng, {})) == services(p));
    CHECK(services(apply_move(p, MoveOperator::kSwap, rng, {})) == services(p));
  }
}

TEST_CASE("relocate never targets a finished vehicle") {
  Rng rng(6);
  const RoutePlan p = plan_with({{1, 2, 3}, {}, {}});
  Fleet fleet(3);
  fleet[1].finished = true;
  const MoveContext ctx{nullptr, fleet};
  for (int i = 0; i < 200; ++i) CHECK(apply_move(p, MoveOperator::kRelocateVisit, rng, ctx).routes[1].empty());
}

TEST_CASE("degenerate plans give the identity") {
  Rng rng(7);
  const RoutePlan empty = plan_with({{}, {}});
  for (MoveOperator op : applicable_operators(empty)) CHECK(apply_move(empty, op, rng, {}) == empty);
  const RoutePlan one_route = plan_with({{1, 2}, {}});
  CHECK(apply_move(one_route, MoveOperator::kCrossExchange, rng, {}) == one_route);
}

TEST_CASE("wait operators") {
  Rng rng(8);
  RoutePlan p = plan_with({{1, 2}}, WaitingStrategy::kCustomWait);
  const RoutePlan up = apply_move(p, MoveOperator::kWaitIncrease, rng, {});
  CHECK(up.routes[0][0].custom_wait + up.routes[0][1].custom_wait == 1);
  // nothing to decrease
  CHECK(apply_move(p, MoveOperator::kWaitDecrease, rng, {}) == p);
  p.routes[0][1].custom_wait = 2;
  const RoutePlan down = apply_move(p, MoveOperator::kWaitDecrease, rng, {});
  CHECK(down.routes[0][1].custom_wait == 1);
  CHECK(down.routes[0][0].custom_wait == 0);
}

TEST_CASE("relocation operators") {
  Instance inst;
  inst.resize(4, 20);
  inst.vehicle_count = 1;
  inst.capacity = 10;
  inst.probability(10, 3) = 0.5;
  inst.probability(10, 4) = 0.5;
  RoutePlan p = plan_with({{4}}, WaitingStrategy::kDriveFirst, true);
  CHECK(relocation_candidates(p, inst) == std::vector<VertexId>{3});
  Rng rng(9);
  const MoveContext ctx{&inst, {}};
  const RoutePlan ins = apply_move(p, MoveOperator::kRelocationInsert, rng, ctx);
  REQUIRE(ins.visit_count() == 2);
  CHECK(services(ins) == services(p));
  bool has = false;
  for (const auto& v : ins.routes[0])
    if (!v.is_service()) has = v.vertex == 3;
  CHECK(has);
  CHECK(apply_move(ins, MoveOperator::kRelocationRemove, rng, ctx) == p);
  p.start_epoch = 11;
  CHECK(relocation_candidates(p, inst).empty());
}

TEST_CASE("inapplicable operators are contract faults") {
  Rng rng(10);
  const RoutePlan df = plan_with({{1}});
  CHECK_THROWS_AS(apply_move(df, MoveOperator::kWaitIncrease, rng, {}), std::logic_error);
  CHECK_THROWS_AS(apply_move(df, MoveOperator::kRelocationInsert, rng, {}), std::logic_error);
  CHECK_FALSE(operator_applicable(MoveOperator::kWaitDecrease, df));
  CHECK(operator_applicable(MoveOperator::kSwap, df));
}

TEST_CASE("rotation list per configuration") {
  const std::vector<MoveOperator> base{MoveOperator::kRelocateVisit, MoveOperator::kSwap,
                                       MoveOperator::kInverted2Opt, MoveOperator::kCrossExchange};
  CHECK(applicable_operators(plan_with({{}})) == base);
  CHECK(applicable_operators(plan_with({{}}, WaitingStrategy::kWaitFirst)) == base);
  CHECK(applicable_operators(plan_with({{}}, WaitingStrategy::kCustomWait)).size() == 6);
  CHECK(applicable_operators(plan_with({{}}, WaitingStrategy::kDriveFirst, true)).size() == 6);
  CHECK(applicable_operators(plan_with({{}}, WaitingStrategy::kRelocationOnly)).size() == 6);
}

TEST_CASE("shake rotates through the operators") {
  const RoutePlan p = plan_with({{1, 2, 3}, {4, 5}});
  ShakeRotor rotor;
  Rng rng(11);
  std::map<MoveOperator, int> used;
  std::vector<MoveOperator> seq;
  for (int i = 0; i < 8; ++i) {
    const ShakeResult r = shake_solution(p, rotor, rng, {});
    ++used[r.applied];
    seq.push_back(r.applied);
  }
  CHECK(used.size() == 4);
  for (const auto& [op, n] : used) CHECK(n == 2);
  CHECK(seq[0] == MoveOperator::kRelocateVisit);
  CHECK(seq[4] == MoveOperator::kRelocateVisit);

  ShakeRotor r1, r2;
  Rng g1(12), g2(12);
  for (int i = 0; i < 20; ++i) {
    const auto a = shake_solution(p, r1, g1, {});
    const auto b = shake_solution(p, r2, g2, {});
    CHECK(a.applied == b.applied);
    CHECK(a.candidate == b.candidate);
  }
}

TEST_CASE("annealing acceptance") {
  AnnealingState st{10.0, 0.9, Rng(1)};
  CHECK(anneal_accept(5.0, 4.0, st));
  CHECK(st.temperature == doctest::Approx(9.0));
  CHECK(anneal_accept(5.0, 5.0, st));
  CHECK(st.temperature == doctest::Approx(8.1));

  AnnealingState cold{1e-300, 0.5, Rng(1)};
  CHECK_FALSE(anneal_accept(1.0, 2.0, cold));
  CHECK(cold.temperature > 0.0);
  CHECK_FALSE(anneal_accept(1.0, kInfeasible, cold));

  // Metropolis frequency
  int accepted = 0;
  const int n = 20000;
  AnnealingState warm{1.0, 1.0, Rng(3)};
  for (int i = 0; i < n; ++i) accepted += anneal_accept(0.0, 1.0, warm) ? 1 : 0;
  const double p = std::exp(-1.0);
  CHECK(std::abs(accepted / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n));

  AnnealingState bad{0.0, 0.9, Rng(1)};
  CHECK_THROWS_AS(anneal_accept(1.0, 2.0, bad), std::logic_error);
}
