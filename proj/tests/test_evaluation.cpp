#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "dsvrp/evaluation.hpp"
#include "dsvrp/scenario.hpp"
#include "test_support.hpp"

using namespace dsvrp;
using testing_support::data_path;
using testing_support::req;

namespace {

Instance two_customer() {
  Instance inst;
  inst.resize(2, 100);
  inst.vehicle_count = 1;
  inst.capacity = 10;
  inst.window[kDepot] = {0, 100};
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; j <= 2; ++j) inst.travel_time(i, j) = i == j ? 0 : 10;
  inst.demand[1] = inst.demand[2] = 1;
  inst.service[1] = inst.service[2] = 1;
  inst.window[1] = {0, 50};
  inst.window[2] = {0, 100};
  return inst;
}

// Small integer instance with random reveal probabilities.
Instance tiny_dynamic(std::mt19937_64& gen, int customers, int horizon, int vehicles) {
  Instance inst = testing_support::random_tiny_instance(gen, customers, horizon, vehicles, 3, 0, 3);
  std::uniform_int_distribution<int> epoch(1, horizon - 2);
  std::uniform_int_distribution<int> vertex(1, customers);
  for (int k = 0; k < customers; ++k) inst.probability(epoch(gen), vertex(gen)) = 0.4;
  return inst;
}

std::vector<WeightedScenario> weighted(std::span<const Scenario> scenarios) {
  std::vector<WeightedScenario> out;
  for (const auto& s : scenarios) out.push_back({s, 1.0 / static_cast<double>(scenarios.size())});
  return out;
}

// Plan for the deterministic part: every customer with a window reachable
// from the depot is offered to try_to_serve in vertex order.
RoutePlan greedy_plan(const Instance& inst, const Fleet& fleet, int count) {
  RoutePlan plan = RoutePlan::empty(inst.vehicle_count, 1, WaitingStrategy::kDriveFirst, false);
  for (int v = 1; v <= count; ++v) try_to_serve(req(v), plan, fleet, inst);
  return plan;
}

ExactState exact_state(const RoutePlan& plan, const Fleet& fleet, int epoch) {
  ExactState s;
  s.epoch = epoch;
  s.vehicles = fleet;
  for (const auto& r : plan.routes)
    for (const auto& v : r)
      if (v.is_service()) s.pending.push_back(v.vertex);
  return s;
}

}  // namespace

TEST_CASE("empty scenarios give zero") {
  const Instance inst = two_customer();
  const Fleet fleet = initial_fleet(inst);
  RoutePlan plan = RoutePlan::empty(1, 1, WaitingStrategy::kDriveFirst, false);
  plan.routes[0].push_back(Visit::service(req(1)));
  ScenarioPool pool;
  pool.scenarios.assign(5, Scenario{});
  const EvalResult r = q_bar(plan, fleet, pool, inst);
  CHECK(r.mean_rejections == 0.0);
  CHECK(r.per_scenario == std::vector<int>(5, 0));
  CHECK(r.feasible());
}

TEST_CASE("two-customer instance: insertable vs too late") {
  const Instance inst = two_customer();
  const Fleet fleet = initial_fleet(inst);
  const RoutePlan plan = RoutePlan::empty(1, 1, WaitingStrategy::kDriveFirst, false);
  const std::vector<Scenario> early{Scenario{1, {{10, 1}}}};
  const std::vector<Scenario> late{Scenario{1, {{60, 1}}}};
  CHECK(q_bar(plan, fleet, early, inst).mean_rejections == 0.0);
  CHECK(q_bar(plan, fleet, late, inst).mean_rejections == 1.0);
  // exhaustive check of the only insertion position
  RoutePlan at60 = plan;
  at60.start_epoch = 60;
  CHECK_FALSE(route_feasible_with(at60.routes[0], 0, Visit::service(req(1, 60)), fleet[0], 60,
                                  WaitingStrategy::kDriveFirst, inst));
  const std::vector<Scenario> both{early[0], late[0]};
  const EvalResult r = q_bar(plan, fleet, both, inst);
  CHECK(r.per_scenario == std::vector<int>{0, 1});
  CHECK(r.mean_rejections == 0.5);
}

TEST_CASE("infeasible plan evaluates to infinity") {
  Instance inst = two_customer();
  inst.window[1] = {0, 5};
  const Fleet fleet = initial_fleet(inst);
  RoutePlan plan = RoutePlan::empty(1, 1, WaitingStrategy::kDriveFirst, false);
  plan.routes[0].push_back(Visit::service(req(1)));
  const std::vector<Scenario> none{Scenario{}};
  CHECK_FALSE(q_bar(plan, fleet, none, inst).feasible());
  CHECK(q_bar(plan, fleet, none, inst).mean_rejections == kInfeasible);
}

TEST_CASE("insertion into an empty route") {
  const Instance inst = two_customer();
  const Fleet fleet = initial_fleet(inst);
  RoutePlan plan = RoutePlan::empty(1, 1, WaitingStrategy::kDriveFirst, false);
  Insertion chosen;
  REQUIRE(try_to_serve(req(2), plan, fleet, inst, &chosen));
  CHECK(chosen == Insertion{0, 0, 20.0});
  CHECK(plan.routes[0] == std::vector<Visit>{Visit::service(req(2))});
}

TEST_CASE("argmin of added cost") {
  Instance inst;
  inst.resize(3, 100);
  inst.vehicle_count = 2;
  inst.capacity = 10;
  inst.window[kDepot] = {0, 100};
  for (int i = 0; i <= 3; ++i) {
    inst.window[i] = {0, 100};
    for (int j = 0; j <= 3; ++j) inst.travel_time(i, j) = i == j ? 0 : 10;
  }
  auto sym = [&](int a, int b, double t) { inst.travel_time(a, b) = inst.travel_time(b, a) = t; };
  sym(1, 3, 3);
  sym(3, 0, 5);
  sym(1, 0, 4);
  sym(2, 3, 5);
  sym(2, 0, 4);
  Fleet fleet = initial_fleet(inst);
  fleet[0].vertex = 1;
  fleet[1].vertex = 2;
  RoutePlan plan = RoutePlan::empty(2, 1, WaitingStrategy::kDriveFirst, false);
  const auto all = feasible_insertions(Visit::service(req(3)), plan, fleet, inst);
  REQUIRE(all.size() == 2);
  CHECK(all[0].added_cost == 4.0);
  CHECK(all[1].added_cost == 6.0);
  Insertion chosen;
  REQUIRE(try_to_serve(req(3), plan, fleet, inst, &chosen));
  CHECK(chosen.vehicle == 0);
  std::swap(fleet[0], fleet[1]);
  plan = RoutePlan::empty(2, 1, WaitingStrategy::kDriveFirst, false);
  REQUIRE(try_to_serve(req(3), plan, fleet, inst, &chosen));
  CHECK(chosen.vehicle == 1);
}

TEST_CASE("try_to_serve matches exhaustive enumeration") {
  std::mt19937_64 gen(2024);
  int inserted = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = testing_support::random_real_instance(gen, 7, 300, 2);
    const Fleet fleet = initial_fleet(inst);
    RoutePlan plan = RoutePlan::empty(2, 1, WaitingStrategy::kDriveFirst, false);
    for (int v = 1; v <= 6; ++v) plan.routes[static_cast<std::size_t>(v % 2)].push_back(Visit::service(req(v)));
    if (!plan_feasible(plan, inst, fleet)) {
      // keep a feasible prefix per route
      for (auto& r : plan.routes)
        while (!r.empty() && !route_feasible(r, fleet[0], 1, plan.strategy, inst)) r.pop_back();
    }
    const double base = total_travel_cost(plan, inst, fleet);
    std::optional<std::pair<std::size_t, std::size_t>> best;
    double best_cost = 0;
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t pos = 0; pos <= plan.routes[k].size(); ++pos) {
        RoutePlan cand = plan;
        cand.routes[k].insert(cand.routes[k].begin() + static_cast<std::ptrdiff_t>(pos), Visit::service(req(7)));
        if (!plan_feasible(cand, inst, fleet)) continue;
        const double cost = total_travel_cost(cand, inst, fleet) - base;
        if (!best || cost < best_cost - 1e-9) {
          best = {k, pos};
          best_cost = cost;
        }
      }
    Insertion chosen;
    RoutePlan got = plan;
    const bool ok = try_to_serve(req(7), got, fleet, inst, &chosen);
    REQUIRE(ok == best.has_value());
    if (!ok) {
      CHECK(got == plan);
      continue;
    }
    ++inserted;
    CHECK(static_cast<std::size_t>(chosen.vehicle) == best->first);
    CHECK(chosen.position == best->second);
    CHECK(chosen.added_cost == doctest::Approx(best_cost));
    // the rest of the order is untouched
    auto& r = got.routes[best->first];
    r.erase(r.begin() + static_cast<std::ptrdiff_t>(best->second));
    CHECK(got == plan);
  }
  CHECK(inserted > 50);
}

TEST_CASE("exact oracle on the nonanticipation example") {
  const Instance fx = build_fig1_fixture();
  const ExactState s0 = fig1::initial_state(fx);
  const auto sc = fig1::scenarios();
  const std::vector<VertexId> none;
  CHECK(exact_q(s0, fig1::travel_to(fig1::kC), none, sc, fx) == doctest::Approx(1.0));
  CHECK(exact_q(s0, fig1::travel_to(fig1::kB), none, sc, fx) == doctest::Approx(1.5));
  CHECK(two_stage_value(s0, fig1::travel_to(fig1::kB), none, sc, fx) == doctest::Approx(0.0));
  CHECK(two_stage_value(s0, fig1::travel_to(fig1::kC), none, sc, fx) <=
        exact_q(s0, fig1::travel_to(fig1::kC), none, sc, fx) + 1e-12);
}

TEST_CASE("exact oracle guard") {
  const Instance fx = build_fig1_fixture();
  const ExactState s0 = fig1::initial_state(fx);
  const auto sc = fig1::scenarios();
  OracleLimits tight;
  tight.max_vertices = 6;
  CHECK_THROWS_AS(exact_q(s0, sc, fx, tight), OracleGuardError);
  std::vector<WeightedScenario> many(9, sc[0]);
  CHECK_THROWS_AS(exact_q(s0, many, fx), OracleGuardError);
  Instance long_h = fx;
  long_h.resize(9, 30);
  long_h.vehicle_count = 1;
  CHECK_THROWS_AS(two_stage_value(s0, sc, long_h), OracleGuardError);
  Instance real = fx;
  real.travel_time(1, 2) = 2.5;
  CHECK_THROWS_AS(exact_q(s0, sc, real), OracleGuardError);
}

TEST_CASE("illegal epoch actions are refused") {
  const Instance fx = build_fig1_fixture();
  const ExactState s0 = fig1::initial_state(fx);
  const std::vector<VertexId> none;
  EpochAction serve;
  serve.moves = {{VehicleMove{MoveKind::kServe, fig1::kA}}};
  CHECK_THROWS_AS(apply_epoch_action(s0, serve, none, fx), std::invalid_argument);
  const ExactState s1 = apply_epoch_action(s0, fig1::travel_to(fig1::kB), none, fx);
  CHECK(s1.epoch == 2);
  CHECK(s1.vehicles[0].vertex == fig1::kB);
  CHECK(s1.vehicles[0].ready == 3.0);
  CHECK_THROWS_AS(apply_epoch_action(s1, fig1::travel_to(fig1::kC), none, fx), std::invalid_argument);
}

TEST_CASE("single scenario: exact equals two-stage") {
  std::mt19937_64 gen(8);
  Rng rng(8);
  for (int trial = 0; trial < 15; ++trial) {
    const Instance inst = tiny_dynamic(gen, 4, 9, 2);
    const Fleet fleet = initial_fleet(inst);
    const RoutePlan plan = greedy_plan(inst, fleet, 2);
    const ExactState s = exact_state(plan, fleet, 1);
    const std::vector<WeightedScenario> one{{sample_scenario(inst, 1, rng), 1.0}};
    CHECK(exact_q(s, one, inst) == doctest::Approx(two_stage_value(s, one, inst)));
  }
}

TEST_CASE("relaxation and upper bound on random tiny instances") {
  std::mt19937_64 gen(31337);
  Rng rng(99);
  int finite = 0, strict = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int customers = 4 + trial % 2;
    const Instance inst = tiny_dynamic(gen, customers, 10, 1 + trial % 2);
    Fleet fleet = initial_fleet(inst);
    RoutePlan plan = greedy_plan(inst, fleet, 2);
    // half of the trials start in the middle of the horizon
    const int t = trial % 2 ? 0 : 3;
    if (t > 0) advance_plan(plan, fleet, inst, t + 1);
    const int from = t + 1;
    std::vector<Scenario> pool;
    for (int i = 0; i < 6; ++i) pool.push_back(sample_scenario(inst, from, rng));
    const auto ws = weighted(pool);
    const ExactState s = exact_state(plan, fleet, from);
    const double exact = exact_q(s, ws, inst);
    const double relaxed = two_stage_value(s, ws, inst);
    const EvalResult q = q_bar(plan, fleet, pool, inst, from);
    INFO("trial " << trial << " exact " << exact << " relaxed " << relaxed << " qbar " << q.mean_rejections);
    CHECK(relaxed <= exact + 1e-9);
    CHECK(q.mean_rejections >= exact - 1e-9);
    if (std::isfinite(exact)) ++finite;
    if (q.mean_rejections > exact + 1e-9) ++strict;
  }
  CHECK(finite >= 30);
  MESSAGE("qbar strictly above the exact value in " << strict << " of 40 trials");
}

TEST_CASE("shared reveal prefixes give identical simulated prefixes") {
  const Instance inst = generate_dynamic_instance(parse_static_instance_file(data_path("syn100.txt")),
                                                  class_profile(4), 3);
  const Fleet fleet = initial_fleet(inst);
  RoutePlan plan = RoutePlan::empty(inst.vehicle_count, 1, WaitingStrategy::kDriveFirst, false);
  for (const auto& r : inst.deterministic_requests()) try_to_serve(r, plan, fleet, inst);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Scenario a = sample_scenario(inst, 1, rng);
    Scenario b = sample_scenario(inst, 1, rng);
    const int cut = 40 + 10 * trial;
    // b shares a's reveals through `cut`
    std::erase_if(b.reveals, [&](const SampledReveal& r) { return r.epoch <= cut; });
    for (const auto& r : a.reveals)
      if (r.epoch <= cut) b.reveals.push_back(r);
    std::sort(b.reveals.begin(), b.reveals.end());
    std::vector<TraceEvent> ta, tb;
    simulate_scenario(plan, fleet, a, inst, 1, &ta);
    simulate_scenario(plan, fleet, b, inst, 1, &tb);
    auto prefix = [&](std::vector<TraceEvent> t) {
      std::erase_if(t, [&](const TraceEvent& e) { return e.epoch > cut; });
      std::sort(t.begin(), t.end(), [](const TraceEvent& x, const TraceEvent& y) {
        return std::tie(x.epoch, x.kind, x.vehicle, x.vertex, x.time) <
               std::tie(y.epoch, y.kind, y.vehicle, y.vertex, y.time);
      });
      return t;
    };
    CHECK(prefix(ta) == prefix(tb));
  }
}

TEST_CASE("pool union, determinism, parallel equals serial") {
  Instance inst = generate_dynamic_instance(parse_static_instance_file(data_path("syn100.txt")),
                                            class_profile(4), 8);
  inst.vehicle_count = 3;
  const Fleet fleet = initial_fleet(inst);
  RoutePlan plan = RoutePlan::empty(inst.vehicle_count, 1, WaitingStrategy::kDriveFirst, false);
  for (const auto& r : inst.deterministic_requests()) try_to_serve(r, plan, fleet, inst);
  const ScenarioPool p1 = init_pool(inst, 20, 20, 1, 1);
  const ScenarioPool p2 = init_pool(inst, 35, 35, 1, 2);
  ScenarioPool both = p1;
  both.scenarios.insert(both.scenarios.end(), p2.scenarios.begin(), p2.scenarios.end());
  const EvalResult q1 = q_bar(plan, fleet, p1, inst);
  const EvalResult q2 = q_bar(plan, fleet, p2, inst);
  const EvalResult q12 = q_bar(plan, fleet, both, inst);
  CHECK(q12.mean_rejections == doctest::Approx((20 * q1.mean_rejections + 35 * q2.mean_rejections) / 55));
  CHECK(q_bar(plan, fleet, both, inst) == q12);
  CHECK(q_bar_serial(plan, fleet, both.scenarios, inst) == q12);
  double sum = 0;
  for (int v : q12.per_scenario) sum += v;
  CHECK(q12.mean_rejections == doctest::Approx(sum / 55));
  CHECK(q12.mean_rejections > 0.0);
}
