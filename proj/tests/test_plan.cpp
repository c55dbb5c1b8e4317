#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "dsvrp/plan.hpp"
#include "test_support.hpp"

using namespace dsvrp;
using testing_support::req;

namespace {

Instance line_instance() {
  // depot 0, customers 1..3 on a line, 5 apart
  Instance inst;
  inst.resize(3, 100);
  inst.vehicle_count = 2;
  inst.capacity = 10;
  inst.window[kDepot] = {0, 100};
  for (int i = 0; i <= 3; ++i)
    for (int j = 0; j <= 3; ++j) inst.travel_time(i, j) = 5.0 * std::abs(i - j);
  for (int i = 1; i <= 3; ++i) {
    inst.demand[i] = 3;
    inst.service[i] = 2;
    inst.window[i] = {0, 100};
  }
  inst.window[2] = {20, 40};
  return inst;
}

RoutePlan plan_of(std::vector<std::vector<VertexId>> routes, WaitingStrategy s = WaitingStrategy::kDriveFirst) {
  RoutePlan p = RoutePlan::empty(static_cast<int>(routes.size()), 1, s, false);
  for (std::size_t k = 0; k < routes.size(); ++k)
    for (VertexId v : routes[k]) p.routes[k].push_back(Visit::service(req(v)));
  return p;
}

}  // namespace

TEST_CASE("DF: arrival and service start on a single visit") {
  const Instance inst = line_instance();
  const Fleet fleet = initial_fleet(inst);
  const auto sched = compute_schedule(plan_of({{2}, {}}), inst, fleet);
  REQUIRE(sched);
  const auto& v = sched->vehicles[0];
  CHECK(v.first_departure == 1.0);
  CHECK(v.visits[0].arrival == 11.0);
  CHECK(v.visits[0].start == 20.0);
  CHECK(v.closes_route);
  CHECK(v.depot_arrival == 100.0);
  CHECK(sched->vehicles[1].visits.empty());
}

TEST_CASE("infeasibility: window, capacity, horizon") {
  Instance inst = line_instance();
  Fleet fleet = initial_fleet(inst);
  inst.window[3] = {0, 10};
  CHECK_FALSE(compute_schedule(plan_of({{3}, {}}), inst, fleet));
  inst.window[3] = {0, 100};
  inst.capacity = 5;
  CHECK_FALSE(compute_schedule(plan_of({{1, 3}, {}}), inst, fleet));
  inst.capacity = 10;
  inst.window[kDepot] = {0, 20};
  CHECK_FALSE(compute_schedule(plan_of({{3}, {}}), inst, fleet));
  // boundaries are closed
  inst.window[kDepot] = {0, 100};
  inst.window[3] = {16, 16};
  CHECK(compute_schedule(plan_of({{3}, {}}), inst, fleet));
  CHECK_THROWS(compute_schedule(plan_of({{7}, {}}), inst, fleet));
}

TEST_CASE("WF starts are the latest achievable and dominate DF") {
  std::mt19937_64 gen(42);
  int checked = 0;
  for (int trial = 0; trial < 300 && checked < 60; ++trial) {
    const int horizon = 18;
    Instance inst = testing_support::random_tiny_instance(gen, 3, horizon, 1, 3, 0, 5);
    const Fleet fleet = initial_fleet(inst);
    RoutePlan df = plan_of({{1, 2, 3}});
    RoutePlan wf = plan_of({{1, 2, 3}}, WaitingStrategy::kWaitFirst);
    const auto sd = compute_schedule(df, inst, fleet);
    const auto sw = compute_schedule(wf, inst, fleet);
    CHECK(sd.has_value() == sw.has_value());
    if (!sd) continue;
    ++checked;
    CHECK(schedule_valid(wf, *sw, inst, fleet));
    // brute force over integer extra waits before each departure
    std::vector<double> best(3, -1.0);
    for (int w0 = 0; w0 <= horizon; ++w0)
      for (int w1 = 0; w1 <= horizon; ++w1)
        for (int w2 = 0; w2 <= horizon; ++w2) {
          const int waits[3] = {w0, w1, w2};
          double avail = 1.0;
          VertexId prev = kDepot;
          std::vector<double> starts;
          bool ok = true;
          for (int j = 0; j < 3 && ok; ++j) {
            const VertexId v = j + 1;
            const double arrival = avail + waits[j] + inst.travel_time(prev, v);
            const double start = std::max(arrival, static_cast<double>(inst.window[v].earliest));
            if (start > inst.window[v].latest) ok = false;
            starts.push_back(start);
            avail = start + inst.service[v];
            prev = v;
          }
          if (!ok || avail + inst.travel_time(prev, kDepot) > inst.depot_deadline()) continue;
          for (int j = 0; j < 3; ++j) best[j] = std::max(best[j], starts[j]);
        }
    for (int j = 0; j < 3; ++j) {
      CHECK(sw->vehicles[0].visits[j].start >= sd->vehicles[0].visits[j].start);
      CHECK(sw->vehicles[0].visits[j].start == best[j]);
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("RO without relocation visits equals DF") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = testing_support::random_real_instance(gen, 6, 200, 2);
    const Fleet fleet = initial_fleet(inst);
    RoutePlan df = plan_of({{1, 2, 3}, {4, 5, 6}});
    RoutePlan ro = plan_of({{1, 2, 3}, {4, 5, 6}}, WaitingStrategy::kRelocationOnly);
    const auto a = compute_schedule(df, inst, fleet);
    const auto b = compute_schedule(ro, inst, fleet);
    REQUIRE(a.has_value() == b.has_value());
    if (!a) continue;
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 3; ++j) {
        CHECK(a->vehicles[k].visits[j].arrival == b->vehicles[k].visits[j].arrival);
        CHECK(a->vehicles[k].visits[j].start == b->vehicles[k].visits[j].start);
        CHECK(a->vehicles[k].visits[j].departure == b->vehicles[k].visits[j].departure);
      }
  }
}

TEST_CASE("RO waits at a relocation visit, DF does not") {
  Instance inst = line_instance();
  const Fleet fleet = initial_fleet(inst);
  RoutePlan ro = RoutePlan::empty(2, 1, WaitingStrategy::kRelocationOnly, true);
  ro.routes[0] = {Visit::relocation(1), Visit::service(req(3))};
  inst.window[3] = {50, 60};
  const auto s = compute_schedule(ro, inst, fleet);
  REQUIRE(s);
  CHECK(s->vehicles[0].visits[0].arrival == 6.0);
  // departs at the latest time still reaching 3 by its due date
  CHECK(s->vehicles[0].visits[0].departure == 50.0);
  CHECK(s->vehicles[0].visits[1].start == 60.0);
  RoutePlan df = ro;
  df.strategy = WaitingStrategy::kDriveFirst;
  const auto d = compute_schedule(df, inst, fleet);
  REQUIRE(d);
  CHECK(d->vehicles[0].visits[0].departure == 6.0);
  CHECK(d->vehicles[0].visits[1].start == 50.0);
}

TEST_CASE("CW adds the waits after service") {
  const Instance inst = line_instance();
  const Fleet fleet = initial_fleet(inst);
  RoutePlan cw = plan_of({{1, 3}, {}}, WaitingStrategy::kCustomWait);
  cw.routes[0][0].custom_wait = 4;
  const auto s = compute_schedule(cw, inst, fleet);
  REQUIRE(s);
  CHECK(s->vehicles[0].visits[0].start == 6.0);
  CHECK(s->vehicles[0].visits[0].departure == 12.0);
  CHECK(s->vehicles[0].visits[1].arrival == 22.0);
  CHECK(schedule_valid(cw, *s, inst, fleet));
}

TEST_CASE("feasible schedules pass the independent validator") {
  std::mt19937_64 gen(99);
  int feasible = 0;
  for (WaitingStrategy s : {WaitingStrategy::kDriveFirst, WaitingStrategy::kWaitFirst, WaitingStrategy::kCustomWait,
                            WaitingStrategy::kRelocationOnly}) {
    for (int trial = 0; trial < 150; ++trial) {
      const Instance inst = testing_support::random_real_instance(gen, 6, 300, 2);
      const Fleet fleet = initial_fleet(inst);
      RoutePlan p = plan_of({{1, 2, 3}, {4, 5}}, s);
      if (s == WaitingStrategy::kRelocationOnly) p.routes[1].insert(p.routes[1].begin() + 1, Visit::relocation(6));
      if (s == WaitingStrategy::kCustomWait) p.routes[0][1].custom_wait = trial % 5;
      const auto sched = compute_schedule(p, inst, fleet);
      if (!sched) continue;
      ++feasible;
      CHECK(schedule_valid(p, *sched, inst, fleet));
      CHECK(plan_feasible(p, inst, fleet));
      // purity
      const auto again = compute_schedule(p, inst, fleet);
      CHECK(again->vehicles[0].visits[0].start == sched->vehicles[0].visits[0].start);
    }
  }
  CHECK(feasible > 40);
}

TEST_CASE("validator rejects a tampered schedule") {
  const Instance inst = line_instance();
  const Fleet fleet = initial_fleet(inst);
  const RoutePlan p = plan_of({{2}, {}});
  auto sched = *compute_schedule(p, inst, fleet);
  CHECK(schedule_valid(p, sched, inst, fleet));
  sched.vehicles[0].visits[0].start = 15.0;
  CHECK_FALSE(schedule_valid(p, sched, inst, fleet));
}

TEST_CASE("omega") {
  DecisionLog log;
  CHECK(objective_omega(log, true) == 0.0);
  log.accept(0, req(1), 0);
  CHECK(objective_omega(log, true) == 0.0);
  log.reject(1, req(2, 1));
  log.reject(1, req(3, 1, 1));
  log.reject(2, req(4, 2));
  CHECK(objective_omega(log, true) == 3.0);
  CHECK(objective_omega(log, false) == kInfeasible);
  CHECK_THROWS_AS(log.reject(1, req(5, 1)), std::logic_error);
}

TEST_CASE("total travel cost") {
  const Instance inst = line_instance();
  CHECK(total_travel_cost(plan_of({{}, {}}), inst) == 0.0);
  Instance two = line_instance();
  CHECK(total_travel_cost(plan_of({{1}, {}}), two) == 10.0);
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance r = testing_support::random_real_instance(gen, 5, 100, 1);
    std::vector<VertexId> order{1, 2, 3, 4, 5};
    std::shuffle(order.begin(), order.end(), gen);
    double sum = r.travel_time(0, order[0]) + r.travel_time(order[4], 0);
    for (int j = 0; j < 4; ++j) sum += r.travel_time(order[j], order[j + 1]);
    CHECK(total_travel_cost(plan_of({order}), r) == doctest::Approx(sum));
  }
}

TEST_CASE("advance_plan commits departures and keeps the log feasible") {
  const Instance inst = line_instance();
  Fleet fleet = initial_fleet(inst);
  RoutePlan p = plan_of({{1, 2}, {3}});
  DecisionLog log;
  log.accept(0, req(1), 0);
  log.accept(0, req(2), 0);
  log.accept(0, req(3), 1);
  auto d = advance_plan(p, fleet, inst, 2);
  // both vehicles leave at 1
  REQUIRE(d.size() == 2);
  CHECK(d[0].to == 1);
  CHECK(d[1].to == 3);
  CHECK(p.routes[0].size() == 1);
  CHECK(p.routes[1].empty());
  CHECK(fleet[0].vertex == 1);
  CHECK(fleet[0].ready == 8.0);
  CHECK(fleet[1].load == 3.0);
  CHECK(p.start_epoch == 2);
  log.record_departures(1, d);
  for (int t = 2; t <= inst.horizon; ++t) log.record_departures(t, advance_plan(p, fleet, inst, t + 1));
  CHECK(fleet[0].finished);
  CHECK(fleet[1].finished);
  std::string why;
  CHECK_MESSAGE(log_feasible(log, inst, true, &why), why);
  CHECK(objective_omega(log, true) == 0.0);
}

TEST_CASE("log_feasible catches broken logs") {
  const Instance inst = line_instance();
  DecisionLog late;
  late.accept(0, req(2), 0);
  CommittedDeparture d{0, 2, 35.0, 45.0, 45.0, VisitKind::kService, req(2), false};
  late.record_departures(35, std::span(&d, 1));
  CHECK_FALSE(log_feasible(late, inst, false));

  DecisionLog unserved;
  unserved.accept(0, req(1), 0);
  CHECK(log_feasible(unserved, inst, false));
  CHECK_FALSE(log_feasible(unserved, inst, true));

  DecisionLog twice;
  twice.accept(0, req(1), 0);
  twice.reject(0, req(1));
  CHECK_FALSE(log_feasible(twice, inst, false));
}

TEST_CASE("plan dump") {
  RoutePlan p = plan_of({{1, 2}, {}}, WaitingStrategy::kCustomWait);
  p.routes[0][1].custom_wait = 3;
  CHECK(dump_plan(p) == "start 1 strategy cw\nvehicle 0: S1 S2(w3)\nvehicle 1:\n");
}
