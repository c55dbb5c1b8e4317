#include "dsvrp/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace dsvrp {

namespace {
constexpr double kCostTieEps = 1e-9;
}

double insertion_cost(const RoutePlan& plan, std::span<const VehicleState> fleet, const Instance& instance, int vehicle,
                      std::size_t position, VertexId v) {
  const auto& route = plan.routes[static_cast<std::size_t>(vehicle)];
  const VertexId prev = position == 0 ? fleet[static_cast<std::size_t>(vehicle)].vertex : route[position - 1].vertex;
  const VertexId next = position == route.size() ? kDepot : route[position].vertex;
  return instance.travel_time(prev, v) + instance.travel_time(v, next) - instance.travel_time(prev, next);
}

std::vector<Insertion> feasible_insertions(const Visit& visit, const RoutePlan& plan,
                                           std::span<const VehicleState> fleet, const Instance& instance) {
  std::vector<Insertion> out;
  for (std::size_t k = 0; k < plan.routes.size(); ++k) {
    if (fleet[k].finished) continue;
    const auto& route = plan.routes[k];
    for (std::size_t pos = 0; pos <= route.size(); ++pos) {
      if (!route_feasible_with(route, pos, visit, fleet[k], plan.start_epoch, plan.strategy, instance)) continue;
      out.push_back({static_cast<int>(k), pos,
                     insertion_cost(plan, fleet, instance, static_cast<int>(k), pos, visit.vertex)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Insertion& a, const Insertion& b) {
    return a.added_cost < b.added_cost - kCostTieEps;
  });
  return out;
}

std::optional<Insertion> best_insertion(const Request& request, const RoutePlan& plan,
                                        std::span<const VehicleState> fleet, const Instance& instance) {
  const Visit visit = Visit::service(request);
  std::optional<Insertion> best;
  for (std::size_t k = 0; k < plan.routes.size(); ++k) {
    if (fleet[k].finished) continue;
    const auto& route = plan.routes[k];
    for (std::size_t pos = 0; pos <= route.size(); ++pos) {
      const double cost = insertion_cost(plan, fleet, instance, static_cast<int>(k), pos, request.vertex);
      if (best && cost >= best->added_cost - kCostTieEps) continue;
      if (!route_feasible_with(route, pos, visit, fleet[k], plan.start_epoch, plan.strategy, instance)) continue;
      best = Insertion{static_cast<int>(k), pos, cost};
    }
  }
  return best;
}

bool try_to_serve(const Request& request, RoutePlan& plan, std::span<const VehicleState> fleet,
                  const Instance& instance, Insertion* chosen) {
  const auto best = best_insertion(request, plan, fleet, instance);
  if (!best) return false;
  auto& route = plan.routes[static_cast<std::size_t>(best->vehicle)];
  route.insert(route.begin() + static_cast<std::ptrdiff_t>(best->position), Visit::service(request));
  if (chosen) *chosen = *best;
  return true;
}

namespace {

void trace_departures(std::span<const CommittedDeparture> deps, std::vector<TraceEvent>& trace) {
  for (const auto& d : deps)
    trace.push_back({TraceEvent::kDepart, static_cast<int>(std::floor(d.departure)), d.vehicle, d.to, d.departure});
}

}  // namespace

int simulate_scenario(const RoutePlan& plan, std::span<const VehicleState> fleet, const Scenario& scenario,
                      const Instance& instance, int first_reveal_epoch, std::vector<TraceEvent>* trace) {
  thread_local RoutePlan b;
  thread_local Fleet f;
  thread_local std::vector<CommittedDeparture> deps;
  b = plan;
  f.assign(fleet.begin(), fleet.end());
  const int first = first_reveal_epoch > 0 ? first_reveal_epoch : plan.start_epoch;
  int rejected = 0;
  int arrival = 0;
  int last_epoch = -1;
  for (const auto& rv : scenario.reveals) {
    if (rv.epoch < first) continue;
    if (rv.epoch > instance.horizon) break;
    if (rv.epoch != last_epoch) {
      arrival = 0;
      last_epoch = rv.epoch;
      if (rv.epoch > b.start_epoch || trace) {
        deps.clear();
        advance_plan(b, f, instance, rv.epoch, trace ? &deps : nullptr);
        if (trace) trace_departures(deps, *trace);
      }
    }
    const Request r{rv.vertex, rv.epoch, arrival++};
    Insertion chosen;
    if (try_to_serve(r, b, f, instance, &chosen)) {
      if (trace) trace->push_back({TraceEvent::kAccept, rv.epoch, chosen.vehicle, rv.vertex, 0.0});
    } else {
      ++rejected;
      if (trace) trace->push_back({TraceEvent::kReject, rv.epoch, -1, rv.vertex, 0.0});
    }
  }
  if (trace) {
    deps.clear();
    advance_plan(b, f, instance, instance.horizon + 1, &deps);
    trace_departures(deps, *trace);
  }
  return rejected;
}

namespace {

EvalResult finish(std::vector<int> per) {
  EvalResult r;
  long long sum = 0;
  for (int v : per) sum += v;
  r.mean_rejections = per.empty() ? 0.0 : static_cast<double>(sum) / static_cast<double>(per.size());
  r.per_scenario = std::move(per);
  return r;
}

EvalResult infeasible_result() { return EvalResult{kInfeasible, {}}; }

}  // namespace

EvalResult q_bar(const RoutePlan& plan, std::span<const VehicleState> fleet, const ScenarioPool& pool,
                 const Instance& instance, int first_reveal_epoch) {
  return q_bar(plan, fleet, std::span<const Scenario>(pool.scenarios), instance, first_reveal_epoch);
}

EvalResult q_bar(const RoutePlan& plan, std::span<const VehicleState> fleet, std::span<const Scenario> scenarios,
                 const Instance& instance, int first_reveal_epoch) {
  if (!plan_feasible(plan, instance, fleet)) return infeasible_result();
  const long long n = static_cast<long long>(scenarios.size());
  std::vector<int> per(scenarios.size(), 0);
#pragma omp parallel for schedule(dynamic, 1) if (n > 1)
  for (long long i = 0; i < n; ++i)
    per[static_cast<std::size_t>(i)] =
        simulate_scenario(plan, fleet, scenarios[static_cast<std::size_t>(i)], instance, first_reveal_epoch);
  return finish(std::move(per));
}

EvalResult q_bar_serial(const RoutePlan& plan, std::span<const VehicleState> fleet,
                        std::span<const Scenario> scenarios, const Instance& instance, int first_reveal_epoch) {
  if (!plan_feasible(plan, instance, fleet)) return infeasible_result();
  std::vector<int> per;
  per.reserve(scenarios.size());
  for (const auto& s : scenarios) per.push_back(simulate_scenario(plan, fleet, s, instance, first_reveal_epoch));
  return finish(std::move(per));
}

}  // namespace dsvrp
