#include "dsvrp/plan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "text_util.hpp"

namespace dsvrp {

const char* strategy_tag(WaitingStrategy s) {
  switch (s) {
    case WaitingStrategy::kDriveFirst: return "df";
    case WaitingStrategy::kWaitFirst: return "wf";
    case WaitingStrategy::kCustomWait: return "cw";
    case WaitingStrategy::kRelocationOnly: return "ro";
  }
  return "?";
}

WaitingStrategy parse_strategy(const std::string& tag) {
  if (tag == "df") return WaitingStrategy::kDriveFirst;
  if (tag == "wf") return WaitingStrategy::kWaitFirst;
  if (tag == "cw") return WaitingStrategy::kCustomWait;
  if (tag == "ro") return WaitingStrategy::kRelocationOnly;
  throw std::invalid_argument("unknown waiting strategy '" + tag + "'");
}

Fleet initial_fleet(const Instance& instance) {
  VehicleState s;
  s.vertex = kDepot;
  s.ready = std::max(1.0, static_cast<double>(instance.window[kDepot].earliest));
  return Fleet(static_cast<std::size_t>(instance.vehicle_count), s);
}

RoutePlan RoutePlan::empty(int vehicles, int start_epoch, WaitingStrategy strategy, bool relocation) {
  RoutePlan p;
  p.routes.assign(static_cast<std::size_t>(vehicles), {});
  p.start_epoch = start_epoch;
  p.strategy = strategy;
  p.relocation_enabled = relocation || strategy == WaitingStrategy::kRelocationOnly;
  return p;
}

std::size_t RoutePlan::visit_count() const {
  std::size_t n = 0;
  for (const auto& r : routes) n += r.size();
  return n;
}

std::size_t RoutePlan::service_count() const {
  std::size_t n = 0;
  for (const auto& r : routes)
    for (const auto& v : r) n += v.is_service() ? 1 : 0;
  return n;
}

namespace {

// Forward/backward scheduling over a virtual sequence of `count` visits
// given by `at(j)`. Fills `out` (if non-null) and returns feasibility.
template <class VisitAt>
bool schedule_sequence(std::size_t count, VisitAt&& at, const VehicleState& state, double now,
                       WaitingStrategy strategy, const Instance& inst, VehicleSchedule* out) {
  if (state.finished) {
    if (out) {
      out->visits.clear();
      out->closes_route = false;
    }
    return count == 0;
  }
  const double deadline = inst.depot_deadline();
  const bool need_latest = strategy == WaitingStrategy::kWaitFirst || strategy == WaitingStrategy::kRelocationOnly;

  // Latest service starts keeping the remainder (and depot return) feasible.
  thread_local std::vector<double> latest;
  if (need_latest) {
    latest.resize(count + 1);
    latest[count] = deadline;
    VertexId next = kDepot;
    for (std::size_t j = count; j-- > 0;) {
      const Visit& v = at(j);
      const double leave_by = latest[j + 1] - inst.travel_time(v.vertex, next);
      if (v.is_service())
        latest[j] = std::min(static_cast<double>(inst.window[v.vertex].latest), leave_by - inst.service[v.vertex]);
      else
        latest[j] = leave_by;
      next = v.vertex;
    }
  }

  VertexId prev = state.vertex;
  double avail = std::max(state.ready, now);
  double load = state.load;
  bool prev_relocation = state.holding;
  if (out) {
    out->visits.resize(count);
    out->closes_route = false;
  }
  for (std::size_t j = 0; j < count; ++j) {
    const Visit& v = at(j);
    const double tt = inst.travel_time(prev, v.vertex);
    double dep = avail;
    if (strategy == WaitingStrategy::kWaitFirst ||
        (strategy == WaitingStrategy::kRelocationOnly && prev_relocation && v.vertex != prev))
      dep = std::max(avail, latest[j] - tt);
    const double arrival = dep + tt;
    double start = arrival;
    double ready = arrival;
    if (v.is_service()) {
      const TimeWindow w = inst.window[v.vertex];
      start = std::max(arrival, static_cast<double>(w.earliest));
      if (start > w.latest + kTimeEps) return false;
      load += inst.demand[v.vertex];
      if (load > inst.capacity + kTimeEps) return false;
      ready = start + inst.service[v.vertex];
    }
    if (strategy == WaitingStrategy::kCustomWait) ready += v.custom_wait;
    if (out) {
      if (j == 0) out->first_departure = dep;
      else out->visits[j - 1].departure = dep;
      out->visits[j].arrival = arrival;
      out->visits[j].start = start;
    }
    prev = v.vertex;
    avail = ready;
    prev_relocation = !v.is_service();
  }
  if (prev == kDepot && count == 0) {
    if (out) out->first_departure = avail;
    return true;
  }
  const double back = inst.travel_time(prev, kDepot);
  if (avail + back > deadline + kTimeEps) return false;
  if (out) {
    out->depot_departure = deadline - back;
    out->depot_arrival = deadline;
    if (count == 0) out->first_departure = out->depot_departure;
    else out->visits[count - 1].departure = out->depot_departure;
    out->closes_route = true;
  }
  return true;
}

}  // namespace

bool route_feasible(std::span<const Visit> route, const VehicleState& state, double now, WaitingStrategy strategy,
                    const Instance& instance) {
  return schedule_sequence(
      route.size(), [&](std::size_t j) -> const Visit& { return route[j]; }, state, now, strategy, instance, nullptr);
}

bool route_feasible_with(std::span<const Visit> route, std::size_t position, const Visit& inserted,
                         const VehicleState& state, double now, WaitingStrategy strategy, const Instance& instance) {
  return schedule_sequence(
      route.size() + 1,
      [&](std::size_t j) -> const Visit& {
        if (j < position) return route[j];
        if (j == position) return inserted;
        return route[j - 1];
      },
      state, now, strategy, instance, nullptr);
}

std::optional<Schedule> compute_schedule(const RoutePlan& plan, const Instance& instance,
                                         std::span<const VehicleState> fleet) {
  if (fleet.size() != plan.routes.size()) throw std::invalid_argument("fleet and plan sizes differ");
  Schedule sched;
  sched.vehicles.resize(plan.routes.size());
  for (std::size_t k = 0; k < plan.routes.size(); ++k) {
    const auto& route = plan.routes[k];
    for (const auto& v : route)
      if (v.vertex < 1 || v.vertex > instance.customer_count)
        throw std::out_of_range("plan references unknown vertex " + std::to_string(v.vertex));
    if (!schedule_sequence(
            route.size(), [&](std::size_t j) -> const Visit& { return route[j]; }, fleet[k], plan.start_epoch,
            plan.strategy, instance, &sched.vehicles[k]))
      return std::nullopt;
  }
  return sched;
}

bool plan_feasible(const RoutePlan& plan, const Instance& instance, std::span<const VehicleState> fleet) {
  for (std::size_t k = 0; k < plan.routes.size(); ++k)
    if (!route_feasible(plan.routes[k], fleet[k], plan.start_epoch, plan.strategy, instance)) return false;
  return true;
}

bool schedule_valid(const RoutePlan& plan, const Schedule& schedule, const Instance& instance,
                    std::span<const VehicleState> fleet) {
  const double eps = 1e-7;
  const double deadline = instance.depot_deadline();
  for (std::size_t k = 0; k < plan.routes.size(); ++k) {
    const auto& route = plan.routes[k];
    const auto& vs = schedule.vehicles[k];
    const VehicleState& st = fleet[k];
    if (route.empty() && st.vertex == kDepot) continue;
    if (st.finished) return route.empty();
    if (vs.visits.size() != route.size()) return false;
    double load = st.load;
    VertexId prev = st.vertex;
    double leave = vs.first_departure;
    if (leave + eps < std::max(st.ready, static_cast<double>(plan.start_epoch)) || leave + eps < 1.0) return false;
    for (std::size_t j = 0; j < route.size(); ++j) {
      const Visit& v = route[j];
      const VisitTimes& t = vs.visits[j];
      if (std::abs(t.arrival - (leave + instance.travel_time(prev, v.vertex))) > eps) return false;
      if (t.start + eps < t.arrival) return false;
      double min_leave = t.start;
      if (v.is_service()) {
        if (t.start + eps < instance.window[v.vertex].earliest || t.start > instance.window[v.vertex].latest + eps)
          return false;
        load += instance.demand[v.vertex];
        if (load > instance.capacity + eps) return false;
        min_leave += instance.service[v.vertex];
      }
      if (plan.strategy == WaitingStrategy::kCustomWait) min_leave += v.custom_wait;
      if (t.departure + eps < min_leave) return false;
      prev = v.vertex;
      leave = t.departure;
    }
    if (leave + instance.travel_time(prev, kDepot) > deadline + eps) return false;
  }
  return true;
}

std::vector<CommittedDeparture> advance_plan(RoutePlan& plan, Fleet& fleet, const Instance& instance, int until) {
  std::vector<CommittedDeparture> committed;
  advance_plan(plan, fleet, instance, until, &committed);
  return committed;
}

void advance_plan(RoutePlan& plan, Fleet& fleet, const Instance& instance, int until,
                  std::vector<CommittedDeparture>* committed) {
  thread_local VehicleSchedule sched;
  for (std::size_t k = 0; k < plan.routes.size(); ++k) {
    auto& route = plan.routes[k];
    VehicleState& st = fleet[k];
    if (st.finished) continue;
    if (route.empty() && st.vertex == kDepot) continue;
    if (!schedule_sequence(
            route.size(), [&](std::size_t j) -> const Visit& { return route[j]; }, st, plan.start_epoch,
            plan.strategy, instance, &sched))
      throw std::logic_error("advance_plan on an infeasible route");
    std::size_t frozen = 0;
    double leave = sched.first_departure;
    while (frozen < route.size() && leave < until) {
      const Visit& v = route[frozen];
      const VisitTimes& t = sched.visits[frozen];
      CommittedDeparture d;
      d.vehicle = static_cast<int>(k);
      d.to = v.vertex;
      d.departure = leave;
      d.arrival = t.arrival;
      d.start = t.start;
      d.kind = v.kind;
      d.request = v.request;
      if (committed) committed->push_back(d);
      st.vertex = v.vertex;
      st.holding = !v.is_service();
      if (v.is_service()) {
        st.load += instance.demand[v.vertex];
        st.ready = t.start + instance.service[v.vertex];
      } else {
        st.ready = t.start;
      }
      if (plan.strategy == WaitingStrategy::kCustomWait) st.ready += v.custom_wait;
      leave = t.departure;
      ++frozen;
    }
    route.erase(route.begin(), route.begin() + static_cast<std::ptrdiff_t>(frozen));
    if (route.empty() && st.vertex != kDepot && sched.closes_route && sched.depot_departure < until) {
      CommittedDeparture d;
      d.vehicle = static_cast<int>(k);
      d.to = kDepot;
      d.departure = sched.depot_departure;
      d.arrival = sched.depot_arrival;
      d.start = sched.depot_arrival;
      d.kind = VisitKind::kRelocation;
      d.closes_route = true;
      if (committed) committed->push_back(d);
      st.vertex = kDepot;
      st.ready = sched.depot_arrival;
      st.holding = false;
      st.finished = true;
    }
  }
  plan.start_epoch = std::max(plan.start_epoch, until);
}

double total_travel_cost(const RoutePlan& plan, const Instance& instance, std::span<const VehicleState> fleet) {
  double cost = 0.0;
  for (std::size_t k = 0; k < plan.routes.size(); ++k) {
    VertexId prev = fleet[k].vertex;
    for (const auto& v : plan.routes[k]) {
      cost += instance.travel_time(prev, v.vertex);
      prev = v.vertex;
    }
    if (prev != kDepot) cost += instance.travel_time(prev, kDepot);
  }
  return cost;
}

double total_travel_cost(const RoutePlan& plan, const Instance& instance) {
  Fleet fleet(plan.routes.size(), VehicleState{});
  return total_travel_cost(plan, instance, fleet);
}

std::string dump_plan(const RoutePlan& plan) {
  std::ostringstream out;
  out << "start " << plan.start_epoch << " strategy " << strategy_tag(plan.strategy)
      << (plan.relocation_enabled ? " relocation" : "") << '\n';
  for (std::size_t k = 0; k < plan.routes.size(); ++k) {
    out << "vehicle " << k << ':';
    for (const auto& v : plan.routes[k]) {
      out << ' ' << (v.is_service() ? 'S' : 'R') << v.vertex;
      if (v.custom_wait) out << "(w" << v.custom_wait << ')';
    }
    out << '\n';
  }
  return out.str();
}

EpochRecord& DecisionLog::at(int epoch) {
  if (records_.empty() || records_.back().epoch != epoch) {
    if (!records_.empty() && records_.back().epoch > epoch)
      throw std::logic_error("decision log epochs must be non-decreasing");
    records_.push_back(EpochRecord{epoch, {}, {}, {}});
  }
  return records_.back();
}

void DecisionLog::accept(int epoch, const Request& r, int vehicle) {
  at(epoch).accepted.push_back({r, vehicle});
  ++accepted_;
}

void DecisionLog::reject(int epoch, const Request& r) {
  at(epoch).rejected.push_back(r);
  ++rejected_;
}

void DecisionLog::record_departures(int epoch, std::span<const CommittedDeparture> departures) {
  if (departures.empty()) return;
  auto& rec = at(epoch);
  rec.departures.insert(rec.departures.end(), departures.begin(), departures.end());
}

std::string DecisionLog::serialize() const {
  using detail::format_double;
  std::ostringstream out;
  for (const auto& rec : records_) {
    out << "epoch " << rec.epoch << '\n';
    for (const auto& a : rec.accepted)
      out << "  accept " << a.request.vertex << '@' << a.request.reveal_epoch << '#' << a.request.arrival_index
          << " vehicle " << a.vehicle << '\n';
    for (const auto& r : rec.rejected)
      out << "  reject " << r.vertex << '@' << r.reveal_epoch << '#' << r.arrival_index << '\n';
    for (const auto& d : rec.departures) {
      out << "  vehicle " << d.vehicle << (d.closes_route ? " return " : " travel ") << d.to << " depart "
          << format_double(d.departure) << " arrive " << format_double(d.arrival);
      if (d.request) out << " serve " << d.request->vertex << '@' << d.request->reveal_epoch << " start "
                         << format_double(d.start);
      else if (!d.closes_route) out << " relocate";
      out << '\n';
    }
  }
  out << "rejected " << rejected_ << " accepted " << accepted_ << '\n';
  return out.str();
}

double objective_omega(const DecisionLog& log, bool feasible) {
  return feasible ? static_cast<double>(log.rejected_count()) : kInfeasible;
}

bool log_feasible(const DecisionLog& log, const Instance& instance, bool require_closed, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const double eps = 1e-7;
  struct Track {
    VertexId at = kDepot;
    double free = 1.0;
    double load = 0.0;
    bool left = false;
    bool closed = false;
  };
  std::vector<Track> tracks(static_cast<std::size_t>(instance.vehicle_count));
  std::vector<std::pair<Request, int>> served;
  std::vector<Request> accepted;
  std::vector<Request> decided;
  for (const auto& rec : log.records()) {
    for (const auto& a : rec.accepted) {
      accepted.push_back(a.request);
      decided.push_back(a.request);
    }
    for (const auto& r : rec.rejected) decided.push_back(r);
    for (const auto& d : rec.departures) {
      if (d.vehicle < 0 || d.vehicle >= instance.vehicle_count) return fail("departure of unknown vehicle");
      Track& tr = tracks[d.vehicle];
      if (tr.closed) return fail("vehicle departs after closing its route");
      if (d.departure + eps < tr.free) return fail("departure before vehicle is free");
      if (d.departure + eps < 1.0) return fail("departure before epoch 1");
      if (std::abs(d.arrival - d.departure - instance.travel_time(tr.at, d.to)) > eps)
        return fail("arrival inconsistent with travel time");
      tr.at = d.to;
      tr.left = true;
      if (d.closes_route) {
        if (d.to != kDepot || d.arrival > instance.depot_deadline() + eps) return fail("late depot return");
        tr.closed = true;
        continue;
      }
      if (d.request) {
        const TimeWindow w = instance.window[d.to];
        if (d.start + eps < std::max(d.arrival, static_cast<double>(w.earliest)) || d.start > w.latest + eps)
          return fail("service outside time window at vertex " + std::to_string(d.to));
        if (d.start + eps < d.request->reveal_epoch) return fail("service before reveal");
        tr.load += instance.demand[d.to];
        if (tr.load > instance.capacity + eps) return fail("capacity exceeded");
        tr.free = d.start + instance.service[d.to];
        served.push_back({*d.request, d.vehicle});
      } else {
        tr.free = d.arrival;
      }
    }
  }
  std::sort(decided.begin(), decided.end());
  if (std::adjacent_find(decided.begin(), decided.end()) != decided.end()) return fail("request decided twice");
  std::vector<Request> served_requests;
  for (const auto& [r, k] : served) served_requests.push_back(r);
  std::sort(served_requests.begin(), served_requests.end());
  if (std::adjacent_find(served_requests.begin(), served_requests.end()) != served_requests.end())
    return fail("request served twice");
  std::sort(accepted.begin(), accepted.end());
  for (const auto& r : served_requests)
    if (!std::binary_search(accepted.begin(), accepted.end(), r)) return fail("served request was never accepted");
  if (require_closed) {
    if (served_requests.size() != accepted.size()) return fail("accepted request left unserved");
    for (const auto& tr : tracks)
      if (tr.left && !tr.closed) return fail("vehicle never returned to the depot");
  }
  return true;
}

}  // namespace dsvrp
