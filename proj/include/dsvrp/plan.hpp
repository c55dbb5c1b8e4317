#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsvrp/instance.hpp"

namespace dsvrp {

enum class WaitingStrategy { kDriveFirst, kWaitFirst, kCustomWait, kRelocationOnly };

const char* strategy_tag(WaitingStrategy s);
WaitingStrategy parse_strategy(const std::string& tag);

enum class VisitKind { kService, kRelocation };

struct Visit {
  VertexId vertex = kDepot;
  VisitKind kind = VisitKind::kService;
  std::optional<Request> request;  // set iff kind == kService
  int custom_wait = 0;             // epochs spent after service, custom-wait only

  static Visit service(const Request& r) { return {r.vertex, VisitKind::kService, r, 0}; }
  static Visit relocation(VertexId v) { return {v, VisitKind::kRelocation, std::nullopt, 0}; }
  bool is_service() const { return kind == VisitKind::kService; }
  friend bool operator==(const Visit&, const Visit&) = default;
};

// Where a vehicle is committed to be and when it may leave. A vehicle that
// has departed towards a vertex is represented as already being there,
// since arcs are never abandoned mid-way.
struct VehicleState {
  VertexId vertex = kDepot;
  double ready = 1.0;
  double load = 0.0;
  bool holding = false;   // parked on a relocation visit
  bool finished = false;  // back at the depot, route closed
  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

using Fleet = std::vector<VehicleState>;

Fleet initial_fleet(const Instance& instance);

// Pending (not yet departed-towards) visits per vehicle. Everything already
// committed lives in the Fleet and the DecisionLog.
struct RoutePlan {
  std::vector<std::vector<Visit>> routes;
  int start_epoch = 1;  // earliest epoch at which any pending departure may happen
  WaitingStrategy strategy = WaitingStrategy::kDriveFirst;
  bool relocation_enabled = false;

  static RoutePlan empty(int vehicles, int start_epoch, WaitingStrategy strategy, bool relocation);
  std::size_t visit_count() const;
  std::size_t service_count() const;
  friend bool operator==(const RoutePlan&, const RoutePlan&) = default;
};

struct VisitTimes {
  double arrival = 0.0;
  double start = 0.0;
  double departure = 0.0;
};

struct VehicleSchedule {
  double first_departure = 0.0;  // leaving the vehicle's current vertex
  std::vector<VisitTimes> visits;
  double depot_departure = 0.0;  // latest departure of the closing depot leg
  double depot_arrival = 0.0;
  bool closes_route = false;      // false when the vehicle never leaves the depot
};

struct Schedule {
  std::vector<VehicleSchedule> vehicles;
};

inline constexpr double kTimeEps = 1e-9;

// Schedules every route from its vehicle state under the plan's waiting
// strategy. Returns nullopt when a window, capacity or horizon bound fails.
std::optional<Schedule> compute_schedule(const RoutePlan& plan, const Instance& instance,
                                         std::span<const VehicleState> fleet);

bool route_feasible(std::span<const Visit> route, const VehicleState& state, double now,
                    WaitingStrategy strategy, const Instance& instance);

// Same as route_feasible on `route` with `inserted` placed at `position`,
// without materializing the new route.
bool route_feasible_with(std::span<const Visit> route, std::size_t position, const Visit& inserted,
                         const VehicleState& state, double now, WaitingStrategy strategy,
                         const Instance& instance);

bool plan_feasible(const RoutePlan& plan, const Instance& instance, std::span<const VehicleState> fleet);

// Independent checker for a computed schedule; used by tests.
bool schedule_valid(const RoutePlan& plan, const Schedule& schedule, const Instance& instance,
                    std::span<const VehicleState> fleet);

struct CommittedDeparture {
  int vehicle = 0;
  VertexId to = kDepot;
  double departure = 0.0;
  double arrival = 0.0;
  double start = 0.0;
  VisitKind kind = VisitKind::kService;
  std::optional<Request> request;
  bool closes_route = false;
  friend bool operator==(const CommittedDeparture&, const CommittedDeparture&) = default;
};

// Commits every departure scheduled strictly before `until`: the visit is
// removed from the plan and folded into the vehicle state. Also closes
// routes whose latest depot departure falls before `until`. The plan must be
// feasible.
std::vector<CommittedDeparture> advance_plan(RoutePlan& plan, Fleet& fleet, const Instance& instance, int until);
void advance_plan(RoutePlan& plan, Fleet& fleet, const Instance& instance, int until,
                  std::vector<CommittedDeparture>* committed);

double total_travel_cost(const RoutePlan& plan, const Instance& instance, std::span<const VehicleState> fleet);
double total_travel_cost(const RoutePlan& plan, const Instance& instance);

std::string dump_plan(const RoutePlan& plan);

struct AcceptDecision {
  Request request;
  int vehicle = 0;
  friend bool operator==(const AcceptDecision&, const AcceptDecision&) = default;
};

struct EpochRecord {
  int epoch = 0;
  std::vector<AcceptDecision> accepted;
  std::vector<Request> rejected;
  std::vector<CommittedDeparture> departures;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

// Committed actions a^0..a^t.
class DecisionLog {
 public:
  void accept(int epoch, const Request& r, int vehicle);
  void reject(int epoch, const Request& r);
  void record_departures(int epoch, std::span<const CommittedDeparture> departures);

  const std::vector<EpochRecord>& records() const { return records_; }
  int rejected_count() const { return rejected_; }
  int accepted_count() const { return accepted_; }
  std::string serialize() const;
  friend bool operator==(const DecisionLog&, const DecisionLog&) = default;

 private:
  EpochRecord& at(int epoch);
  std::vector<EpochRecord> records_;
  int rejected_ = 0;
  int accepted_ = 0;
};

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

double objective_omega(const DecisionLog& log, bool feasible);

// Replays the committed departures and checks every VRPTW constraint of the
// accepted requests. With `require_closed`, every vehicle that left the depot
// must be back by the deadline.
bool log_feasible(const DecisionLog& log, const Instance& instance, bool require_closed, std::string* why = nullptr);

}  // namespace dsvrp
