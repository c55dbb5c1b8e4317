#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dsvrp/instance.hpp"
#include "dsvrp/plan.hpp"
#include "dsvrp/scenario.hpp"

namespace dsvrp {

struct EvalResult {
  double mean_rejections = 0.0;  // +inf when the evaluated plan is infeasible
  std::vector<int> per_scenario;

  bool feasible() const { return mean_rejections != kInfeasible; }
  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

struct Insertion {
  int vehicle = 0;
  std::size_t position = 0;
  double added_cost = 0.0;
  friend bool operator==(const Insertion&, const Insertion&) = default;
};

// Added travel time of placing `v` at `position` in vehicle k's pending route.
double insertion_cost(const RoutePlan& plan, std::span<const VehicleState> fleet, const Instance& instance, int vehicle,
                      std::size_t position, VertexId v);

// All feasible positions for `visit`, sorted by (added cost, vehicle, position).
std::vector<Insertion> feasible_insertions(const Visit& visit, const RoutePlan& plan,
                                           std::span<const VehicleState> fleet, const Instance& instance);

// Cheapest feasible position for the request; ties go to the lowest vehicle,
// then the earliest position. The rest of the visit order is left untouched.
std::optional<Insertion> best_insertion(const Request& request, const RoutePlan& plan,
                                        std::span<const VehicleState> fleet, const Instance& instance);

// Inserts the request at best_insertion; false (plan untouched) when none exists.
bool try_to_serve(const Request& request, RoutePlan& plan, std::span<const VehicleState> fleet,
                  const Instance& instance, Insertion* chosen = nullptr);

// One entry of a simulated action sequence.
struct TraceEvent {
  enum Kind { kAccept, kReject, kDepart };
  Kind kind = kAccept;
  int epoch = 0;
  int vehicle = -1;
  VertexId vertex = 0;
  double time = 0.0;
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

// Greedy simulation of one scenario from the plan: reveals at epochs
// >= first_reveal_epoch are offered to try_to_serve in order, departures
// scheduled before each reveal epoch are frozen first. Returns the number of
// rejected reveals. When `trace` is set the whole horizon is executed and
// every accept, reject and departure is recorded.
int simulate_scenario(const RoutePlan& plan, std::span<const VehicleState> fleet, const Scenario& scenario,
                      const Instance& instance, int first_reveal_epoch, std::vector<TraceEvent>* trace = nullptr);

// Q-bar: mean simulated rejections over the pool. `first_reveal_epoch` = 0
// means the plan's start epoch. Scenarios run in parallel; the reduction is
// in pool order, so the result equals q_bar_serial exactly.
EvalResult q_bar(const RoutePlan& plan, std::span<const VehicleState> fleet, const ScenarioPool& pool,
                 const Instance& instance, int first_reveal_epoch = 0);
EvalResult q_bar(const RoutePlan& plan, std::span<const VehicleState> fleet, std::span<const Scenario> scenarios,
                 const Instance& instance, int first_reveal_epoch = 0);

EvalResult q_bar_serial(const RoutePlan& plan, std::span<const VehicleState> fleet,
                        std::span<const Scenario> scenarios, const Instance& instance, int first_reveal_epoch = 0);

// ---- exact oracle -------------------------------------------------------

struct OracleLimits {
  int max_vertices = 10;
  int max_remaining_horizon = 12;
  int max_scenarios = 8;
  int max_vehicles = 3;
};

class OracleGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WeightedScenario {
  Scenario scenario;
  double probability = 0.0;
};

// Information state at the start of `epoch`, before that epoch's reveals.
struct ExactState {
  int epoch = 1;
  Fleet vehicles;
  std::vector<VertexId> pending;  // accepted, not yet served
  int rejected = 0;               // rejections already in the log
};

enum class MoveKind { kWait, kTravel, kServe };

struct VehicleMove {
  MoveKind kind = MoveKind::kWait;
  VertexId target = kDepot;  // travel destination or served vertex
};

// Decisions of one epoch: accept flags for its reveals, then per-vehicle
// moves for the vehicles that are free. A vehicle with zero service time may
// chain several moves in one epoch; they are listed in order.
struct EpochAction {
  std::vector<bool> accept;
  std::vector<std::vector<VehicleMove>> moves;
};

// Applies `action` at state.epoch with `reveals` revealed then; the result
// sits at epoch + 1. Throws std::invalid_argument on an illegal move.
ExactState apply_epoch_action(const ExactState& state, const EpochAction& action, std::span<const VertexId> reveals,
                              const Instance& instance);

// Optimal expected total rejections from `state` over the scenario tree,
// with equal actions on shared reveal prefixes.
double exact_q(const ExactState& state, std::span<const WeightedScenario> scenarios, const Instance& instance,
               const OracleLimits& limits = {});
double exact_q(const ExactState& state, const EpochAction& candidate, std::span<const VertexId> reveals,
               std::span<const WeightedScenario> scenarios, const Instance& instance,
               const OracleLimits& limits = {});

// Probability-weighted mean of per-scenario optima (no shared prefixes).
double two_stage_value(const ExactState& state, std::span<const WeightedScenario> scenarios,
                       const Instance& instance, const OracleLimits& limits = {});
double two_stage_value(const ExactState& state, const EpochAction& candidate, std::span<const VertexId> reveals,
                       std::span<const WeightedScenario> scenarios, const Instance& instance,
                       const OracleLimits& limits = {});

// Fixture helpers for the nonanticipation example.
namespace fig1 {
ExactState initial_state(const Instance& fixture);
std::vector<WeightedScenario> scenarios();
EpochAction travel_to(VertexId v);
}  // namespace fig1

}  // namespace dsvrp
