#pragma once

#include <span>
#include <vector>

#include "dsvrp/instance.hpp"
#include "dsvrp/plan.hpp"
#include "dsvrp/rng.hpp"

namespace dsvrp {

enum class MoveOperator {
  kRelocateVisit,
  kSwap,
  kInverted2Opt,
  kCrossExchange,
  kWaitIncrease,
  kWaitDecrease,
  kRelocationInsert,
  kRelocationRemove,
};

const char* operator_name(MoveOperator op);

bool operator_applicable(MoveOperator op, const RoutePlan& plan);

// Rotation list: relocate, swap, inverted 2-opt, cross-exchange; then
// wait increase/decrease under custom-wait; then relocation insert/remove
// when relocation is enabled.
std::vector<MoveOperator> applicable_operators(const RoutePlan& plan);

// What a move may look at besides the plan. `fleet` may be empty, in which
// case every vehicle is treated as open.
struct MoveContext {
  const Instance* instance = nullptr;
  std::span<const VehicleState> fleet;
};

// Random neighbour of `plan`. The result may be schedule-infeasible. Throws
// std::logic_error for an operator not applicable to the plan. Returns the
// plan unchanged when there is nothing to move.
RoutePlan apply_move(const RoutePlan& plan, MoveOperator op, Rng& rng, const MoveContext& ctx);

// Vertices a relocation visit may target: future reveal mass > 0 and no
// pending service in the plan.
std::vector<VertexId> relocation_candidates(const RoutePlan& plan, const Instance& instance);

struct ShakeRotor {
  std::size_t next = 0;
};

struct ShakeResult {
  RoutePlan candidate;
  MoveOperator applied = MoveOperator::kRelocateVisit;
};

ShakeResult shake_solution(const RoutePlan& plan, ShakeRotor& rotor, Rng& rng, const MoveContext& ctx);

struct AnnealingState {
  double temperature = 10.0;
  double cooling_rate = 0.999;
  Rng rng;
};

// Metropolis acceptance; cools the temperature on every call.
bool anneal_accept(double current_cost, double candidate_cost, AnnealingState& state);

}  // namespace dsvrp
