#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dsvrp/evaluation.hpp"
#include "dsvrp/instance.hpp"
#include "dsvrp/plan.hpp"
#include "dsvrp/scenario.hpp"
#include "dsvrp/search.hpp"

namespace dsvrp {

enum class DecisionRule { kGsa, kGls, kExpectation };
enum class ClockMode { kLogical, kWallclock };

const char* rule_tag(DecisionRule r);
DecisionRule parse_rule(const std::string& tag);

// Logical budgets count evaluator calls; wallclock budgets are milliseconds.
struct Budget {
  long long evaluations = 200;
  double milliseconds = 4000.0;
};

// One hill-climbing or annealing step, reported to the observer. `segment`
// changes whenever the pool is resampled or a new epoch starts.
struct ImprovementStep {
  int epoch = 0;
  long long segment = 0;
  long long iteration = 0;
  MoveOperator op = MoveOperator::kRelocateVisit;
  double incumbent_before = 0.0;
  double candidate = 0.0;
  double incumbent_after = 0.0;
  bool accepted = false;
};

struct ControllerConfig {
  int pool_size = 30;        // alpha
  int resample_period = 30;  // beta
  Budget insertion_budget{20, 200.0};
  Budget offline_budget{2000, 60000.0};
  Budget per_epoch_budget{200, 4000.0};
  WaitingStrategy strategy = WaitingStrategy::kDriveFirst;
  bool relocation_enabled = false;
  DecisionRule rule = DecisionRule::kGsa;
  std::uint64_t seed = 1;
  ClockMode clock = ClockMode::kLogical;
  double anneal_temperature = 10.0;
  double anneal_cooling = 0.999;
  // Candidate accept/reject sets considered by the expectation rule per epoch.
  std::size_t expectation_max_candidates = 16;
  std::ostream* event_log = nullptr;                       // JSON lines, one per epoch
  std::function<void(const ImprovementStep&)> observer;    // optional instrumentation

  // Throws std::invalid_argument on non-positive budgets or pool parameters.
  void validate() const;
};

struct RunResult {
  DecisionLog log;
  int revealed = 0;
  int accepted = 0;
  int rejected = 0;
  bool feasible = true;
  double omega = 0.0;
  std::vector<long long> iterations_per_epoch;  // improvement iterations, epochs 1..H
  long long offline_iterations = 0;
  std::vector<std::string> warnings;
};

struct EpochEvent {
  int epoch = 0;
  std::vector<Request> revealed;  // by arrival index
};

// Mutable state of one online run.
struct ControllerState {
  RoutePlan plan;
  Fleet fleet;
  ScenarioPool pool;
  DecisionLog log;
  Rng search_rng;
  ShakeRotor rotor;
  AnnealingState anneal;
  long long segment = 0;
  std::vector<std::string> warnings;
};

ControllerState make_controller_state(const Instance& instance, const ControllerConfig& config);

// Decides every request of the event in arrival order and updates the plan.
// Accepts are written to the log; returns the number of rejections.
int handle_requests(ControllerState& state, const EpochEvent& event, const ControllerConfig& config,
                    const Instance& instance);

// Dispatches on config.rule.
RunResult run_online(const Instance& instance, const ControllerConfig& config);
RunResult run_gls(const Instance& instance, ControllerConfig config);

// Index of the candidate with the least summed cost over scenarios; the
// lowest index wins ties.
template <class Cost>
std::size_t choose_request_expectation(std::size_t candidates, std::size_t scenarios, Cost&& cost) {
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates; ++c) {
    double f = 0.0;
    for (std::size_t s = 0; s < scenarios; ++s) f += cost(c, s);
    if (c == 0 || f < best_value) {
      best = c;
      best_value = f;
    }
  }
  return best;
}

}  // namespace dsvrp
