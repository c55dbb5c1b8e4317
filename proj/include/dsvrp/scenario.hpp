#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsvrp/instance.hpp"
#include "dsvrp/rng.hpp"

namespace dsvrp {

struct SampledReveal {
  int epoch = 0;
  VertexId vertex = 0;
  friend auto operator<=>(const SampledReveal&, const SampledReveal&) = default;
};

// One realization of future reveals over [start_epoch, H], sorted by (epoch, vertex).
struct Scenario {
  int start_epoch = 1;
  std::vector<SampledReveal> reveals;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct ScenarioPool {
  std::vector<Scenario> scenarios;
  int pool_size = 0;
  int resample_period = 0;
  int iterations_since_resample = 0;
  int start_epoch = 1;
  std::uint64_t seed = 0;
  std::uint64_t resample_count = 0;
};

// Last epoch at which a request for v can still be served from the depot:
// min(l_0 - t_{v,0} - d_v, l_v - t_{0,v}), truncated and floored at 0.
int latest_useful_epoch(const Instance& instance, VertexId v);
std::vector<int> latest_useful_epochs(const Instance& instance);

Scenario sample_scenario(const Instance& instance, int from_epoch, Rng& rng);

// Fresh pool of pool_size scenarios covering [from_epoch, H].
ScenarioPool init_pool(const Instance& instance, int pool_size, int resample_period, int from_epoch,
                       std::uint64_t seed);

// Reconciles every scenario with the reveals observed at `epoch`: sampled
// reveals matched by a realized request are dropped, unmatched ones are
// removed when past their bound or delayed uniformly within it.
void update_pool(ScenarioPool& pool, std::span<const Request> realized, int epoch, const Instance& instance);

// Redraws all scenarios from epoch + 1.
void resample_pool(ScenarioPool& pool, const Instance& instance, int epoch);

// Debug dump, one scenario per line as "epoch:vertex" pairs.
std::string dump_pool(const ScenarioPool& pool);

}  // namespace dsvrp
