#include "dsvrp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dsvrp {

int latest_useful_epoch(const Instance& instance, VertexId v) {
  const double l0 = instance.depot_deadline();
  const double via_depot = l0 - instance.travel_time(v, kDepot) - instance.service[v];
  const double via_window = instance.window[v].latest - instance.travel_time(kDepot, v);
  const double bound = std::floor(std::min(via_depot, via_window));
  return bound < 0.0 ? 0 : static_cast<int>(bound);
}

std::vector<int> latest_useful_epochs(const Instance& instance) {
  std::vector<int> out(static_cast<std::size_t>(instance.vertex_total()), 0);
  for (int v = 1; v <= instance.customer_count; ++v) out[v] = latest_useful_epoch(instance, v);
  return out;
}

namespace {

Scenario sample_with_bounds(const Instance& instance, int from_epoch, const std::vector<int>& bounds, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Scenario s;
  s.start_epoch = from_epoch;
  for (int t = std::max(1, from_epoch); t <= instance.horizon; ++t) {
    for (int v = 1; v <= instance.customer_count; ++v) {
      const double p = instance.probability(t, v);
      if (p <= 0.0 || t > bounds[v]) continue;
      if (unit(rng) < p) s.reveals.push_back({t, v});
    }
  }
  return s;
}

void fill_pool(ScenarioPool& pool, const Instance& instance, int from_epoch, Rng& rng) {
  const auto bounds = latest_useful_epochs(instance);
  pool.scenarios.clear();
  pool.scenarios.reserve(static_cast<std::size_t>(pool.pool_size));
  for (int k = 0; k < pool.pool_size; ++k) pool.scenarios.push_back(sample_with_bounds(instance, from_epoch, bounds, rng));
  pool.start_epoch = from_epoch;
  pool.iterations_since_resample = 0;
}

}  // namespace

Scenario sample_scenario(const Instance& instance, int from_epoch, Rng& rng) {
  if (from_epoch < 1 || from_epoch > instance.horizon) throw std::invalid_argument("from_epoch outside [1,H]");
  return sample_with_bounds(instance, from_epoch, latest_useful_epochs(instance), rng);
}

ScenarioPool init_pool(const Instance& instance, int pool_size, int resample_period, int from_epoch,
                       std::uint64_t seed) {
  if (pool_size < 1) throw std::invalid_argument("pool size must be positive");
  ScenarioPool pool;
  pool.pool_size = pool_size;
  pool.resample_period = resample_period;
  pool.seed = seed;
  Rng rng = derive_rng(seed, RngStream::kPoolInit);
  fill_pool(pool, instance, from_epoch, rng);
  return pool;
}

void update_pool(ScenarioPool& pool, std::span<const Request> realized, int epoch, const Instance& instance) {
  if (pool.start_epoch != epoch) throw std::logic_error("update_pool: pool does not start at the given epoch");
  const auto bounds = latest_useful_epochs(instance);
  std::vector<int> realized_count(static_cast<std::size_t>(instance.vertex_total()), 0);
  for (const auto& r : realized) ++realized_count[r.vertex];

  Rng rng = derive_rng(pool.seed, RngStream::kPoolUpdate, static_cast<std::uint64_t>(epoch));
  for (auto& s : pool.scenarios) {
    std::vector<int> matched = realized_count;
    std::vector<SampledReveal> kept;
    kept.reserve(s.reveals.size());
    bool moved = false;
    for (const auto& r : s.reveals) {
      if (r.epoch != epoch) {
        kept.push_back(r);
        continue;
      }
      if (matched[r.vertex] > 0) {
        --matched[r.vertex];
        continue;
      }
      const int bound = bounds[r.vertex];
      if (epoch >= bound) continue;
      std::uniform_int_distribution<int> delay(epoch + 1, bound);
      kept.push_back({delay(rng), r.vertex});
      moved = true;
    }
    if (moved) std::sort(kept.begin(), kept.end());
    s.reveals = std::move(kept);
    s.start_epoch = epoch + 1;
  }
  pool.start_epoch = epoch + 1;
}

void resample_pool(ScenarioPool& pool, const Instance& instance, int epoch) {
  ++pool.resample_count;
  Rng rng = derive_rng(pool.seed, RngStream::kPoolResample, pool.resample_count);
  fill_pool(pool, instance, std::min(epoch + 1, instance.horizon + 1), rng);
}

std::string dump_pool(const ScenarioPool& pool) {
  std::ostringstream out;
  for (const auto& s : pool.scenarios) {
    bool first = true;
    for (const auto& r : s.reveals) {
      out << (first ? "" : " ") << r.epoch << ':' << r.vertex;
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace dsvrp
