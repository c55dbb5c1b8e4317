#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "dsvrp/evaluation.hpp"

namespace dsvrp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_integral(double x) { return std::abs(x - std::round(x)) < 1e-9; }

int as_int(double x) { return static_cast<int>(std::lround(x)); }

struct Vehicle {
  int vertex = 0;
  int ready = 1;
  int load = 0;
  bool finished = false;
};

struct Node {
  std::vector<Vehicle> vehicles;
  std::vector<int> pending;  // sorted multiset
};

struct KeyHash {
  std::size_t operator()(const std::vector<std::int32_t>& k) const {
    std::uint64_t h = 1469598103934665603ull;
    for (auto x : k) {
      h ^= static_cast<std::uint32_t>(x);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

void check_guard(const ExactState& state, std::size_t scenario_count, const Instance& inst,
                 const OracleLimits& limits) {
  if (inst.vertex_total() > limits.max_vertices)
    throw OracleGuardError("exact oracle: " + std::to_string(inst.vertex_total()) + " vertices exceed the limit of " +
                           std::to_string(limits.max_vertices));
  if (inst.horizon - state.epoch + 1 > limits.max_remaining_horizon)
    throw OracleGuardError("exact oracle: remaining horizon exceeds the limit of " +
                           std::to_string(limits.max_remaining_horizon));
  if (static_cast<int>(scenario_count) > limits.max_scenarios || scenario_count > 31)
    throw OracleGuardError("exact oracle: too many scenarios");
  if (static_cast<int>(state.vehicles.size()) > limits.max_vehicles)
    throw OracleGuardError("exact oracle: too many vehicles");
  for (double t : inst.travel)
    if (!is_integral(t)) throw OracleGuardError("exact oracle: travel times must be integral");
  for (std::size_t i = 0; i < inst.demand.size(); ++i)
    if (!is_integral(inst.demand[i])) throw OracleGuardError("exact oracle: demands must be integral");
  if (!is_integral(inst.capacity)) throw OracleGuardError("exact oracle: capacity must be integral");
  for (const auto& v : state.vehicles)
    if (!is_integral(v.ready) || !is_integral(v.load))
      throw OracleGuardError("exact oracle: vehicle state must be integral");
}

Node to_node(const ExactState& state) {
  Node n;
  for (const auto& v : state.vehicles) n.vehicles.push_back({v.vertex, as_int(v.ready), as_int(v.load), v.finished});
  n.pending = state.pending;
  std::sort(n.pending.begin(), n.pending.end());
  return n;
}

class Solver {
 public:
  Solver(const Instance& inst, std::span<const WeightedScenario> scenarios) : inst_(inst) {
    const int H = inst.horizon;
    reveals_.resize(scenarios.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      if (!(scenarios[i].probability > 0.0)) throw std::invalid_argument("exact oracle: scenario probability must be > 0");
      prob_.push_back(scenarios[i].probability);
      reveals_[i].assign(static_cast<std::size_t>(H + 2), {});
      for (const auto& r : scenarios[i].scenario.reveals)
        if (r.epoch >= 1 && r.epoch <= H) reveals_[i][static_cast<std::size_t>(r.epoch)].push_back(r.vertex);
      for (auto& list : reveals_[i]) std::sort(list.begin(), list.end());
    }
    deadline_ = inst.depot_deadline();
  }

  double mass(std::uint32_t group) const {
    double m = 0.0;
    for (std::size_t i = 0; i < prob_.size(); ++i)
      if (group >> i & 1u) m += prob_[i];
    return m;
  }

  // Probability-weighted optimal future rejections of `group` from `node` at epoch s.
  double value(const Node& node, int s, std::uint32_t group) {
    if (s > inst_.horizon) return terminal_ok(node) ? 0.0 : kInf;
    for (int v : node.pending)
      if (inst_.window[static_cast<std::size_t>(v)].latest < s) return kInf;
    for (const auto& v : node.vehicles) {
      if (v.finished || v.vertex == kDepot) continue;
      if (std::max(v.ready, s) + as_int(inst_.travel_time(v.vertex, kDepot)) > deadline_) return kInf;
    }
    if (node.pending.empty() && !has_reveals_from(group, s)) return 0.0;

    std::vector<std::int32_t> key;
    key.reserve(2 + node.vehicles.size() * 4 + node.pending.size());
    key.push_back(s);
    key.push_back(static_cast<std::int32_t>(group));
    for (const auto& v : node.vehicles) {
      key.push_back(v.vertex);
      key.push_back(std::max(v.ready, s));
      key.push_back(v.load);
      key.push_back(v.finished ? 1 : 0);
    }
    key.insert(key.end(), node.pending.begin(), node.pending.end());
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    // Scenarios that reveal the same set at s share this epoch's decision.
    std::map<std::vector<int>, std::uint32_t> parts;
    for (std::size_t i = 0; i < prob_.size(); ++i)
      if (group >> i & 1u) parts[reveals_[i][static_cast<std::size_t>(s)]] |= 1u << i;

    double total = 0.0;
    for (const auto& [revealed, sub] : parts) {
      const double m = mass(sub);
      const std::size_t r = revealed.size();
      double best = kInf;
      for (std::uint32_t acc = 0; acc < (1u << r); ++acc) {
        Node next = node;
        for (std::size_t j = 0; j < r; ++j)
          if (acc >> j & 1u) next.pending.push_back(revealed[j]);
        std::sort(next.pending.begin(), next.pending.end());
        const int rejected = static_cast<int>(r) - std::popcount(acc);
        const double c = rejected * m + moves(next, s, sub, 0);
        best = std::min(best, c);
      }
      total += best;
      if (total == kInf) break;
    }
    memo_.emplace(std::move(key), total);
    return total;
  }

 private:
  bool terminal_ok(const Node& node) const {
    if (!node.pending.empty()) return false;
    for (const auto& v : node.vehicles)
      if (!v.finished && v.vertex != kDepot) return false;
    return true;
  }

  bool has_reveals_from(std::uint32_t group, int s) const {
    for (std::size_t i = 0; i < prob_.size(); ++i) {
      if (!(group >> i & 1u)) continue;
      for (int t = s; t <= inst_.horizon; ++t)
        if (!reveals_[i][static_cast<std::size_t>(t)].empty()) return true;
    }
    return false;
  }

  // Joint moves of free vehicles at epoch s, one vehicle at a time.
  double moves(Node& node, int s, std::uint32_t group, std::size_t k) {
    if (k == node.vehicles.size()) return value(node, s + 1, group);
    const Vehicle cur = node.vehicles[k];
    if (cur.finished || cur.ready > s) return moves(node, s, group, k + 1);
    double best = kInf;

    node.vehicles[k].ready = s + 1;
    best = std::min(best, moves(node, s, group, k + 1));
    node.vehicles[k] = cur;

    for (int u = 0; u < inst_.vertex_total(); ++u) {
      if (u == cur.vertex) continue;
      const int arrival = s + as_int(inst_.travel_time(cur.vertex, u));
      if (u == kDepot ? arrival > deadline_ : arrival + as_int(inst_.travel_time(u, kDepot)) > deadline_) continue;
      node.vehicles[k].vertex = u;
      node.vehicles[k].ready = arrival;
      node.vehicles[k].finished = u == kDepot;
      best = std::min(best, moves(node, s, group, k + 1));
      node.vehicles[k] = cur;
    }

    if (cur.vertex != kDepot) {
      auto it = std::lower_bound(node.pending.begin(), node.pending.end(), cur.vertex);
      const auto& w = inst_.window[static_cast<std::size_t>(cur.vertex)];
      const int q = as_int(inst_.demand[static_cast<std::size_t>(cur.vertex)]);
      if (it != node.pending.end() && *it == cur.vertex && w.earliest <= s && s <= w.latest &&
          cur.load + q <= as_int(inst_.capacity)) {
        const auto saved = node.pending;
        node.pending.erase(it);
        const int d = inst_.service[static_cast<std::size_t>(cur.vertex)];
        node.vehicles[k].load = cur.load + q;
        node.vehicles[k].ready = s + d;
        best = std::min(best, moves(node, s, group, d == 0 ? k : k + 1));
        node.vehicles[k] = cur;
        node.pending = saved;
      }
    }
    return best;
  }

  const Instance& inst_;
  std::vector<double> prob_;
  std::vector<std::vector<std::vector<int>>> reveals_;
  int deadline_ = 0;
  std::unordered_map<std::vector<std::int32_t>, double, KeyHash> memo_;
};

double solve(const ExactState& state, std::span<const WeightedScenario> scenarios, const Instance& instance) {
  Solver solver(instance, scenarios);
  const std::uint32_t all = scenarios.size() >= 32 ? ~0u : (1u << scenarios.size()) - 1u;
  const double total = solver.mass(all);
  if (!(total > 0.0)) throw std::invalid_argument("exact oracle: empty scenario set");
  const double v = solver.value(to_node(state), state.epoch, all);
  return state.rejected + v / total;
}

}  // namespace

ExactState apply_epoch_action(const ExactState& state, const EpochAction& action, std::span<const VertexId> reveals,
                              const Instance& inst) {
  if (action.accept.size() != reveals.size()) throw std::invalid_argument("accept flags do not match reveals");
  if (action.moves.size() > state.vehicles.size()) throw std::invalid_argument("moves for unknown vehicles");
  ExactState next = state;
  for (std::size_t j = 0; j < reveals.size(); ++j) {
    if (action.accept[j]) next.pending.push_back(reveals[j]);
    else ++next.rejected;
  }
  const int s = state.epoch;
  const double deadline = inst.depot_deadline();
  for (std::size_t k = 0; k < action.moves.size(); ++k) {
    VehicleState& v = next.vehicles[k];
    for (const auto& m : action.moves[k]) {
      if (v.finished || v.ready > s + kTimeEps) throw std::invalid_argument("vehicle is not free");
      switch (m.kind) {
        case MoveKind::kWait:
          v.ready = s + 1;
          break;
        case MoveKind::kTravel: {
          if (m.target == v.vertex || m.target < 0 || m.target >= inst.vertex_total())
            throw std::invalid_argument("bad travel target");
          const double arrival = s + inst.travel_time(v.vertex, m.target);
          if (arrival > deadline + kTimeEps) throw std::invalid_argument("travel beyond the deadline");
          v.vertex = m.target;
          v.ready = arrival;
          v.finished = m.target == kDepot;
          break;
        }
        case MoveKind::kServe: {
          auto it = std::find(next.pending.begin(), next.pending.end(), m.target);
          const auto& w = inst.window[static_cast<std::size_t>(m.target)];
          if (m.target != v.vertex || it == next.pending.end() || s < w.earliest || s > w.latest ||
              v.load + inst.demand[static_cast<std::size_t>(m.target)] > inst.capacity + kTimeEps)
            throw std::invalid_argument("illegal service");
          next.pending.erase(it);
          v.load += inst.demand[static_cast<std::size_t>(m.target)];
          v.ready = s + inst.service[static_cast<std::size_t>(m.target)];
          break;
        }
      }
    }
  }
  next.epoch = s + 1;
  return next;
}

double exact_q(const ExactState& state, std::span<const WeightedScenario> scenarios, const Instance& instance,
               const OracleLimits& limits) {
  check_guard(state, scenarios.size(), instance, limits);
  return solve(state, scenarios, instance);
}

double exact_q(const ExactState& state, const EpochAction& candidate, std::span<const VertexId> reveals,
               std::span<const WeightedScenario> scenarios, const Instance& instance, const OracleLimits& limits) {
  check_guard(state, scenarios.size(), instance, limits);
  return exact_q(apply_epoch_action(state, candidate, reveals, instance), scenarios, instance, limits);
}

double two_stage_value(const ExactState& state, std::span<const WeightedScenario> scenarios,
                       const Instance& instance, const OracleLimits& limits) {
  check_guard(state, scenarios.size(), instance, limits);
  double total = 0.0;
  double weighted = 0.0;
  for (const auto& s : scenarios) {
    WeightedScenario single{s.scenario, 1.0};
    weighted += s.probability * solve(state, std::span<const WeightedScenario>(&single, 1), instance);
    total += s.probability;
  }
  if (!(total > 0.0)) throw std::invalid_argument("exact oracle: empty scenario set");
  return weighted / total;
}

double two_stage_value(const ExactState& state, const EpochAction& candidate, std::span<const VertexId> reveals,
                       std::span<const WeightedScenario> scenarios, const Instance& instance,
                       const OracleLimits& limits) {
  check_guard(state, scenarios.size(), instance, limits);
  return two_stage_value(apply_epoch_action(state, candidate, reveals, instance), scenarios, instance, limits);
}

namespace fig1 {

ExactState initial_state(const Instance& fixture) {
  ExactState s;
  s.epoch = kDecisionEpoch;
  VehicleState v;
  v.vertex = kA;
  v.ready = kDecisionEpoch;
  s.vehicles.assign(static_cast<std::size_t>(fixture.vehicle_count), v);
  return s;
}

std::vector<WeightedScenario> scenarios() {
  std::vector<WeightedScenario> out(2);
  for (auto& w : out) {
    w.scenario.start_epoch = kDecisionEpoch + 1;
    w.probability = 0.5;
  }
  for (VertexId v : {kD, kE, kF}) out[0].scenario.reveals.push_back({kRevealEpoch, v});
  for (VertexId v : {kG, kH, kI}) out[1].scenario.reveals.push_back({kRevealEpoch, v});
  return out;
}

EpochAction travel_to(VertexId v) {
  EpochAction a;
  a.moves = {{VehicleMove{MoveKind::kTravel, v}}};
  return a;
}

}  // namespace fig1

}  // namespace dsvrp
