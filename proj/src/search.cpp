#include "dsvrp/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace dsvrp {

const char* operator_name(MoveOperator op) {
  switch (op) {
    case MoveOperator::kRelocateVisit: return "relocate";
    case MoveOperator::kSwap: return "swap";
    case MoveOperator::kInverted2Opt: return "inverted2opt";
    case MoveOperator::kCrossExchange: return "crossExchange";
    case MoveOperator::kWaitIncrease: return "waitIncrease";
    case MoveOperator::kWaitDecrease: return "waitDecrease";
    case MoveOperator::kRelocationInsert: return "relocationInsert";
    case MoveOperator::kRelocationRemove: return "relocationRemove";
  }
  return "?";
}

bool operator_applicable(MoveOperator op, const RoutePlan& plan) {
  switch (op) {
    case MoveOperator::kWaitIncrease:
    case MoveOperator::kWaitDecrease:
      return plan.strategy == WaitingStrategy::kCustomWait;
    case MoveOperator::kRelocationInsert:
    case MoveOperator::kRelocationRemove:
      return plan.relocation_enabled;
    default:
      return true;
  }
}

std::vector<MoveOperator> applicable_operators(const RoutePlan& plan) {
  std::vector<MoveOperator> ops{MoveOperator::kRelocateVisit, MoveOperator::kSwap, MoveOperator::kInverted2Opt,
                                MoveOperator::kCrossExchange};
  if (plan.strategy == WaitingStrategy::kCustomWait) {
    ops.push_back(MoveOperator::kWaitIncrease);
    ops.push_back(MoveOperator::kWaitDecrease);
  }
  if (plan.relocation_enabled) {
    ops.push_back(MoveOperator::kRelocationInsert);
    ops.push_back(MoveOperator::kRelocationRemove);
  }
  return ops;
}

std::vector<VertexId> relocation_candidates(const RoutePlan& plan, const Instance& instance) {
  std::vector<bool> busy(static_cast<std::size_t>(instance.vertex_total()), false);
  for (const auto& r : plan.routes)
    for (const auto& v : r)
      if (v.is_service()) busy[static_cast<std::size_t>(v.vertex)] = true;
  std::vector<VertexId> out;
  for (VertexId v = 1; v <= instance.customer_count; ++v)
    if (!busy[static_cast<std::size_t>(v)] && instance.remaining_mass(v, plan.start_epoch) > 0.0) out.push_back(v);
  return out;
}

namespace {

using Slot = std::pair<std::size_t, std::size_t>;  // (vehicle, index)

std::size_t uniform(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool vehicle_open(const MoveContext& ctx, std::size_t k) {
  return ctx.fleet.empty() || !ctx.fleet[k].finished;
}

std::vector<Slot> visit_slots(const RoutePlan& plan, bool (*keep)(const Visit&) = nullptr) {
  std::vector<Slot> out;
  for (std::size_t k = 0; k < plan.routes.size(); ++k)
    for (std::size_t i = 0; i < plan.routes[k].size(); ++i)
      if (!keep || keep(plan.routes[k][i])) out.emplace_back(k, i);
  return out;
}

// Every (vehicle, position) where a visit could be inserted.
std::vector<Slot> insertion_slots(const RoutePlan& plan, const MoveContext& ctx) {
  std::vector<Slot> out;
  for (std::size_t k = 0; k < plan.routes.size(); ++k) {
    if (!vehicle_open(ctx, k)) continue;
    for (std::size_t i = 0; i <= plan.routes[k].size(); ++i) out.emplace_back(k, i);
  }
  return out;
}

void relocate_visit(RoutePlan& p, Rng& rng, const MoveContext& ctx) {
  const auto slots = visit_slots(p);
  if (slots.empty()) return;
  const auto [k, i] = slots[uniform(rng, slots.size())];
  const Visit moved = p.routes[k][i];
  p.routes[k].erase(p.routes[k].begin() + static_cast<std::ptrdiff_t>(i));
  const auto targets = insertion_slots(p, ctx);
  if (targets.empty()) {
    p.routes[k].insert(p.routes[k].begin() + static_cast<std::ptrdiff_t>(i), moved);
    return;
  }
  const auto [tk, ti] = targets[uniform(rng, targets.size())];
  p.routes[tk].insert(p.routes[tk].begin() + static_cast<std::ptrdiff_t>(ti), moved);
}

void swap_visits(RoutePlan& p, Rng& rng) {
  const auto slots = visit_slots(p);
  if (slots.size() < 2) return;
  const std::size_t a = uniform(rng, slots.size());
  std::size_t b = uniform(rng, slots.size() - 1);
  if (b >= a) ++b;
  std::swap(p.routes[slots[a].first][slots[a].second], p.routes[slots[b].first][slots[b].second]);
}

void inverted_2opt(RoutePlan& p, Rng& rng) {
  std::vector<std::size_t> routes;
  for (std::size_t k = 0; k < p.routes.size(); ++k)
    if (!p.routes[k].empty()) routes.push_back(k);
  if (routes.empty()) return;
  auto& route = p.routes[routes[uniform(rng, routes.size())]];
  std::size_t i = uniform(rng, route.size());
  std::size_t j = uniform(rng, route.size());
  if (i > j) std::swap(i, j);
  std::reverse(route.begin() + static_cast<std::ptrdiff_t>(i), route.begin() + static_cast<std::ptrdiff_t>(j + 1));
}

void cross_exchange(RoutePlan& p, Rng& rng) {
  std::vector<std::size_t> routes;
  for (std::size_t k = 0; k < p.routes.size(); ++k)
    if (!p.routes[k].empty()) routes.push_back(k);
  if (routes.size() < 2) return;
  const std::size_t a = uniform(rng, routes.size());
  std::size_t b = uniform(rng, routes.size() - 1);
  if (b >= a) ++b;
  auto& ra = p.routes[routes[a]];
  auto& rb = p.routes[routes[b]];
  const std::size_t la = std::min<std::size_t>(1 + uniform(rng, 3), ra.size());
  const std::size_t lb = std::min<std::size_t>(1 + uniform(rng, 3), rb.size());
  const std::size_t sa = uniform(rng, ra.size() - la + 1);
  const std::size_t sb = uniform(rng, rb.size() - lb + 1);
  std::vector<Visit> seg_a(ra.begin() + static_cast<std::ptrdiff_t>(sa),
                           ra.begin() + static_cast<std::ptrdiff_t>(sa + la));
  std::vector<Visit> seg_b(rb.begin() + static_cast<std::ptrdiff_t>(sb),
                           rb.begin() + static_cast<std::ptrdiff_t>(sb + lb));
  ra.erase(ra.begin() + static_cast<std::ptrdiff_t>(sa), ra.begin() + static_cast<std::ptrdiff_t>(sa + la));
  ra.insert(ra.begin() + static_cast<std::ptrdiff_t>(sa), seg_b.begin(), seg_b.end());
  rb.erase(rb.begin() + static_cast<std::ptrdiff_t>(sb), rb.begin() + static_cast<std::ptrdiff_t>(sb + lb));
  rb.insert(rb.begin() + static_cast<std::ptrdiff_t>(sb), seg_a.begin(), seg_a.end());
}

void change_wait(RoutePlan& p, Rng& rng, int delta) {
  const auto slots = delta > 0 ? visit_slots(p) : visit_slots(p, [](const Visit& v) { return v.custom_wait > 0; });
  if (slots.empty()) return;
  const auto [k, i] = slots[uniform(rng, slots.size())];
  p.routes[k][i].custom_wait += delta;
}

void relocation_insert(RoutePlan& p, Rng& rng, const MoveContext& ctx) {
  if (!ctx.instance) throw std::logic_error("relocation insert needs an instance");
  const auto candidates = relocation_candidates(p, *ctx.instance);
  const auto targets = insertion_slots(p, ctx);
  if (candidates.empty() || targets.empty()) return;
  const VertexId v = candidates[uniform(rng, candidates.size())];
  const auto [k, i] = targets[uniform(rng, targets.size())];
  p.routes[k].insert(p.routes[k].begin() + static_cast<std::ptrdiff_t>(i), Visit::relocation(v));
}

void relocation_remove(RoutePlan& p, Rng& rng) {
  const auto slots = visit_slots(p, [](const Visit& v) { return !v.is_service(); });
  if (slots.empty()) return;
  const auto [k, i] = slots[uniform(rng, slots.size())];
  p.routes[k].erase(p.routes[k].begin() + static_cast<std::ptrdiff_t>(i));
}

}  // namespace

RoutePlan apply_move(const RoutePlan& plan, MoveOperator op, Rng& rng, const MoveContext& ctx) {
  if (!operator_applicable(op, plan))
    throw std::logic_error(std::string("operator ") + operator_name(op) + " not applicable to this plan");
  RoutePlan p = plan;
  switch (op) {
    case MoveOperator::kRelocateVisit: relocate_visit(p, rng, ctx); break;
    case MoveOperator::kSwap: swap_visits(p, rng); break;
    case MoveOperator::kInverted2Opt: inverted_2opt(p, rng); break;
    case MoveOperator::kCrossExchange: cross_exchange(p, rng); break;
    case MoveOperator::kWaitIncrease: change_wait(p, rng, +1); break;
    case MoveOperator::kWaitDecrease: change_wait(p, rng, -1); break;
    case MoveOperator::kRelocationInsert: relocation_insert(p, rng, ctx); break;
    case MoveOperator::kRelocationRemove: relocation_remove(p, rng); break;
  }
  return p;
}

ShakeResult shake_solution(const RoutePlan& plan, ShakeRotor& rotor, Rng& rng, const MoveContext& ctx) {
  const auto ops = applicable_operators(plan);
  const MoveOperator op = ops[rotor.next % ops.size()];
  rotor.next = (rotor.next + 1) % ops.size();
  return {apply_move(plan, op, rng, ctx), op};
}

bool anneal_accept(double current_cost, double candidate_cost, AnnealingState& state) {
  if (!(state.temperature > 0.0)) throw std::logic_error("annealing temperature must be positive");
  bool accept = candidate_cost <= current_cost;
  if (!accept && std::isfinite(candidate_cost)) {
    const double p = std::exp((current_cost - candidate_cost) / state.temperature);
    accept = std::uniform_real_distribution<double>(0.0, 1.0)(state.rng) < p;
  }
  state.temperature = std::max(state.temperature * state.cooling_rate, std::numeric_limits<double>::min());
  return accept;
}

}  // namespace dsvrp
