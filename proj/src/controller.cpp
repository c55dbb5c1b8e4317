#include "dsvrp/controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace dsvrp {

const char* rule_tag(DecisionRule r) {
  switch (r) {
    case DecisionRule::kGsa: return "GSA";
    case DecisionRule::kGls: return "GLS";
    case DecisionRule::kExpectation: return "EXP";
  }
  return "?";
}

DecisionRule parse_rule(const std::string& tag) {
  if (tag == "GSA" || tag == "gsa") return DecisionRule::kGsa;
  if (tag == "GLS" || tag == "gls") return DecisionRule::kGls;
  if (tag == "EXP" || tag == "exp" || tag == "expectation") return DecisionRule::kExpectation;
  throw std::invalid_argument("unknown decision rule '" + tag + "'");
}

void ControllerConfig::validate() const {
  if (pool_size < 1) throw std::invalid_argument("pool size must be positive");
  if (resample_period < 1) throw std::invalid_argument("resample period must be positive");
  for (const Budget* b : {&insertion_budget, &offline_budget, &per_epoch_budget}) {
    if (clock == ClockMode::kLogical && b->evaluations < 1)
      throw std::invalid_argument("logical budgets must be positive");
    if (clock == ClockMode::kWallclock && !(b->milliseconds > 0.0))
      throw std::invalid_argument("wallclock budgets must be positive");
  }
  if (!(anneal_temperature > 0.0)) throw std::invalid_argument("annealing temperature must be positive");
  if (!(anneal_cooling > 0.0 && anneal_cooling < 1.0)) throw std::invalid_argument("cooling rate must be in (0,1)");
  if (expectation_max_candidates < 1) throw std::invalid_argument("expectation candidate cap must be positive");
}

namespace {

constexpr double kValueEps = 1e-9;

class Stopwatch {
 public:
  Stopwatch(ClockMode mode, const Budget& budget)
      : mode_(mode), budget_(budget), start_(std::chrono::steady_clock::now()) {}
  bool exhausted(long long used) const {
    if (mode_ == ClockMode::kLogical) return used >= budget_.evaluations;
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    return ms >= budget_.milliseconds;
  }

 private:
  ClockMode mode_;
  Budget budget_;
  std::chrono::steady_clock::time_point start_;
};

bool uses_pool(const ControllerConfig& c) { return c.rule != DecisionRule::kGls; }

double travel_or_inf(const RoutePlan& plan, const Fleet& fleet, const Instance& inst) {
  return plan_feasible(plan, inst, fleet) ? total_travel_cost(plan, inst, fleet) : kInfeasible;
}

double evaluate(const ControllerState& st, const ControllerConfig& cfg, const Instance& inst, const RoutePlan& plan,
                int first_reveal) {
  if (!uses_pool(cfg)) return travel_or_inf(plan, st.fleet, inst);
  return q_bar(plan, st.fleet, st.pool, inst, first_reveal).mean_rejections;
}

int vehicle_of(const RoutePlan& plan, const Request& r) {
  for (std::size_t k = 0; k < plan.routes.size(); ++k)
    for (const auto& v : plan.routes[k])
      if (v.request && *v.request == r) return static_cast<int>(k);
  return -1;
}

RoutePlan with_insertion(const RoutePlan& plan, const Insertion& ins, const Request& r) {
  RoutePlan p = plan;
  auto& route = p.routes[static_cast<std::size_t>(ins.vehicle)];
  route.insert(route.begin() + static_cast<std::ptrdiff_t>(ins.position), Visit::service(r));
  return p;
}

// Local-search moves on the plan until the request fits, within budget.
std::optional<RoutePlan> make_room(ControllerState& st, const Request& r, const Instance& inst, const Stopwatch& clock,
                                   long long& used) {
  const MoveContext ctx{&inst, st.fleet};
  RoutePlan base = st.plan;
  while (!clock.exhausted(used)) {
    ++used;
    RoutePlan cand = shake_solution(base, st.rotor, st.search_rng, ctx).candidate;
    if (!plan_feasible(cand, inst, st.fleet)) continue;
    base = cand;
    if (try_to_serve(r, cand, st.fleet, inst)) return cand;
  }
  return std::nullopt;
}

std::optional<int> handle_expectation(ControllerState& st, const EpochEvent& event, const ControllerConfig& cfg,
                                      const Instance& inst) {
  const std::size_t m = event.revealed.size();
  const std::size_t total = m >= 20 ? std::size_t{1} << 20 : std::size_t{1} << m;
  const std::size_t count = std::min(total, cfg.expectation_max_candidates);
  if (count < total)
    st.warnings.push_back("epoch " + std::to_string(event.epoch) + ": expectation candidates truncated to " +
                          std::to_string(count) + " of " + (m >= 20 ? std::string("2^") + std::to_string(m)
                                                                      : std::to_string(total)));
  // Candidate c rejects request j iff bit j of c is set: accept-all comes first.
  std::vector<std::optional<RoutePlan>> plans(count);
  std::vector<int> rejects(count, 0);
  for (std::size_t c = 0; c < count; ++c) {
    RoutePlan p = st.plan;
    bool ok = true;
    for (std::size_t j = 0; j < m && ok; ++j) {
      if (j < 63 && (c >> j & 1u)) {
        ++rejects[c];
        continue;
      }
      ok = try_to_serve(event.revealed[j], p, st.fleet, inst);
    }
    if (ok) plans[c] = std::move(p);
  }
  const auto& scenarios = st.pool.scenarios;
  const std::size_t chosen = choose_request_expectation(count, scenarios.size(), [&](std::size_t c, std::size_t s) {
    if (!plans[c]) return kInfeasible;
    return rejects[c] + static_cast<double>(simulate_scenario(*plans[c], st.fleet, scenarios[s], inst, event.epoch + 1));
  });
  if (!plans[chosen]) return std::nullopt;
  st.plan = *plans[chosen];
  int rejected = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const Request& r = event.revealed[j];
    if (j < 63 && (chosen >> j & 1u)) {
      st.log.reject(event.epoch, r);
      ++rejected;
    } else {
      st.log.accept(event.epoch, r, vehicle_of(st.plan, r));
    }
  }
  return rejected;
}

}  // namespace

ControllerState make_controller_state(const Instance& instance, const ControllerConfig& config) {
  ControllerState st;
  st.fleet = initial_fleet(instance);
  st.plan = RoutePlan::empty(instance.vehicle_count, 1, config.strategy, config.relocation_enabled);
  if (uses_pool(config))
    st.pool = init_pool(instance, config.pool_size, config.resample_period, 1, config.seed);
  st.search_rng = derive_rng(config.seed, RngStream::kSearch);
  st.anneal.temperature = config.anneal_temperature;
  st.anneal.cooling_rate = config.anneal_cooling;
  st.anneal.rng = derive_rng(config.seed, RngStream::kAnneal);
  return st;
}

int handle_requests(ControllerState& st, const EpochEvent& event, const ControllerConfig& cfg,
                    const Instance& instance) {
  if (event.revealed.empty()) return 0;
  if (cfg.rule == DecisionRule::kExpectation) {
    if (auto r = handle_expectation(st, event, cfg, instance)) return *r;
    st.warnings.push_back("epoch " + std::to_string(event.epoch) +
                          ": no enumerated candidate feasible, requests handled one by one");
  }
  const int first_reveal = event.epoch + 1;
  int rejected = 0;
  for (const Request& r : event.revealed) {
    const Stopwatch clock(cfg.clock, cfg.insertion_budget);
    long long used = 0;
    std::optional<RoutePlan> chosen;
    const auto cands = feasible_insertions(Visit::service(r), st.plan, st.fleet, instance);
    if (!cands.empty()) {
      std::size_t pick = 0;
      if (cfg.rule != DecisionRule::kGls && cands.size() > 1) {
        double best = kInfeasible;
        for (std::size_t i = 0; i < cands.size(); ++i) {
          if (i > 0 && clock.exhausted(used)) break;
          ++used;
          const double v = evaluate(st, cfg, instance, with_insertion(st.plan, cands[i], r), first_reveal);
          if (v < best - kValueEps) {
            best = v;
            pick = i;
          }
        }
      }
      chosen = with_insertion(st.plan, cands[pick], r);
    } else {
      chosen = make_room(st, r, instance, clock, used);
    }
    if (chosen) {
      st.plan = std::move(*chosen);
      st.log.accept(event.epoch, r, vehicle_of(st.plan, r));
    } else {
      st.log.reject(event.epoch, r);
      ++rejected;
    }
  }
  return rejected;
}

namespace {

struct ImproveOutcome {
  long long iterations = 0;
  double incumbent = 0.0;
};

ImproveOutcome improve(ControllerState& st, const ControllerConfig& cfg, const Instance& inst, int epoch,
                       const Budget& budget) {
  ImproveOutcome out;
  const int first_reveal = epoch + 1;
  ++st.segment;
  double inc = evaluate(st, cfg, inst, st.plan, first_reveal);
  double inc_travel = travel_or_inf(st.plan, st.fleet, inst);
  out.incumbent = inc;
  if (st.plan.visit_count() == 0 && !st.plan.relocation_enabled) return out;
  const Stopwatch clock(cfg.clock, budget);
  const MoveContext ctx{&inst, st.fleet};
  while (!clock.exhausted(out.iterations)) {
    if (uses_pool(cfg) && st.pool.iterations_since_resample >= cfg.resample_period) {
      resample_pool(st.pool, inst, epoch);
      ++st.segment;
      inc = evaluate(st, cfg, inst, st.plan, first_reveal);
    }
    ++out.iterations;
    if (uses_pool(cfg)) ++st.pool.iterations_since_resample;
    ShakeResult shaken = shake_solution(st.plan, st.rotor, st.search_rng, ctx);
    ImprovementStep step;
    step.epoch = epoch;
    step.segment = st.segment;
    step.iteration = out.iterations;
    step.op = shaken.applied;
    step.incumbent_before = inc;
    const bool same = shaken.candidate == st.plan;
    const double v = same ? inc : evaluate(st, cfg, inst, shaken.candidate, first_reveal);
    step.candidate = v;
    bool accept = false;
    if (!same) {
      if (uses_pool(cfg)) {
        if (v < inc - kValueEps) {
          accept = true;
        } else if (std::isfinite(v) && std::abs(v - inc) <= kValueEps) {
          // Equal estimate: prefer the shorter plan.
          const double t = travel_or_inf(shaken.candidate, st.fleet, inst);
          accept = t < inc_travel - kValueEps;
        }
      } else {
        accept = anneal_accept(inc, v, st.anneal);
      }
    }
    if (accept) {
      st.plan = std::move(shaken.candidate);
      if (uses_pool(cfg)) {
        inc = std::min(inc, v);
        inc_travel = travel_or_inf(st.plan, st.fleet, inst);
      } else {
        inc = v;
        inc_travel = v;
      }
    }
    step.accepted = accept;
    step.incumbent_after = inc;
    if (cfg.observer) cfg.observer(step);
  }
  out.incumbent = inc;
  return out;
}

void write_event(std::ostream& out, int epoch, const EpochEvent& event, const DecisionLog& log, double incumbent,
                 long long iterations) {
  nlohmann::json j;
  j["epoch"] = epoch;
  nlohmann::json reveals = nlohmann::json::array();
  for (const auto& r : event.revealed) reveals.push_back(r.vertex);
  j["reveals"] = reveals;
  nlohmann::json acc = nlohmann::json::array();
  nlohmann::json rej = nlohmann::json::array();
  if (!log.records().empty() && log.records().back().epoch == epoch) {
    for (const auto& a : log.records().back().accepted) acc.push_back(a.request.vertex);
    for (const auto& r : log.records().back().rejected) rej.push_back(r.vertex);
  }
  j["accepted"] = acc;
  j["rejected"] = rej;
  if (std::isfinite(incumbent)) j["incumbent"] = incumbent;
  else j["incumbent"] = nullptr;
  j["iterations"] = iterations;
  out << j.dump() << '\n';
}

}  // namespace

RunResult run_online(const Instance& instance, const ControllerConfig& config) {
  config.validate();
  instance.validate();
  ControllerState st = make_controller_state(instance, config);
  RunResult res;

  // Offline phase: requests known before the horizon starts.
  EpochEvent offline{0, instance.deterministic_requests()};
  res.revealed += static_cast<int>(offline.revealed.size());
  handle_requests(st, offline, config, instance);
  const bool skip_offline = offline.revealed.empty() && !config.relocation_enabled;
  double incumbent = 0.0;
  if (!skip_offline) {
    const auto o = improve(st, config, instance, 0, config.offline_budget);
    res.offline_iterations = o.iterations;
    incumbent = o.incumbent;
  }
  if (config.event_log) write_event(*config.event_log, 0, offline, st.log, incumbent, res.offline_iterations);

  for (int t = 1; t <= instance.horizon; ++t) {
    EpochEvent event{t, instance.reveals_at(t)};
    res.revealed += static_cast<int>(event.revealed.size());
    handle_requests(st, event, config, instance);
    const auto deps = advance_plan(st.plan, st.fleet, instance, t + 1);
    st.log.record_departures(t, deps);
    if (uses_pool(config)) update_pool(st.pool, event.revealed, t, instance);
    long long iters = 0;
    if (t < instance.horizon) {
      const auto o = improve(st, config, instance, t, config.per_epoch_budget);
      iters = o.iterations;
      incumbent = o.incumbent;
    }
    res.iterations_per_epoch.push_back(iters);
    if (config.event_log) write_event(*config.event_log, t, event, st.log, incumbent, iters);
  }

  res.accepted = st.log.accepted_count();
  res.rejected = st.log.rejected_count();
  std::string why;
  res.feasible = log_feasible(st.log, instance, true, &why);
  if (!res.feasible) res.warnings.push_back("final log infeasible: " + why);
  res.omega = objective_omega(st.log, res.feasible);
  res.warnings.insert(res.warnings.end(), st.warnings.begin(), st.warnings.end());
  res.log = std::move(st.log);
  return res;
}

RunResult run_gls(const Instance& instance, ControllerConfig config) {
  config.rule = DecisionRule::kGls;
  return run_online(instance, config);
}

}  // namespace dsvrp
