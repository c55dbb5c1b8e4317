// Times q_bar (OpenMP over scenarios) against q_bar_serial on a desk-scale plan.
#include <chrono>
#include <cstdio>

#include <CLI11.hpp>
#include <omp.h>

#include "dsvrp/bench.hpp"
#include "dsvrp/evaluation.hpp"
#include "dsvrp/scenario.hpp"

using namespace dsvrp;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int customers = 100;
  int pool_size = 150;
  CLI::App app{"Time q_bar against q_bar_serial"};
  app.add_option("--customers", customers, "Customers in the generated instance")->check(CLI::Range(1, 100000));
  app.add_option("--pool", pool_size, "Scenarios in the pool")->check(CLI::Range(1, 100000));
  CLI11_PARSE(app, argc, argv);
  DeskOptions opt = default_desk_options();
  opt.customers = customers;
  opt.horizon = 480;
  opt.base.vehicles = std::max(2, customers / 5);
  const Instance inst = make_desk_instance(4, 7, 11, opt);

  // Plan: the deterministic requests inserted greedily.
  RoutePlan plan = RoutePlan::empty(inst.vehicle_count, 1, WaitingStrategy::kDriveFirst, false);
  const Fleet fleet = initial_fleet(inst);
  int placed = 0;
  for (const auto& r : inst.deterministic_requests()) placed += try_to_serve(r, plan, fleet, inst) ? 1 : 0;
  const ScenarioPool pool = init_pool(inst, pool_size, pool_size, 1, 3);

  EvalResult par, ser;
  const double t_par = best_of(5, [&] { par = q_bar(plan, fleet, pool, inst); });
  const double t_ser = best_of(5, [&] { ser = q_bar_serial(plan, fleet, pool.scenarios, inst); });
  std::printf("customers %d, pool %d, planned visits %d, threads %d\n", customers, pool_size, placed,
              omp_get_max_threads());
  std::printf("q_bar        %.3f ms  mean %.4f\n", t_par, par.mean_rejections);
  std::printf("q_bar_serial %.3f ms  mean %.4f\n", t_ser, ser.mean_rejections);
  std::printf("speedup %.2fx, identical %s\n", t_ser / t_par, par == ser ? "yes" : "NO");
  return par == ser ? 0 : 1;
}
