#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsvrp/bench.hpp"
#include "dsvrp/controller.hpp"
#include "dsvrp/instance.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kRunFailure = 2;

struct RunFlags {
  std::string instance;
  std::string algorithm = "GSA-df";
  std::uint64_t seed = 1;
  std::string clock = "logical";
  int pool = 30;
  int beta = 30;
  long long epoch_evals = 200;
  long long insertion_evals = 20;
  long long offline_evals = 2000;
  double epoch_ms = 4000.0;
  double insertion_ms = 200.0;
  double offline_ms = 60000.0;
  std::string events;
  std::string log_out;
};

dsvrp::ControllerConfig to_config(const RunFlags& f) {
  dsvrp::ControllerConfig c;
  c.pool_size = f.pool;
  c.resample_period = f.beta;
  c.per_epoch_budget = {f.epoch_evals, f.epoch_ms};
  c.insertion_budget = {f.insertion_evals, f.insertion_ms};
  c.offline_budget = {f.offline_evals, f.offline_ms};
  c.clock = f.clock == "wallclock" ? dsvrp::ClockMode::kWallclock : dsvrp::ClockMode::kLogical;
  c.seed = f.seed;
  return dsvrp::algorithm_config(f.algorithm, c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic and stochastic VRPTW experiments"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Generate a dynamic instance");
  std::string base_file, out_file;
  int synthetic = 0, class_id = 6, horizon = 480;
  std::uint64_t base_seed = 1, gen_seed = 1;
  gen->add_option("--base", base_file, "Static Solomon-format instance");
  gen->add_option("--synthetic", synthetic, "Use a synthetic base with this many customers");
  gen->add_option("--base-seed", base_seed, "Seed of the synthetic base");
  gen->add_option("--class", class_id, "Benchmark class (1-6)");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--horizon", horizon, "Horizon length H");
  gen->add_option("--out", out_file, "Output file")->required();

  auto* run = app.add_subcommand("run", "Run one online simulation");
  RunFlags rf;
  run->add_option("--instance", rf.instance, "Dynamic instance file")->required();
  run->add_option("--algorithm", rf.algorithm, "GSA-df, GSA-dfr, GSA-ro, GSA-wf, GSA-cw, GLS-df or EXP-df");
  run->add_option("--seed", rf.seed);
  run->add_option("--clock", rf.clock, "logical or wallclock")->check(CLI::IsMember({"logical", "wallclock"}));
  run->add_option("--pool", rf.pool, "Pool size (alpha)");
  run->add_option("--beta", rf.beta, "Resample period (beta)");
  run->add_option("--epoch-evals", rf.epoch_evals, "Evaluations per epoch (logical clock)");
  run->add_option("--insertion-evals", rf.insertion_evals, "Evaluations per request insertion (logical clock)");
  run->add_option("--offline-evals", rf.offline_evals, "Offline evaluations (logical clock)");
  run->add_option("--epoch-ms", rf.epoch_ms, "Milliseconds per epoch (wallclock)");
  run->add_option("--insertion-ms", rf.insertion_ms, "Milliseconds per insertion (wallclock)");
  run->add_option("--offline-ms", rf.offline_ms, "Offline milliseconds (wallclock)");
  run->add_option("--events", rf.events, "Write the JSON-lines event log here");
  run->add_option("--log", rf.log_out, "Write the decision log here");

  auto* camp = app.add_subcommand("campaign", "Run a campaign manifest");
  std::string manifest;
  int jobs = 1;
  camp->add_option("--manifest", manifest, "JSON manifest")->required();
  camp->add_option("--jobs", jobs, "Concurrent runs");

  auto* prof = app.add_subcommand("profile", "Performance profile from a reports file");
  std::string reports, profile_out, table_out;
  prof->add_option("--reports", reports, "reports.csv")->required();
  prof->add_option("--out", profile_out, "Profile CSV")->required();
  prof->add_option("--table", table_out, "Also write the aggregate table");

  auto* fig = app.add_subcommand("fig1", "Nonanticipation example");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen) {
      if (base_file.empty() == (synthetic == 0)) {
        std::cerr << "generate: give exactly one of --base or --synthetic\n";
        return kUsageError;
      }
      const dsvrp::Instance base = base_file.empty() ? dsvrp::make_synthetic_base(synthetic, base_seed)
                                                     : dsvrp::parse_static_instance_file(base_file);
      dsvrp::GeneratorOptions g;
      g.horizon = horizon;
      const auto inst = dsvrp::generate_dynamic_instance(base, dsvrp::class_profile(class_id), gen_seed, g);
      dsvrp::write_dynamic_instance_file(out_file, inst);
      std::cout << out_file << ": " << inst.requests.size() << " requests, dod " << dsvrp::realized_dod(inst) << '\n';
      return 0;
    }
    if (*run) {
      dsvrp::ControllerConfig cfg;
      try {
        cfg = to_config(rf);
      } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kUsageError;
      }
      const auto inst = dsvrp::read_dynamic_instance_file(rf.instance);
      std::ofstream events;
      if (!rf.events.empty()) {
        events.open(rf.events);
        cfg.event_log = &events;
      }
      const auto res = dsvrp::run_online(inst, cfg);
      if (!rf.log_out.empty()) {
        std::ofstream out(rf.log_out);
        out << res.log.serialize();
      }
      nlohmann::json j;
      j["instance"] = inst.name;
      j["algorithm"] = rf.algorithm;
      j["seed"] = rf.seed;
      j["revealed"] = res.revealed;
      j["accepted"] = res.accepted;
      j["rejected"] = res.rejected;
      j["feasible"] = res.feasible;
      j["warnings"] = res.warnings;
      std::cout << j.dump() << '\n';
      return res.feasible ? 0 : kRunFailure;
    }
    if (*camp) {
      std::cout << dsvrp::run_campaign(manifest, jobs) << '\n';
      return 0;
    }
    if (*prof) {
      const auto reps = dsvrp::read_reports_csv(reports);
      const auto table = dsvrp::aggregate(reps);
      const auto curves = dsvrp::performance_profile(table);
      dsvrp::write_profile_csv(profile_out, curves);
      if (!table_out.empty()) dsvrp::write_table_csv(table_out, table);
      return 0;
    }
    if (*fig) {
      std::cout << dsvrp::describe(dsvrp::fig1_demo());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  return kUsageError;
}
