#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsvrp/controller.hpp"
#include "dsvrp/instance.hpp"

namespace dsvrp {

struct IterationStats {
  long long min = 0;
  double mean = 0.0;
  long long max = 0;
  friend bool operator==(const IterationStats&, const IterationStats&) = default;
};

struct RunReport {
  std::string instance_id;
  std::string group;  // class label used for the Avg rows
  std::string algorithm_id;
  std::uint64_t seed = 0;
  int rejections = 0;
  int accepted = 0;
  int revealed = 0;
  bool feasible = true;
  IterationStats iterations;
  std::string event_log_path;
  std::string error;  // non-empty when the run failed
  friend bool operator==(const RunReport&, const RunReport&) = default;
};

// Algorithm ids: GSA-df, GSA-dfr, GSA-ro, GSA-wf, GSA-cw, GLS-df, EXP-df.
ControllerConfig algorithm_config(const std::string& algorithm_id, const ControllerConfig& base);
std::vector<std::string> known_algorithms();

RunReport run_single(const Instance& instance, const std::string& instance_id, const std::string& group,
                     const std::string& algorithm_id, std::uint64_t seed, const ControllerConfig& base,
                     const std::string& event_log_path = "");

struct CellValue {
  std::string instance;
  std::string group;
  std::string algorithm;
  double mean = 0.0;
  int runs = 1;
};

struct ResultTable {
  struct Row {
    std::string instance;
    std::string group;
    std::vector<std::optional<double>> cells;  // aligned with algorithms
    std::vector<int> runs;
  };
  struct GroupAverage {
    std::string group;
    std::vector<std::optional<double>> values;
  };
  std::vector<std::string> algorithms;  // sorted
  std::vector<Row> rows;                // sorted by (group, instance)
  std::vector<GroupAverage> group_averages;
  std::vector<std::optional<double>> grand_average;  // mean over all cells
  std::vector<std::string> missing;                  // "instance/algorithm"
};

// Mean rejections per (instance, algorithm) over seeds; failed runs are left
// out and their cells reported as missing when no run succeeded.
ResultTable aggregate(std::span<const RunReport> reports);
ResultTable tabulate(std::span<const CellValue> cells);

// One-decimal view: cells rounded, group averages taken over rounded cells
// and rounded, grand average taken over the rounded group averages.
ResultTable rounded_view(const ResultTable& table);

double round1(double x);

struct ProfilePoint {
  double ratio = 1.0;
  double fraction = 0.0;
  friend bool operator==(const ProfilePoint&, const ProfilePoint&) = default;
};

struct ProfileCurve {
  std::string algorithm;
  std::vector<ProfilePoint> points;  // breakpoints of the step function, first at ratio 1
};

// Ratio of each cell to the instance best (0/0 -> 1, v/0 -> +inf, missing
// -> +inf). Each curve ends at fraction 1, at ratio +inf if needed.
std::vector<ProfileCurve> performance_profile(const ResultTable& table);

struct DeskOptions {
  int customers = 25;
  int horizon = 120;
  SyntheticOptions base{};
};

DeskOptions default_desk_options();

// Synthetic base drawn from `base_seed`, dynamic realization from `seed`.
Instance make_desk_instance(int class_id, std::uint64_t base_seed, std::uint64_t seed,
                            const DeskOptions& options = default_desk_options());

// ---- campaigns ----------------------------------------------------------

// Reads a JSON manifest, runs every (instance, algorithm, seed) and writes
// reports.csv, table.csv, table_rounded.csv, profile.csv and per-run event
// logs into <output_root>/campaign-<hash>. Returns the directory.
std::string run_campaign(const std::string& manifest_path, int parallelism);
std::string run_campaign_json(const std::string& manifest_text, const std::string& base_dir, int parallelism);

std::string manifest_hash(const std::string& manifest_text);

void write_reports_csv(const std::string& path, std::span<const RunReport> reports);
std::vector<RunReport> read_reports_csv(const std::string& path);
void write_table_csv(const std::string& path, const ResultTable& table);
void write_profile_csv(const std::string& path, std::span<const ProfileCurve> curves);

// ---- nonanticipation example --------------------------------------------

struct Fig1Record {
  double exact_travel_c = 0.0;
  double exact_travel_b = 0.0;
  double two_stage_travel_b = 0.0;
  double two_stage_travel_c = 0.0;
  VertexId multistage_choice = 0;
  VertexId two_stage_choice = 0;
  double committed_b_cost = 0.0;  // expected cost after committing to b
  double seconds = 0.0;
};

Fig1Record fig1_demo();
std::string describe(const Fig1Record& record);

}  // namespace dsvrp
