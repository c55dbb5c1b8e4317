#include "dsvrp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dsvrp/evaluation.hpp"
#include "text_util.hpp"

namespace dsvrp {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> known_algorithms() {
  return {"GSA-df", "GSA-dfr", "GSA-ro", "GSA-wf", "GSA-cw", "GLS-df", "EXP-df"};
}

ControllerConfig algorithm_config(const std::string& id, const ControllerConfig& base) {
  ControllerConfig c = base;
  const auto dash = id.find('-');
  if (dash == std::string::npos) throw std::invalid_argument("unknown algorithm '" + id + "'");
  c.rule = parse_rule(id.substr(0, dash));
  std::string tag = id.substr(dash + 1);
  c.relocation_enabled = false;
  if (tag == "dfr") {
    tag = "df";
    c.relocation_enabled = true;
  }
  c.strategy = parse_strategy(tag);
  if (c.strategy == WaitingStrategy::kRelocationOnly) c.relocation_enabled = true;
  if (c.rule == DecisionRule::kGls && (c.strategy != WaitingStrategy::kDriveFirst || c.relocation_enabled))
    throw std::invalid_argument("GLS is only defined with drive-first: '" + id + "'");
  return c;
}

RunReport run_single(const Instance& instance, const std::string& instance_id, const std::string& group,
                     const std::string& algorithm_id, std::uint64_t seed, const ControllerConfig& base,
                     const std::string& event_log_path) {
  RunReport rep;
  rep.instance_id = instance_id;
  rep.group = group;
  rep.algorithm_id = algorithm_id;
  rep.seed = seed;
  rep.event_log_path = event_log_path;
  try {
    ControllerConfig cfg = algorithm_config(algorithm_id, base);
    cfg.seed = seed;
    std::ofstream log;
    if (!event_log_path.empty()) {
      log.open(event_log_path);
      if (!log) throw std::runtime_error("cannot write " + event_log_path);
      cfg.event_log = &log;
    }
    const RunResult res = run_online(instance, cfg);
    rep.rejections = res.rejected;
    rep.accepted = res.accepted;
    rep.revealed = res.revealed;
    rep.feasible = res.feasible;
    if (!res.iterations_per_epoch.empty()) {
      const auto& it = res.iterations_per_epoch;
      rep.iterations.min = *std::min_element(it.begin(), it.end());
      rep.iterations.max = *std::max_element(it.begin(), it.end());
      long long sum = 0;
      for (auto v : it) sum += v;
      rep.iterations.mean = static_cast<double>(sum) / static_cast<double>(it.size());
    }
    if (!res.feasible) rep.error = "infeasible final log";
  } catch (const std::exception& e) {
    rep.error = e.what();
  }
  return rep;
}

double round1(double x) {
  const double s = x < 0 ? -1.0 : 1.0;
  return s * std::floor(std::abs(x) * 10.0 + 0.5 + 1e-9) / 10.0;
}

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void fill_averages(ResultTable& t) {
  const std::size_t A = t.algorithms.size();
  t.group_averages.clear();
  std::map<std::string, std::vector<std::vector<double>>> by_group;
  std::vector<std::vector<double>> all(A);
  for (const auto& row : t.rows) {
    auto& g = by_group[row.group];
    g.resize(A);
    for (std::size_t a = 0; a < A; ++a)
      if (row.cells[a]) {
        g[a].push_back(*row.cells[a]);
        all[a].push_back(*row.cells[a]);
      }
  }
  for (auto& [group, cols] : by_group) {
    ResultTable::GroupAverage avg{group, {}};
    for (std::size_t a = 0; a < A; ++a) avg.values.push_back(mean_of(cols[a]));
    t.group_averages.push_back(avg);
  }
  t.grand_average.clear();
  for (std::size_t a = 0; a < A; ++a) t.grand_average.push_back(mean_of(all[a]));
}

// Rows are every (group, instance) seen; a cell with no value is missing.
ResultTable build_table(const std::set<std::string>& algs, const std::set<std::pair<std::string, std::string>>& rows,
                        const std::map<std::pair<std::string, std::string>, std::pair<double, int>>& values) {
  ResultTable t;
  t.algorithms.assign(algs.begin(), algs.end());
  for (const auto& [group, instance] : rows) {
    ResultTable::Row row{instance, group, {}, {}};
    for (const auto& a : t.algorithms) {
      auto it = values.find({instance, a});
      if (it == values.end()) {
        row.cells.push_back(std::nullopt);
        row.runs.push_back(0);
        t.missing.push_back(instance + "/" + a);
      } else {
        row.cells.push_back(it->second.first);
        row.runs.push_back(it->second.second);
      }
    }
    t.rows.push_back(std::move(row));
  }
  fill_averages(t);
  return t;
}

}  // namespace

ResultTable tabulate(std::span<const CellValue> cells) {
  std::set<std::string> algs;
  std::set<std::pair<std::string, std::string>> rows;
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> values;
  for (const auto& c : cells) {
    algs.insert(c.algorithm);
    rows.insert({c.group, c.instance});
    values[{c.instance, c.algorithm}] = {c.mean, c.runs};
  }
  return build_table(algs, rows, values);
}

ResultTable aggregate(std::span<const RunReport> reports) {
  std::set<std::string> algs;
  std::set<std::pair<std::string, std::string>> rows;
  // Keyed by seed so that the sum does not depend on report order.
  std::map<std::pair<std::string, std::string>, std::map<std::uint64_t, int>> ok;
  for (const auto& r : reports) {
    algs.insert(r.algorithm_id);
    rows.insert({r.group, r.instance_id});
    if (r.error.empty()) ok[{r.instance_id, r.algorithm_id}][r.seed] = r.rejections;
  }
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> values;
  for (const auto& [key, seeds] : ok) {
    long long sum = 0;
    for (const auto& [seed, rej] : seeds) sum += rej;
    const int n = static_cast<int>(seeds.size());
    values[key] = {static_cast<double>(sum) / n, n};
  }
  return build_table(algs, rows, values);
}

ResultTable rounded_view(const ResultTable& table) {
  ResultTable r = table;
  for (auto& row : r.rows)
    for (auto& c : row.cells)
      if (c) c = round1(*c);
  fill_averages(r);
  for (auto& g : r.group_averages)
    for (auto& v : g.values)
      if (v) v = round1(*v);
  const std::size_t A = r.algorithms.size();
  for (std::size_t a = 0; a < A; ++a) {
    std::vector<double> vals;
    for (const auto& g : r.group_averages)
      if (g.values[a]) vals.push_back(*g.values[a]);
    const auto m = mean_of(vals);
    r.grand_average[a] = m ? std::optional<double>(round1(*m)) : std::nullopt;
  }
  return r;
}

std::vector<ProfileCurve> performance_profile(const ResultTable& table) {
  const std::size_t A = table.algorithms.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> ratios(A);
  for (const auto& row : table.rows) {
    double best = inf;
    for (const auto& c : row.cells)
      if (c) best = std::min(best, *c);
    if (!std::isfinite(best)) continue;
    for (std::size_t a = 0; a < A; ++a) {
      double r = inf;
      if (row.cells[a]) {
        const double v = *row.cells[a];
        if (best == 0.0) r = v == 0.0 ? 1.0 : inf;
        else r = v / best;
      }
      ratios[a].push_back(r);
    }
  }
  std::vector<ProfileCurve> curves;
  for (std::size_t a = 0; a < A; ++a) {
    ProfileCurve curve{table.algorithms[a], {}};
    auto rs = ratios[a];
    std::sort(rs.begin(), rs.end());
    const double n = static_cast<double>(rs.size());
    auto fraction_at = [&](double x) {
      return static_cast<double>(std::upper_bound(rs.begin(), rs.end(), x) - rs.begin()) / n;
    };
    if (rs.empty()) {
      curves.push_back(curve);
      continue;
    }
    curve.points.push_back({1.0, fraction_at(1.0)});
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const double x = rs[i];
      if (x <= 1.0 || !std::isfinite(x)) continue;
      if (i + 1 < rs.size() && rs[i + 1] == x) continue;
      curve.points.push_back({x, fraction_at(x)});
    }
    if (curve.points.back().fraction < 1.0) curve.points.push_back({inf, 1.0});
    curves.push_back(std::move(curve));
  }
  return curves;
}

// ---- CSV ------------------------------------------------------------------

namespace {

std::string csv_safe(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' || c == '\r' ? ' ' : c;
  }
  return out + '"';
}

std::string fmt(double x) { return detail::format_double(x); }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("NA"); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c != '"') {
        cur += c;
      } else if (i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_reports_csv(const std::string& path, std::span<const RunReport> reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "instance,group,algorithm,seed,rejections,accepted,revealed,feasible,iter_min,iter_mean,iter_max,event_log,"
         "error\n";
  for (const auto& r : reports)
    out << csv_safe(r.instance_id) << ',' << csv_safe(r.group) << ',' << csv_safe(r.algorithm_id) << ',' << r.seed
        << ',' << r.rejections << ',' << r.accepted << ',' << r.revealed << ',' << (r.feasible ? 1 : 0) << ','
        << r.iterations.min << ',' << fmt(r.iterations.mean) << ',' << r.iterations.max << ','
        << csv_safe(r.event_log_path) << ',' << csv_safe(r.error) << '\n';
}

std::vector<RunReport> read_reports_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);
  std::vector<RunReport> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 13) throw ParseError(lineno, "expected 13 fields in report row");
    RunReport r;
    r.instance_id = f[0];
    r.group = f[1];
    r.algorithm_id = f[2];
    try {
      r.seed = std::stoull(f[3]);
      r.rejections = std::stoi(f[4]);
      r.accepted = std::stoi(f[5]);
      r.revealed = std::stoi(f[6]);
      r.feasible = f[7] == "1";
      r.iterations.min = std::stoll(f[8]);
      r.iterations.mean = std::stod(f[9]);
      r.iterations.max = std::stoll(f[10]);
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad number in report row");
    }
    r.event_log_path = f[11];
    r.error = f[12];
    out.push_back(r);
  }
  return out;
}

void write_table_csv(const std::string& path, const ResultTable& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "instance,group";
  for (const auto& a : t.algorithms) out << ',' << a;
  out << '\n';
  auto avg_for = [&](const std::string& g) -> const ResultTable::GroupAverage* {
    for (const auto& ga : t.group_averages)
      if (ga.group == g) return &ga;
    return nullptr;
  };
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    out << row.instance << ',' << row.group;
    for (const auto& c : row.cells) out << ',' << fmt_opt(c);
    out << '\n';
    if (i + 1 == t.rows.size() || t.rows[i + 1].group != row.group) {
      if (const auto* ga = avg_for(row.group)) {
        out << "Avg," << row.group;
        for (const auto& v : ga->values) out << ',' << fmt_opt(v);
        out << '\n';
      }
    }
  }
  out << "AVG,all";
  for (const auto& v : t.grand_average) out << ',' << fmt_opt(v);
  out << '\n';
}

void write_profile_csv(const std::string& path, std::span<const ProfileCurve> curves) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "algorithm,ratio,fraction\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      out << c.algorithm << ',' << (std::isfinite(p.ratio) ? fmt(p.ratio) : std::string("inf")) << ','
          << fmt(p.fraction) << '\n';
}

DeskOptions default_desk_options() {
  DeskOptions d;
  d.base.vehicles = 5;
  d.base.capacity = 200.0;
  return d;
}

Instance make_desk_instance(int class_id, std::uint64_t base_seed, std::uint64_t seed, const DeskOptions& options) {
  const Instance base = make_synthetic_base(options.customers, base_seed, options.base);
  GeneratorOptions g;
  g.horizon = options.horizon;
  Instance inst = generate_dynamic_instance(base, class_profile(class_id), seed, g);
  inst.name = "desk-c" + std::to_string(class_id) + "-" + std::to_string(base_seed) + "-" + std::to_string(seed);
  return inst;
}

// ---- campaigns ------------------------------------------------------------

std::string manifest_hash(const std::string& manifest_text) {
  const std::string canonical = json::parse(manifest_text).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct PlannedRun {
  std::string instance_id;
  std::string group;
  std::string algorithm;
  std::uint64_t seed = 0;
  ControllerConfig config;
};

void apply_overrides(ControllerConfig& c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "pool_size") c.pool_size = v.get<int>();
    else if (key == "resample_period") c.resample_period = v.get<int>();
    else if (key == "per_epoch_evaluations") c.per_epoch_budget.evaluations = v.get<long long>();
    else if (key == "insertion_evaluations") c.insertion_budget.evaluations = v.get<long long>();
    else if (key == "offline_evaluations") c.offline_budget.evaluations = v.get<long long>();
    else if (key == "per_epoch_ms") c.per_epoch_budget.milliseconds = v.get<double>();
    else if (key == "insertion_ms") c.insertion_budget.milliseconds = v.get<double>();
    else if (key == "offline_ms") c.offline_budget.milliseconds = v.get<double>();
    else if (key == "clock") c.clock = v.get<std::string>() == "wallclock" ? ClockMode::kWallclock : ClockMode::kLogical;
    else if (key == "anneal_temperature") c.anneal_temperature = v.get<double>();
    else if (key == "anneal_cooling") c.anneal_cooling = v.get<double>();
    else if (key == "expectation_max_candidates") c.expectation_max_candidates = v.get<std::size_t>();
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

}  // namespace

std::string run_campaign(const std::string& manifest_path, int parallelism) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot read manifest " + manifest_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return run_campaign_json(ss.str(), fs::path(manifest_path).parent_path().string(), parallelism);
}

std::string run_campaign_json(const std::string& manifest_text, const std::string& base_dir, int parallelism) {
  const json m = json::parse(manifest_text);
  const fs::path base = base_dir.empty() ? fs::current_path() : fs::path(base_dir);
  ControllerConfig defaults;
  if (m.contains("config")) apply_overrides(defaults, m["config"]);

  std::map<std::string, std::pair<std::string, fs::path>> instances;  // id -> (group, file)
  std::vector<std::string> instance_order;
  for (const auto& e : m.at("instances")) {
    const std::string id = e.at("id").get<std::string>();
    if (instances.count(id)) throw std::invalid_argument("duplicate instance id '" + id + "'");
    instances[id] = {e.value("group", std::string("all")), resolve(base, e.at("file").get<std::string>())};
    instance_order.push_back(id);
  }

  std::vector<PlannedRun> planned;
  auto add_runs = [&](const std::vector<std::string>& ids, const std::vector<std::string>& algs,
                      const std::vector<std::uint64_t>& seeds, const ControllerConfig& cfg) {
    for (const auto& a : algs) algorithm_config(a, cfg);
    for (const auto& id : ids) {
      if (!instances.count(id)) throw std::invalid_argument("unknown instance '" + id + "'");
      for (const auto& a : algs)
        for (auto s : seeds) planned.push_back({id, instances[id].first, a, s, cfg});
    }
  };
  if (m.contains("runs")) {
    for (const auto& r : m["runs"]) {
      ControllerConfig cfg = defaults;
      if (r.contains("config")) apply_overrides(cfg, r["config"]);
      std::vector<std::string> ids;
      if (r.at("instance").is_array()) ids = r["instance"].get<std::vector<std::string>>();
      else ids.push_back(r["instance"].get<std::string>());
      std::vector<std::string> algs;
      if (r.at("algorithm").is_array()) algs = r["algorithm"].get<std::vector<std::string>>();
      else algs.push_back(r["algorithm"].get<std::string>());
      add_runs(ids, algs, r.at("seeds").get<std::vector<std::uint64_t>>(), cfg);
    }
  } else {
    add_runs(instance_order, m.at("algorithms").get<std::vector<std::string>>(),
             m.at("seeds").get<std::vector<std::uint64_t>>(), defaults);
  }

  const fs::path root = resolve(base, m.value("output_root", std::string("campaigns")));
  const fs::path dir = root / ("campaign-" + manifest_hash(manifest_text));
  fs::create_directories(dir / "runs");
  fs::create_directories(dir / "events");
  {
    std::ofstream mf(dir / "manifest.json");
    mf << m.dump(2) << '\n';
  }

  // Instances are loaded once; a load failure marks its runs as failed.
  std::map<std::string, Instance> loaded;
  std::map<std::string, std::string> load_error;
  for (const auto& id : instance_order) {
    try {
      loaded.emplace(id, read_dynamic_instance_file(instances[id].second.string()));
    } catch (const std::exception& e) {
      load_error[id] = e.what();
    }
  }

  std::vector<RunReport> reports(planned.size());
  const long long n = static_cast<long long>(planned.size());
  const int threads = std::max(1, parallelism);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < n; ++i) {
    const auto& p = planned[static_cast<std::size_t>(i)];
    const std::string stem = p.instance_id + "__" + p.algorithm + "__" + std::to_string(p.seed);
    const fs::path cached = dir / "runs" / (stem + ".csv");
    if (fs::exists(cached)) {
      auto rows = read_reports_csv(cached.string());
      if (rows.size() == 1) {
        reports[static_cast<std::size_t>(i)] = rows[0];
        continue;
      }
    }
    RunReport rep;
    if (auto it = load_error.find(p.instance_id); it != load_error.end()) {
      rep.instance_id = p.instance_id;
      rep.group = p.group;
      rep.algorithm_id = p.algorithm;
      rep.seed = p.seed;
      rep.error = it->second;
    } else {
      const std::string events = (fs::path("events") / (stem + ".jsonl")).string();
      rep = run_single(loaded.at(p.instance_id), p.instance_id, p.group, p.algorithm, p.seed, p.config,
                       (dir / events).string());
      rep.event_log_path = events;
    }
    write_reports_csv(cached.string(), std::span<const RunReport>(&rep, 1));
    reports[static_cast<std::size_t>(i)] = rep;
  }

  write_reports_csv((dir / "reports.csv").string(), reports);
  const ResultTable table = aggregate(reports);
  write_table_csv((dir / "table.csv").string(), table);
  write_table_csv((dir / "table_rounded.csv").string(), rounded_view(table));
  const auto curves = performance_profile(table);
  write_profile_csv((dir / "profile.csv").string(), curves);
  {
    std::ofstream miss(dir / "missing.txt");
    for (const auto& s : table.missing) miss << s << '\n';
  }
  return dir.string();
}

// ---- nonanticipation example ---------------------------------------------

Fig1Record fig1_demo() {
  const auto t0 = std::chrono::steady_clock::now();
  const Instance inst = build_fig1_fixture();
  const ExactState start = fig1::initial_state(inst);
  const auto scen = fig1::scenarios();
  Fig1Record r;
  const std::vector<VertexId> candidates{fig1::kB, fig1::kC};
  std::vector<double> exact, relaxed;
  for (VertexId v : candidates) {
    exact.push_back(exact_q(start, fig1::travel_to(v), {}, scen, inst));
    relaxed.push_back(two_stage_value(start, fig1::travel_to(v), {}, scen, inst));
  }
  r.exact_travel_b = exact[0];
  r.exact_travel_c = exact[1];
  r.two_stage_travel_b = relaxed[0];
  r.two_stage_travel_c = relaxed[1];
  r.multistage_choice = candidates[exact[1] < exact[0] ? 1 : 0];
  // Two-stage rule: expected per-scenario optimum, as in the expectation algorithm.
  const std::size_t pick = choose_request_expectation(candidates.size(), scen.size(), [&](std::size_t c, std::size_t s) {
    const WeightedScenario single{scen[s].scenario, 1.0};
    return scen[s].probability *
           two_stage_value(start, fig1::travel_to(candidates[c]), {}, std::span<const WeightedScenario>(&single, 1), inst);
  });
  r.two_stage_choice = candidates[pick];

  // Commit to b, then pick the best epoch-3 action knowing nothing new yet.
  ExactState at_b = apply_epoch_action(start, fig1::travel_to(fig1::kB), {}, inst);
  at_b = apply_epoch_action(at_b, EpochAction{}, {}, inst);
  double best = kInfeasible;
  for (VertexId v = 0; v < inst.vertex_total(); ++v) {
    if (v == fig1::kB) continue;
    try {
      best = std::min(best, exact_q(at_b, fig1::travel_to(v), {}, scen, inst));
    } catch (const std::invalid_argument&) {
    }
  }
  EpochAction wait;
  wait.moves = {{VehicleMove{MoveKind::kWait, fig1::kB}}};
  best = std::min(best, exact_q(at_b, wait, {}, scen, inst));
  r.committed_b_cost = best;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string describe(const Fig1Record& r) {
  std::ostringstream out;
  auto name = [](VertexId v) { return std::string(1, static_cast<char>('a' + v - 1)); };
  out << "exactQ(travel-to-c) = " << fmt(r.exact_travel_c) << '\n'
      << "exactQ(travel-to-b) = " << fmt(r.exact_travel_b) << '\n'
      << "twoStage(travel-to-b) = " << fmt(r.two_stage_travel_b) << '\n'
      << "twoStage(travel-to-c) = " << fmt(r.two_stage_travel_c) << '\n'
      << "multistage rule picks " << name(r.multistage_choice) << '\n'
      << "two-stage rule picks " << name(r.two_stage_choice) << '\n'
      << "expected cost after committing to b = " << fmt(r.committed_b_cost) << '\n';
  return out.str();
}

}  // namespace dsvrp
