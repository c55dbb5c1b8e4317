#include "dsvrp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dsvrp/rng.hpp"
#include "text_util.hpp"

namespace dsvrp {

using detail::format_double;
using detail::parse_integer;
using detail::parse_number;
using detail::split_ws;

int Instance::depot_deadline() const {
  if (window.empty()) return horizon;
  return std::min(horizon, window[kDepot].latest);
}

std::vector<Request> Instance::deterministic_requests() const {
  std::vector<Request> out;
  for (const auto& r : requests)
    if (r.reveal_epoch == 0) out.push_back(r);
  return out;
}

std::vector<Request> Instance::reveals_at(int epoch) const {
  std::vector<Request> out;
  for (const auto& r : requests)
    if (r.reveal_epoch == epoch) out.push_back(r);
  std::sort(out.begin(), out.end(),
            [](const Request& a, const Request& b) { return a.arrival_index < b.arrival_index; });
  return out;
}

double Instance::remaining_mass(VertexId v, int from_epoch) const {
  double mass = 0.0;
  for (int t = std::max(1, from_epoch); t <= horizon; ++t) mass += probability(t, v);
  return mass;
}

void Instance::resize(int customers, int horizon_length) {
  customer_count = customers;
  horizon = horizon_length;
  const auto nv = static_cast<std::size_t>(customers + 1);
  travel.assign(nv * nv, 0.0);
  demand.assign(nv, 0.0);
  service.assign(nv, 0);
  window.assign(nv, TimeWindow{0, horizon_length});
  reveal_probability.assign(static_cast<std::size_t>(horizon_length + 1) * nv, 0.0);
}

void Instance::sort_requests() {
  std::sort(requests.begin(), requests.end(), [](const Request& a, const Request& b) {
    if (a.reveal_epoch != b.reveal_epoch) return a.reveal_epoch < b.reveal_epoch;
    return a.arrival_index < b.arrival_index;
  });
}

void Instance::validate() const {
  const int nv = vertex_total();
  if (customer_count < 0) throw ValidationError("negative customer count");
  if (horizon < 1) throw ValidationError("horizon must be at least 1");
  if (vehicle_count < 1) throw ValidationError("at least one vehicle is required");
  if (capacity < 0.0) throw ValidationError("negative capacity");
  const auto nvs = static_cast<std::size_t>(nv);
  if (travel.size() != nvs * nvs || demand.size() != nvs || service.size() != nvs ||
      window.size() != nvs || reveal_probability.size() != static_cast<std::size_t>(horizon + 1) * nvs)
    throw ValidationError("storage sizes do not match customer count and horizon");
  if (!coords.empty() && coords.size() != nvs) throw ValidationError("coordinate count mismatch");
  for (int i = 0; i < nv; ++i) {
    if (window[i].earliest > window[i].latest)
      throw ValidationError("time window of vertex " + std::to_string(i) + " has e > l");
    if (demand[i] < 0.0) throw ValidationError("negative demand at vertex " + std::to_string(i));
    if (service[i] < 0) throw ValidationError("negative service at vertex " + std::to_string(i));
    for (int j = 0; j < nv; ++j) {
      const double t = travel_time(i, j);
      if (!(t >= 0.0)) throw ValidationError("negative travel time");
      if (i == j && t != 0.0) throw ValidationError("nonzero travel time on the diagonal");
    }
  }
  for (int t = 1; t <= horizon; ++t)
    for (int i = 1; i < nv; ++i) {
      const double p = probability(t, i);
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("reveal probability outside [0,1]");
    }
  std::set<std::pair<int, int>> seen;
  for (const auto& r : requests) {
    if (r.vertex < 1 || r.vertex > customer_count) throw ValidationError("request for unknown vertex");
    if (r.reveal_epoch < 0 || r.reveal_epoch > horizon) throw ValidationError("request epoch outside [0,H]");
    if (!seen.insert({r.reveal_epoch, r.arrival_index}).second)
      throw ValidationError("duplicate arrival index within epoch " + std::to_string(r.reveal_epoch));
  }
}

ClassProfile class_profile(int class_id) {
  switch (class_id) {
    case 1:
    case 2:
    case 3:
      return {class_id, 0.44, 0.5, 0.25, 0.25};
    case 4:
      return {class_id, 0.57, 0.2, 0.2, 0.6};
    case 5:
      return {class_id, 0.81, 0.1, 0.1, 0.8};
    case 6:
      return {class_id, 1.0, 0.0, 0.3, 0.7};
    default:
      throw UnsupportedClassError("unknown instance class " + std::to_string(class_id));
  }
}

SliceBounds slice_bounds(int horizon) { return {horizon / 3, (2 * horizon) / 3}; }

double truncated_distance(const Point& a, const Point& b) {
  const double d = std::hypot(a.x - b.x, a.y - b.y);
  return std::floor(d * 10.0 + 1e-9) / 10.0;
}

namespace {

struct StaticRecord {
  int id;
  double x, y, demand, ready, due, service;
  int line;
};

Instance build_static(const std::string& name, int vehicles, double capacity,
                      std::vector<StaticRecord> records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t k = 1; k < records.size(); ++k)
    if (records[k].id == records[k - 1].id)
      throw ValidationError("duplicate vertex id " + std::to_string(records[k].id) + " (line " +
                            std::to_string(records[k].line) + ")");
  if (records.empty() || records.front().id != 0) throw ValidationError("missing depot record (id 0)");
  for (std::size_t k = 0; k < records.size(); ++k)
    if (records[k].id != static_cast<int>(k))
      throw ValidationError("vertex ids must be contiguous from 0; missing id " + std::to_string(k));

  const int n = static_cast<int>(records.size()) - 1;
  const int horizon = static_cast<int>(std::lround(records[0].due));
  if (horizon < 1) throw ValidationError("depot due date must be positive");

  Instance inst;
  inst.name = name;
  inst.resize(n, horizon);
  inst.vehicle_count = vehicles;
  inst.capacity = capacity;
  inst.coords.resize(static_cast<std::size_t>(n + 1));
  for (const auto& r : records) {
    inst.coords[r.id] = {r.x, r.y};
    inst.demand[r.id] = r.demand;
    inst.service[r.id] = static_cast<int>(std::lround(r.service));
    inst.window[r.id] = {static_cast<int>(std::lround(r.ready)), static_cast<int>(std::lround(r.due))};
  }
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      inst.travel_time(i, j) = i == j ? 0.0 : truncated_distance(inst.coords[i], inst.coords[j]);
  for (int i = 1; i <= n; ++i) inst.requests.push_back({i, 0, i - 1});
  inst.validate();
  return inst;
}

}  // namespace

Instance parse_static_instance(std::istream& in) {
  std::string line;
  int line_no = 0;
  std::string name;
  bool have_header = false;
  int vehicles = 0;
  double capacity = 0.0;
  std::vector<StaticRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (!parse_number(tokens[0])) {
      if (name.empty()) name = std::string(tokens[0]);
      continue;
    }
    std::vector<double> values;
    for (auto tok : tokens) {
      auto v = parse_number(tok);
      if (!v) throw ParseError(line_no, "non-numeric field '" + std::string(tok) + "'");
      values.push_back(*v);
    }
    if (!have_header) {
      if (values.size() != 2) throw ParseError(line_no, "expected vehicle count and capacity");
      if (values[0] < 1 || values[0] != std::floor(values[0]))
        throw ParseError(line_no, "vehicle count must be a positive integer");
      vehicles = static_cast<int>(values[0]);
      capacity = values[1];
      have_header = true;
      continue;
    }
    if (values.size() != 7)
      throw ParseError(line_no, "expected 7 fields (id x y demand ready due service), got " +
                                    std::to_string(values.size()));
    if (values[0] < 0 || values[0] != std::floor(values[0]))
      throw ParseError(line_no, "vertex id must be a nonnegative integer");
    records.push_back({static_cast<int>(values[0]), values[1], values[2], values[3], values[4],
                       values[5], values[6], line_no});
  }
  if (!have_header) throw ParseError(line_no, "missing vehicle count / capacity header");
  return build_static(name, vehicles, capacity, std::move(records));
}

Instance parse_static_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_static_instance(in);
}

Instance generate_dynamic_instance(const Instance& base, const ClassProfile& profile, std::uint64_t seed,
                                   const GeneratorOptions& options) {
  if (profile.class_id == 5)
    throw UnsupportedClassError("class 5 instances are not generated (source instances unavailable)");
  const ClassProfile row = class_profile(profile.class_id);
  if (row.p_initial != profile.p_initial || row.p_early != profile.p_early || row.p_late != profile.p_late)
    throw ValidationError("profile probabilities do not match class " + std::to_string(profile.class_id));
  if (base.customer_count < 1) throw ValidationError("base instance has no customers");
  if (options.horizon < 3) throw ValidationError("generated horizon must be at least 3");

  const int n = base.customer_count;
  const int horizon = options.horizon;
  Instance inst;
  inst.name = base.name + "-c" + std::to_string(profile.class_id) + "-s" + std::to_string(seed);
  inst.resize(n, horizon);
  inst.vehicle_count = base.vehicle_count;
  inst.capacity = base.capacity;
  inst.coords = base.coords;
  inst.demand = base.demand;

  const double scale =
      options.rescale_time ? static_cast<double>(horizon) / static_cast<double>(base.depot_deadline()) : 1.0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j)
      inst.travel_time(i, j) = std::floor(base.travel_time(i, j) * scale * 10.0 + 1e-9) / 10.0;
    int d = static_cast<int>(std::lround(base.service[i] * scale));
    if (i != kDepot && base.service[i] > 0) d = std::max(d, 1);
    inst.service[i] = d;
    inst.window[i] = {static_cast<int>(std::lround(base.window[i].earliest * scale)),
                      static_cast<int>(std::lround(base.window[i].latest * scale))};
  }
  inst.window[kDepot].latest = std::min(inst.window[kDepot].latest, horizon);

  const SliceBounds slices = slice_bounds(horizon);
  const int early_len = slices.early_end;
  const int late_len = slices.late_end - slices.early_end;
  for (int i = 1; i <= n; ++i) {
    for (int t = 1; t <= slices.early_end; ++t) inst.probability(t, i) = profile.p_early / early_len;
    for (int t = slices.early_end + 1; t <= slices.late_end; ++t) inst.probability(t, i) = profile.p_late / late_len;
  }

  Rng rng = derive_rng(seed, RngStream::kInstance);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> early_epoch(1, slices.early_end);
  std::uniform_int_distribution<int> late_epoch(slices.early_end + 1, slices.late_end);
  std::map<int, int> next_index;
  for (int i = 1; i <= n; ++i) {
    const double u = unit(rng);
    int epoch = -1;
    if (u < profile.p_initial)
      epoch = 0;
    else if (u < profile.p_initial + profile.p_early)
      epoch = early_epoch(rng);
    else if (u < profile.p_initial + profile.p_early + profile.p_late)
      epoch = late_epoch(rng);
    if (epoch >= 0) inst.requests.push_back({i, epoch, next_index[epoch]++});
  }
  inst.sort_requests();
  inst.validate();
  return inst;
}

double realized_dod(const Instance& instance) {
  if (instance.requests.empty()) return 0.0;
  std::size_t dynamic = 0;
  for (const auto& r : instance.requests)
    if (r.reveal_epoch > 0) ++dynamic;
  return static_cast<double>(dynamic) / static_cast<double>(instance.requests.size());
}

void write_dynamic_instance(std::ostream& out, const Instance& inst) {
  const int n = inst.customer_count;
  out << "[STATIC]\n";
  out << "name " << (inst.name.empty() ? "unnamed" : inst.name) << "\n";
  out << "horizon " << inst.horizon << "\n";
  out << "vehicles " << inst.vehicle_count << "\n";
  out << "capacity " << format_double(inst.capacity) << "\n";
  out << "customers " << n << "\n";
  for (int i = 0; i <= n; ++i) {
    const Point p = inst.coords.empty() ? Point{} : inst.coords[i];
    out << "vertex " << i << ' ' << format_double(p.x) << ' ' << format_double(p.y) << ' '
        << format_double(inst.demand[i]) << ' ' << inst.window[i].earliest << ' ' << inst.window[i].latest << ' '
        << inst.service[i] << "\n";
  }
  out << "coords " << (inst.coords.empty() ? 0 : 1) << "\n";
  out << "travel\n";
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) out << (j ? " " : "") << format_double(inst.travel_time(i, j));
    out << "\n";
  }
  out << "[REVEALS]\n";
  for (const auto& r : inst.requests) out << r.vertex << ' ' << r.reveal_epoch << ' ' << r.arrival_index << "\n";
  out << "[PROBABILITY]\n";
  for (int i = 1; i <= n; ++i) {
    int t = 1;
    while (t <= inst.horizon) {
      const double p = inst.probability(t, i);
      int end = t;
      while (end + 1 <= inst.horizon && inst.probability(end + 1, i) == p) ++end;
      if (p != 0.0) out << t << ' ' << end << ' ' << i << ' ' << format_double(p) << "\n";
      t = end + 1;
    }
  }
}

Instance read_dynamic_instance(std::istream& in) {
  enum class Section { kNone, kStatic, kTravel, kReveals, kProbability };
  Section section = Section::kNone;
  Instance inst;
  std::string name;
  int horizon = -1, customers = -1;
  bool allocated = false;
  bool has_coords = true;
  int travel_row = 0;
  std::set<int> vertex_seen;
  std::string line;
  int line_no = 0;

  auto number = [&](std::string_view tok) {
    auto v = parse_number(tok);
    if (!v) throw ParseError(line_no, "non-numeric field '" + std::string(tok) + "'");
    return *v;
  };
  auto integer = [&](std::string_view tok) {
    auto v = parse_integer(tok);
    if (!v) throw ParseError(line_no, "expected integer, got '" + std::string(tok) + "'");
    return static_cast<int>(*v);
  };
  auto ensure_allocated = [&]() {
    if (allocated) return;
    if (horizon < 1 || customers < 0) throw ParseError(line_no, "horizon and customers must precede vertex data");
    std::string keep_name = inst.name;
    int vehicles = inst.vehicle_count;
    double cap = inst.capacity;
    inst.resize(customers, horizon);
    inst.name = keep_name;
    inst.vehicle_count = vehicles;
    inst.capacity = cap;
    inst.coords.assign(static_cast<std::size_t>(customers + 1), Point{});
    allocated = true;
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "[STATIC]") { section = Section::kStatic; continue; }
    if (tokens[0] == "[REVEALS]") { ensure_allocated(); section = Section::kReveals; continue; }
    if (tokens[0] == "[PROBABILITY]") { ensure_allocated(); section = Section::kProbability; continue; }
    switch (section) {
      case Section::kNone:
        throw ParseError(line_no, "content before [STATIC]");
      case Section::kStatic: {
        const auto key = tokens[0];
        if (key == "travel") {
          ensure_allocated();
          section = Section::kTravel;
          travel_row = 0;
          break;
        }
        if (tokens.size() < 2) throw ParseError(line_no, "missing value for '" + std::string(key) + "'");
        if (key == "name") inst.name = std::string(tokens[1]);
        else if (key == "horizon") horizon = integer(tokens[1]);
        else if (key == "vehicles") inst.vehicle_count = integer(tokens[1]);
        else if (key == "capacity") inst.capacity = number(tokens[1]);
        else if (key == "customers") customers = integer(tokens[1]);
        else if (key == "coords") has_coords = integer(tokens[1]) != 0;
        else if (key == "vertex") {
          ensure_allocated();
          if (tokens.size() != 8) throw ParseError(line_no, "vertex record needs 7 fields");
          const int id = integer(tokens[1]);
          if (id < 0 || id > customers) throw ParseError(line_no, "vertex id out of range");
          if (!vertex_seen.insert(id).second) throw ValidationError("duplicate vertex id " + std::to_string(id));
          inst.coords[id] = {number(tokens[2]), number(tokens[3])};
          inst.demand[id] = number(tokens[4]);
          inst.window[id] = {integer(tokens[5]), integer(tokens[6])};
          inst.service[id] = integer(tokens[7]);
        } else {
          throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
        }
        break;
      }
      case Section::kTravel: {
        if (travel_row > customers) throw ParseError(line_no, "too many travel rows");
        if (static_cast<int>(tokens.size()) != customers + 1) throw ParseError(line_no, "travel row has wrong width");
        for (int j = 0; j <= customers; ++j) inst.travel_time(travel_row, j) = number(tokens[j]);
        ++travel_row;
        break;
      }
      case Section::kReveals: {
        if (tokens.size() != 3) throw ParseError(line_no, "reveal record needs vertex epoch arrivalIndex");
        inst.requests.push_back({integer(tokens[0]), integer(tokens[1]), integer(tokens[2])});
        break;
      }
      case Section::kProbability: {
        if (tokens.size() != 4) throw ParseError(line_no, "probability record needs start end vertex p");
        const int start = integer(tokens[0]), end = integer(tokens[1]), v = integer(tokens[2]);
        const double p = number(tokens[3]);
        if (start < 1 || end > horizon || start > end || v < 1 || v > customers)
          throw ParseError(line_no, "probability slice out of range");
        for (int t = start; t <= end; ++t) inst.probability(t, v) = p;
        break;
      }
    }
  }
  ensure_allocated();
  if (travel_row != customers + 1) throw ParseError(line_no, "travel matrix incomplete");
  if (static_cast<int>(vertex_seen.size()) != customers + 1) throw ValidationError("missing vertex records");
  if (!has_coords) inst.coords.clear();
  inst.sort_requests();
  inst.validate();
  return inst;
}

Instance read_dynamic_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dynamic_instance(in);
}

void write_dynamic_instance_file(const std::string& path, const Instance& instance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_dynamic_instance(out, instance);
}

void write_static_instance(std::ostream& out, const Instance& inst) {
  out << (inst.name.empty() ? "UNNAMED" : inst.name) << "\n\nVEHICLE\nNUMBER     CAPACITY\n";
  out << "  " << inst.vehicle_count << "         " << format_double(inst.capacity) << "\n\n";
  out << "CUSTOMER\nCUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE TIME\n\n";
  for (int i = 0; i <= inst.customer_count; ++i) {
    const Point p = inst.coords.empty() ? Point{} : inst.coords[i];
    out << "  " << i << "  " << format_double(p.x) << "  " << format_double(p.y) << "  "
        << format_double(inst.demand[i]) << "  " << inst.window[i].earliest << "  " << inst.window[i].latest
        << "  " << inst.service[i] << "\n";
  }
}

Instance make_synthetic_base(int customers, std::uint64_t seed, const SyntheticOptions& options) {
  if (customers < 1) throw ValidationError("synthetic base needs at least one customer");
  Rng rng = derive_rng(seed, RngStream::kInstance, 0xba5e);
  std::uniform_real_distribution<double> coord(0.0, 100.0);
  std::normal_distribution<double> spread(0.0, 6.0);
  std::uniform_int_distribution<int> demand(5, 40);

  std::vector<StaticRecord> records;
  records.push_back({0, 40.0, 50.0, 0.0, 0.0, static_cast<double>(options.depot_deadline), 0.0, 0});
  const int clustered = static_cast<int>(std::lround(options.clustered_fraction * customers));
  const int cluster_count = std::max(1, customers / 8);
  std::vector<Point> centers;
  for (int c = 0; c < cluster_count; ++c) centers.push_back({coord(rng), coord(rng)});
  std::uniform_int_distribution<int> pick_center(0, cluster_count - 1);
  const Point depot{40.0, 50.0};
  for (int i = 1; i <= customers; ++i) {
    Point p;
    if (i <= clustered) {
      const Point c = centers[pick_center(rng)];
      p = {std::clamp(c.x + spread(rng), 0.0, 100.0), std::clamp(c.y + spread(rng), 0.0, 100.0)};
    } else {
      p = {coord(rng), coord(rng)};
    }
    p = {std::round(p.x), std::round(p.y)};
    const double out_leg = truncated_distance(depot, p);
    const double back_leg = truncated_distance(p, depot);
    const double lo = std::ceil(out_leg);
    const double hi = std::floor(options.depot_deadline - back_leg - options.service);
    std::uniform_real_distribution<double> centre(lo, std::max(lo, hi));
    const double mid = centre(rng);
    const double ready = std::max(lo, std::round(mid - options.window_width / 2));
    const double due = std::max(ready, std::min(hi, std::round(mid + options.window_width / 2)));
    records.push_back({i, p.x, p.y, static_cast<double>(demand(rng)), ready, due,
                       static_cast<double>(options.service), 0});
  }
  return build_static("SYN" + std::to_string(customers) + "-" + std::to_string(seed), options.vehicles,
                      options.capacity, std::move(records));
}

Instance build_fig1_fixture() {
  using namespace fig1;
  constexpr int kCustomers = 9;
  constexpr int kHorizon = 12;
  Instance inst;
  inst.name = "fig1";
  inst.resize(kCustomers, kHorizon);
  inst.vehicle_count = 1;
  inst.capacity = 10.0;
  for (int i = 0; i <= kCustomers; ++i)
    for (int j = 0; j <= kCustomers; ++j) inst.travel_time(i, j) = i == j ? 0.0 : 20.0;
  const std::pair<VertexId, VertexId> arcs[] = {{kA, kB}, {kA, kC}, {kB, kD}, {kB, kG}, {kD, kE},
                                                {kE, kF}, {kG, kH}, {kH, kI}, {kC, kE}, {kC, kH}};
  for (auto [from, to] : arcs) inst.travel_time(from, to) = 2.0;
  for (int i = 1; i <= kCustomers; ++i) inst.travel_time(i, kDepot) = 2.0;
  for (int i = 1; i <= kCustomers; ++i) inst.demand[i] = 1.0;
  // Service is instantaneous in this example.
  for (int i = 0; i <= kCustomers; ++i) inst.service[i] = 0;
  inst.window[kDepot] = {0, kHorizon};
  for (VertexId v : {kA, kB, kC}) inst.window[v] = {0, kHorizon};
  inst.window[kD] = inst.window[kG] = {5, 5};
  inst.window[kE] = inst.window[kH] = {7, 7};
  inst.window[kF] = inst.window[kI] = {9, 9};
  for (VertexId v : {kD, kE, kF, kG, kH, kI}) inst.probability(kRevealEpoch, v) = 0.5;
  inst.validate();
  return inst;
}

}  // namespace dsvrp
