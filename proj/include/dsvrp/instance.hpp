#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsvrp {

using VertexId = int;
inline constexpr VertexId kDepot = 0;

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedClassError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TimeWindow {
  int earliest = 0;
  int latest = 0;
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct Request {
  VertexId vertex = 0;
  int reveal_epoch = 0;
  int arrival_index = 0;
  friend auto operator<=>(const Request&, const Request&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Static world plus the realized request stream of one dynamic instance.
// Vertex 0 is the depot, 1..customer_count are customer regions.
struct Instance {
  std::string name;
  int horizon = 0;
  int customer_count = 0;
  int vehicle_count = 0;
  double capacity = 0.0;
  std::vector<double> travel;  // row-major, (n+1)^2
  std::vector<double> demand;
  std::vector<int> service;
  std::vector<TimeWindow> window;
  std::vector<Point> coords;  // empty when travel times are not Euclidean
  // P^t[i], row-major over t in [0,H] and i in [0,n]; row 0 and column 0 unused.
  std::vector<double> reveal_probability;
  // Every request the simulator will reveal, sorted by (epoch, arrival_index).
  std::vector<Request> requests;

  int vertex_total() const { return customer_count + 1; }
  double travel_time(VertexId from, VertexId to) const {
    return travel[static_cast<std::size_t>(from) * static_cast<std::size_t>(vertex_total()) +
                  static_cast<std::size_t>(to)];
  }
  double& travel_time(VertexId from, VertexId to) {
    return travel[static_cast<std::size_t>(from) * static_cast<std::size_t>(vertex_total()) +
                  static_cast<std::size_t>(to)];
  }
  double probability(int epoch, VertexId v) const {
    return reveal_probability[static_cast<std::size_t>(epoch) * static_cast<std::size_t>(vertex_total()) +
                              static_cast<std::size_t>(v)];
  }
  double& probability(int epoch, VertexId v) {
    return reveal_probability[static_cast<std::size_t>(epoch) * static_cast<std::size_t>(vertex_total()) +
                              static_cast<std::size_t>(v)];
  }
  // Latest time a vehicle may be back at the depot.
  int depot_deadline() const;
  std::vector<Request> deterministic_requests() const;
  std::vector<Request> reveals_at(int epoch) const;
  // Sum of P^t[v] over t in [from_epoch, H].
  double remaining_mass(VertexId v, int from_epoch) const;

  // Allocates all per-vertex and per-epoch storage with neutral values.
  void resize(int customers, int horizon_length);
  void sort_requests();
  // Throws ValidationError on any broken invariant.
  void validate() const;
};

struct ClassProfile {
  int class_id = 0;
  double dod = 0.0;  // nominal degree of dynamism as published
  double p_initial = 0.0;
  double p_early = 0.0;
  double p_late = 0.0;
};

// Rows of the benchmark class table. Throws UnsupportedClassError for ids
// outside 1..6.
ClassProfile class_profile(int class_id);

struct GeneratorOptions {
  int horizon = 480;
  // Scale travel, windows and service so that the base depot deadline maps
  // onto the new horizon.
  bool rescale_time = true;
};

// Slice boundaries used by the generator: [1,s1], [s1+1,s2], [s2+1,H].
struct SliceBounds {
  int early_end = 0;
  int late_end = 0;
};
SliceBounds slice_bounds(int horizon);

Instance parse_static_instance(std::istream& in);
Instance parse_static_instance_file(const std::string& path);

Instance generate_dynamic_instance(const Instance& base, const ClassProfile& profile,
                                   std::uint64_t seed, const GeneratorOptions& options = {});

// Fraction of requests revealed after epoch 0.
double realized_dod(const Instance& instance);

void write_dynamic_instance(std::ostream& out, const Instance& instance);
Instance read_dynamic_instance(std::istream& in);
Instance read_dynamic_instance_file(const std::string& path);
void write_dynamic_instance_file(const std::string& path, const Instance& instance);

void write_static_instance(std::ostream& out, const Instance& instance);

struct SyntheticOptions {
  int vehicles = 25;
  double capacity = 200.0;
  int depot_deadline = 240;
  int service = 10;
  double window_width = 30.0;
  // Fraction of customers placed in clusters; the rest are uniform (RC-like mix).
  double clustered_fraction = 0.5;
};

// Solomon-style static instance with RC-like geography, for experiments
// where the original benchmark files are not at hand.
Instance make_synthetic_base(int customers, std::uint64_t seed, const SyntheticOptions& options = {});

// Euclidean distance truncated to one decimal.
double truncated_distance(const Point& a, const Point& b);

// Vertices of the nonanticipation example. One vehicle starts at a.
namespace fig1 {
inline constexpr VertexId kA = 1;
inline constexpr VertexId kB = 2;
inline constexpr VertexId kC = 3;
inline constexpr VertexId kD = 4;
inline constexpr VertexId kE = 5;
inline constexpr VertexId kF = 6;
inline constexpr VertexId kG = 7;
inline constexpr VertexId kH = 8;
inline constexpr VertexId kI = 9;
inline constexpr int kDecisionEpoch = 1;
inline constexpr int kRevealEpoch = 4;
}  // namespace fig1

Instance build_fig1_fixture();

}  // namespace dsvrp
