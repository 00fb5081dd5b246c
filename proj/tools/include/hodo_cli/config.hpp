#pragma once

// Run configuration: a JSON document with "problem", "data" and "task"
// blocks. The grammar is documented in README.md.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hodo/degenerate.hpp"
#include "hodo/model.hpp"

namespace hodo::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemConfig {
  /// matrix | scalar | diag | coriolis2d | coriolis3d | periodic2d | periodic4d
  std::string preset = "matrix";
  Matrix A;
  Vector g;
  /// coriolis2d, and coriolis3d about the z axis.
  double omega = 1.0;
  /// coriolis3d with a general rotation vector.
  std::optional<Vector> omega_vec;
  /// diag
  Vector diag;
  /// scalar
  double a = 0.0;
  /// periodic2d / periodic4d
  double lambda = 1.0;
  double a11 = 0.0;
  double a12 = 1.0;
  /// periodic4d: "block" or "paired"
  std::string variant = "block";
};

struct Range {
  double from = 0.0;
  double to = 0.0;
  int count = 1;

  std::vector<double> values() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct TaskConfig {
  /// solve | blowup | period | compare | coriolis3d
  std::string command = "solve";
  /// coriolis3d only: solve | blowup
  std::string mode = "solve";

  // solve
  std::vector<double> times;
  std::vector<Range> x_grid;

  // blowup
  int grid_points = 101;
  double t_max = 10.0;
  double dt = 1e-2;
  double unbounded_range = 1.0;

  // period and compare
  int samples = 20;
  Interval t_range{0.1, 1.0};
  /// Sampling box for starting points, in the coordinates of the data.
  std::vector<Interval> box;
  double tolerance = 1e-8;
  std::uint64_t seed = 1;
  /// M-grid points per dimension for the blow-up time used to classify samples.
  int blowup_grid = 0;
};

struct RunConfig {
  ProblemConfig problem;
  /// Empty only for tasks that do not need data (period without samples).
  std::optional<InitialData> data;
  TaskConfig task;

  int dim() const;
  ForceSpec spec() const;
  bool degenerate() const;
  /// The basis for rank-deficient problems; data is then in rotated coordinates.
  DegenerateBasis basis() const;
};

/// `command`, when given, replaces task.command before validation.
RunConfig parse_config(const nlohmann::json& j, const std::optional<std::string>& command = std::nullopt);
RunConfig parse_config_text(const std::string& text, const std::optional<std::string>& command = std::nullopt);
RunConfig load_config(const std::string& path, const std::optional<std::string>& command = std::nullopt);

/// Canonical form: every field written explicitly, keys sorted.
nlohmann::json to_json(const RunConfig& c);
std::string canonical_text(const RunConfig& c);

/// 64-bit FNV-1a of canonical_text, as 16 hex digits.
std::string config_hash(const RunConfig& c);

}  // namespace hodo::cli
