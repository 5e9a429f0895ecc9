#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpct/json_io.hpp"

namespace mpct::cli {

struct RunParams {
  int T = 100;
  Vector x0;
  std::uint64_t seed = 1;
  /// Number of disturbance sequences when a disturbance set is given.
  int runs = 1;
  int threads = 1;
  double tolerance = 1e-3;
};

/// Parsed and validated experiment description. See configs/README.md for
/// the document layout.
struct ExperimentConfig {
  explicit ExperimentConfig(LinearSystem system) : sys(std::move(system)) {}

  std::filesystem::path source;
  LinearSystem sys;
  Polytope Z;
  /// Raw design block; turned into a TrackingDesign by make_tracking_design.
  Json design;
  std::vector<Formulation> formulations;
  SpecOptions options;
  std::optional<ReferenceSchedule> schedule;
  RunParams run;
  std::optional<GridSpec> grid;
  std::filesystem::path output_dir = "out";
};

/// Reads and validates a config file. Relative paths (system file, output
/// directory) resolve against the config's directory. Throws SchemaError
/// on malformed content and std::runtime_error on IO failures.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = ".");

/// Design from the config's design block: DARE gain and cost from (Q, R),
/// optional offset weights and an optional independent terminal gain.
TrackingDesign make_tracking_design(const ExperimentConfig& cfg);

ReferenceSchedule schedule_from_json(const Json& j);

}  // namespace mpct::cli
