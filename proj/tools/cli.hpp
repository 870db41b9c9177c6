#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gangtrack/errors.hpp"
#include "gangtrack/geo.hpp"
#include "gangtrack/geo_prior.hpp"
#include "gangtrack/inference.hpp"
#include "gangtrack/simgen.hpp"

namespace gangtrack::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kBadConfig = 2,
  kTooFewObservations = 3,
  kMissingInput = 4,
  kNothingToAssess = 5,
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Everything a command needs; relative paths are resolved against the
/// directory of the config file.
struct RunConfig {
  std::filesystem::path observations;
  std::filesystem::path camps;
  std::filesystem::path forest;
  std::filesystem::path intel;
  std::filesystem::path output_dir;
  std::optional<BoundingBox> bbox;
  double cell_km = 2.5;
  double ref_lat = 0.0;
  PfConfig pf;
  PriorConfig prior;
  int min_history = 3;
  std::uint64_t seed = 1;
  SimConfig sim;
  std::vector<std::uint64_t> study_seeds;
  std::optional<double> force_pn;

  KmScale scale() const { return KmScale::at_latitude(ref_lat); }
};

/// Throws ConfigError for unreadable, malformed or invalid configs.
RunConfig load_config(const std::filesystem::path& file);

/// Entry point shared by the executable and the tests; returns the exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace gangtrack::cli
