#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhl/simulate.hpp"

namespace rhl {

struct RunConfig {
  std::uint64_t seed = 20240611;
  int threads = 1;

  SimulationConfig simulate;

  struct Fit {
    std::vector<std::string> x;
    std::vector<std::string> z{std::string(kEventCountColumn)};
    double tol = 1e-8;
    int max_iter = 50;
  } fit;

  struct Mfpca {
    double pve1 = 0.99;
    double pve2 = 0.99;
  } mfpca;

  struct Predict {
    int K = 2;
    int L = 1;
    double threshold = 0.5;
    bool compare = true;
    double holdout_fraction = 0.0;
    int students_per_unit = 25;
    double score_effect = 0.8;
  } predict;

  struct Io {
    std::filesystem::path out = "out";
    std::optional<std::filesystem::path> events;
    std::optional<std::filesystem::path> compensators;
    std::optional<std::filesystem::path> scores;
    std::optional<std::filesystem::path> students;
    std::map<std::string, std::string> columns;
    int grid_size = 1001;
    double t0 = 0.0;
    double t1 = 1.0;
  } io;

  /// Copies seed and grid size into the simulation section and checks ranges.
  void resolve();
};

/// Parses a TOML run configuration. Unknown sections or keys, wrong types
/// and out-of-range values raise ConfigError. Relative paths are taken
/// relative to the file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::string_view text, const std::filesystem::path& base = {});

nlohmann::json to_json(const RunConfig& config);

/// Each command writes into config.io.out and reads its inputs from the
/// configured paths, falling back to the previous stage's outputs there.
void cmd_simulate(const RunConfig& config);
void cmd_fit(const RunConfig& config);
void cmd_decompose(const RunConfig& config);
void cmd_predict(const RunConfig& config);
void cmd_pipeline(const RunConfig& config);

/// Full command line entry point. Returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace rhl
