#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcom/harness.hpp"
#include "json.hpp"

namespace bcom::cli {

inline constexpr int kSchemaVersion = 1;

enum class Mode { kBcom, kControl, kSweep, kCheck };
enum class Family { kBcom, kControl };

std::string to_string(Mode mode);
std::string to_string(Family family);

struct ExperimentConfig {
  Mode mode = Mode::kCheck;
  std::uint64_t seed = 0;
  // Single-run horizon.
  std::int64_t horizon = 4096;
  // Sweep grid.
  std::vector<std::int64_t> horizons{1024, 2048, 4096, 8192};
  int seeds = 5;
  int jobs = 1;
  Family family = Family::kBcom;
  std::vector<Arm> arms{Arm::kNewton};
  BcomExperimentConfig bcom;
  ControlExperimentConfig control;

  // Fully defaulted document and the SHA-256 of its compact dump. The thread
  // count is left out of the hash since it cannot change any output.
  nlohmann::json canonical;
  std::string hash;
};

// Validates a document against the version-1 schema and fills defaults.
// Throws ConfigError naming the offending field path, e.g.
// "control.system.gamma".
ExperimentConfig parse_config(const nlohmann::json& doc);
// Reads and parses a file. Unreadable files and JSON syntax errors are
// reported as ConfigError too.
ExperimentConfig load_config(const std::string& path);

nlohmann::json to_json(const ExperimentConfig& config);
// Recomputes canonical and hash after fields were changed in code (e.g. CLI
// overrides).
void rehash(ExperimentConfig& config);
std::string sha256_hex(const std::string& data);

}  // namespace bcom::cli
