#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "bcom_cli/config.hpp"

namespace bcom::cli {

enum ExitCode { kExitOk = 0, kExitCheckFailed = 1, kExitConfigError = 2, kExitRuntimeError = 3 };

// File name -> body, written under the output directory.
using Artifacts = std::map<std::string, std::string>;

Artifacts bcom_artifacts(const ExperimentConfig& config, const std::optional<std::string>& timestamp = std::nullopt);
Artifacts control_artifacts(const ExperimentConfig& config, const std::optional<std::string>& timestamp = std::nullopt);
Artifacts sweep_artifacts(const ExperimentConfig& config, const std::optional<std::string>& timestamp = std::nullopt,
                          SweepResult* result = nullptr);

SweepResult run_sweep(const ExperimentConfig& config);

void write_artifacts(const std::string& directory, const Artifacts& files);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bcom::cli
