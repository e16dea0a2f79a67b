#pragma once

#include <iosfwd>

#include <json.hpp>

#include "enarkit/bench.hpp"
#include "enarkit/error.hpp"

namespace enarkit::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

/// Entry point behind the `enarkit` binary; errors go to `err` as one JSON line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Exit code for a library error.
int exit_code_for(ErrorCode code);

/// Grid configuration from JSON; unknown keys are rejected.
bench::ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const bench::ExperimentConfig& config);

lsm::LsmConfig lsm_config_from_json(const nlohmann::json& j);

}  // namespace enarkit::cli
