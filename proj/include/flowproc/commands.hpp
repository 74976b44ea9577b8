#pragma once

#include <string>

#include "flowproc/config.hpp"

namespace flowproc {

// Runs the named pipeline and writes its reports into cfg.output.dir.
// Validation happens before any file is touched, so a bad config leaves
// no output behind. verify-all writes checks.csv and summary.json first
// and then throws CheckFailure when a built-in check missed its band.
void run_experiment(const std::string& command, const ExperimentConfig& cfg);

}  // namespace flowproc
