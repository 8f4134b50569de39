#pragma once

#include <string>
#include <vector>

#include "hklab/cli/config.hpp"

namespace hklab::cli {

struct SuiteOutcome {
  Json scalars;
  bool passed = true;
};

const std::vector<std::string>& suite_names();

/// Runs a named property suite on the configured lattice with the config seed.
SuiteOutcome run_suite(const std::string& name, Config& config);

}  // namespace hklab::cli
