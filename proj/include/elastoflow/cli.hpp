#pragma once

#include <ostream>

namespace elastoflow::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntimeError = 1,
  kConfigError = 2,
  kPinchOff = 3,
  kSolverFailure = 4,
};

/// Entry point of the elastoflow executable. Subcommands: simulate, flat-scan,
/// second-variation, energy-identity.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace elastoflow::cli
