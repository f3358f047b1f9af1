#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace kernelcurves {

// One parsed command-line run: the subcommand plus its fully resolved
// parameter record (defaults, then --config file values, then explicit
// flags — flags win). The record is what every output sidecar echoes.
struct RunConfig {
  std::string command;
  nlohmann::json params;
};

// Sample-size grids: "a:b:logN" (N geometric points, endpoints inclusive),
// "a:b:linN", or a plain comma list / single value.
std::vector<double> parse_grid(const std::string& text);

// Teacher/target syntax: "kernel:pprime=300" or "pure:k=2,pprime=50".
struct TargetSpec {
  std::string kind;
  double p_prime = 0.0;
  int degree = 0;
};
TargetSpec parse_target(const std::string& text);

// args excludes the program name. Throws std::invalid_argument on usage
// errors (unknown flags or config keys, missing required parameters, bad
// value syntax). "--help" yields command = "help" after printing.
RunConfig parse_args(const std::vector<std::string>& args);

// Runs the command, writes its declared outputs (each CSV with a JSON
// sidecar carrying the resolved config), prints a one-line summary, and
// returns 0. Failures are reported by exception.
int execute(const RunConfig& config);

// Full entry point: 0 on success, 1 on usage errors, 2 on runtime failures.
int run_cli(const std::vector<std::string>& args);

}  // namespace kernelcurves
