#pragma once

// Subcommand drivers behind the `multilink` executable.  Each takes a parsed
// RunConfig, reads/writes artifacts under the configured output directory,
// and throws ConfigError / DataError on invalid input.

#include "multilink/config.hpp"

namespace multilink {

void cmd_simulate(const RunConfig& cfg);
void cmd_compare(const RunConfig& cfg);
void cmd_sample(const RunConfig& cfg);
void cmd_estimate(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_replicate(const RunConfig& cfg);

// Full argument handling: subcommand dispatch, --config/--seed/--out/--workers
// overrides.  Returns the process exit code: 0 success, 1 configuration
// error, 2 data error.
int run_cli(int argc, const char* const* argv);

}  // namespace multilink
