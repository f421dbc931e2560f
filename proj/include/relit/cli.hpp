// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace relit {

// Runs one subcommand (relight, estimate-env, refine, mesh, background,
// propagate, augment, degrade, texture, metrics) and returns the process
// exit status: 0 = success, 1 = validation error, 2 = I/O error.
//
// A manifest.json describing the run (resolved parameters, inputs, outputs,
// wall clock, status, warnings) is written atomically next to the primary
// output on success and on failure. `--config <file>` supplies defaults as
// "key = value" lines; explicit flags override them.
//
// `args` mirrors main(): args[0] is the program name.
int dispatch(const std::vector<std::string> &args);
int dispatch(int argc, const char *const argv[]);

}  // namespace relit
