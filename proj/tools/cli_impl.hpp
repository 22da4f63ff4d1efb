#pragma once

#include <string>
#include <vector>

// Batch CLI: dtn, paralin, stokes, conjugate, divisors, suite.
// Returns the process exit status.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);
