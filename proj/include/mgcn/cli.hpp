#pragma once

#include <iostream>

namespace mgcn::cli {

// Entry point for the mgcn command-line tool. Subcommands: train, ablate,
// gradcheck, export, sweep, sbm-gen. Returns 0 on success, 1 on a failed
// check, 2 on usage/config errors, 3 on runtime aborts. All user-facing
// output goes to `out` so tests can capture it.
int run(int argc, const char* const* argv, std::ostream& out = std::cout);

}  // namespace mgcn::cli
