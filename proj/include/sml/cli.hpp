#pragma once

namespace sml {

// Subcommands build, check, riesz, multiplier, biharmonic, gasket, report.
// Returns 0 on success, 2 when a checked condition fails, 1 on errors and usage problems.
int cli_main(int argc, const char* const* argv);

}  // namespace sml
