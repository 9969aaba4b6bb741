#pragma once

// Command-line dispatch. Exit codes: 0 success, 2 precondition violation in the
// inputs, 1 internal failure, 64 usage error. Every successful run prints a
// one-line run manifest to stderr; primary outputs go to --out / --csv paths
// ("-" = stdout) and are byte-identical for identical arguments and seed.

namespace polyland::cli {

int dispatch(int argc, const char* const* argv);

}  // namespace polyland::cli
