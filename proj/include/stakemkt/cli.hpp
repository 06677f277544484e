#pragma once

namespace stakemkt {

// Full command-line surface (solve/compare/sweep/calibrate/dynamics/regress/
// intermediary). Linked into the stakemkt binary and called directly by the
// CLI tests.
int run_cli(int argc, const char* const* argv);

}  // namespace stakemkt
