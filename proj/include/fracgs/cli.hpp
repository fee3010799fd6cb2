#pragma once

namespace fracgs::cli {

enum ExitCode : int { ok = 0, check_failure = 1, usage_error = 2, solver_failure = 3 };

/// Entry point of the `fracgs` tool: solve, continue, normalized, spectrum,
/// homotopy, rescale, verify, report.
int run(int argc, const char* const* argv);

}  // namespace fracgs::cli
