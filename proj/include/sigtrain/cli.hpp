#pragma once

namespace sigtrain {

// Full command-line driver. Returns the process exit code: 0 on success,
// 2 when the invocation or configuration is invalid, 3 when some work items
// failed but output was still written, 1 on any other failure.
int cli_main(int argc, const char* const* argv);

}  // namespace sigtrain
