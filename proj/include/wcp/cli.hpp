#pragma once

namespace wcp {

// Command-line entry point. Returns the process exit code: 0 on success,
// 1 on a domain error, 2 on a usage error.
int cli_dispatch(int argc, const char* const* argv);

}  // namespace wcp
