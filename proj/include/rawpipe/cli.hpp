#pragma once

namespace rawpipe::cli {

/// Dispatches the rawpipe command line. Returns the process exit code:
/// 0 success, 1 usage error, 2 data/format error, 3 numeric error.
int run(int argc, const char* const* argv);

} // namespace rawpipe::cli
