#pragma once

namespace cgarom {

// Full command-line front end. Returns the process exit code:
// 0 success, 2 usage, 3 I/O, 4 numerical abort.
int run_cli(int argc, char** argv);

} // namespace cgarom
