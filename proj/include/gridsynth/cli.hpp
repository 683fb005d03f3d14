#pragma once

#include <iosfwd>

namespace gridsynth {

/// Entry point of the `gridsynth` tool. Returns 0 on success, 1 on usage
/// errors (help goes to `err`) and 2 on runtime failures.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gridsynth
