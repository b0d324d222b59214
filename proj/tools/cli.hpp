#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace promptforge {

// full command driver used by main() and the in-process CLI tests; returns
// the process exit code (0 ok, 1 usage/validation, 2 runtime failure)
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err);

}  // namespace promptforge
