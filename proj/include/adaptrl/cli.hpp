#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adaptrl {

// Entry point of the `adaptrl` command line tool. args excludes the program
// name. Returns 0 on success, 1 on validation errors (bad arguments, config
// or input files) and 2 on runtime errors.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace adaptrl
