#pragma once

#include <ostream>

namespace snapkit::cli {

/// Entry point of the command-line tool. Exit codes: 0 success, 1 validation
/// failure, 2 precondition failure, 3 numeric failure.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace snapkit::cli
