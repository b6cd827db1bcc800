#pragma once

#include <iosfwd>

namespace qii {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitRejected = 3,
};

// Entry point for the `qii` tool: merge | query | select-views | bench |
// repl | project | gen-data. Every invocation appends a web record to the log.
int run_cli(int argc, const char *const *argv, std::istream &in, std::ostream &out,
            std::ostream &err);

}  // namespace qii
