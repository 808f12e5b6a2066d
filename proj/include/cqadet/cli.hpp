#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cqadet {

// Subcommands: gen, train, replay, score, diag, serve, export-report.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 invariant violation.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace cqadet
