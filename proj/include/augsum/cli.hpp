#pragma once
// The `augsum` command-line tool: one subcommand per pipeline stage, driven
// by a JSON experiment config whose fields the flags override.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "augsum/heads.hpp"
#include "augsum/train.hpp"

namespace augsum {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

/// Parses argv (argv[0] is the program name) and runs one subcommand.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Gradient check of the whole scoring pipeline on a small simulated-SD
/// document: idf + confidence in concat_project mode, learned sentence
/// positions, a one-layer d = 8 encoder and the given head under BCE.
GradCheckReport pipeline_grad_check(HeadKind head, std::uint64_t seed,
                                    const GradCheckOptions& options = {},
                                    double init_stddev = 0.3);

/// Orders report rows: baselines, then the result-table grid (plain,
/// positional, confidence, IDF, confidence + IDF; SC, IT, RNN within each),
/// then anything else by name.
std::vector<std::string> canonical_row_order(std::span<const std::string> systems);

}  // namespace augsum
