#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "statepi/explorer.hpp"

namespace spi {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolated = 1;   // property violated, or diagnostics reported
inline constexpr int kExitUsage = 2;      // bad flags, unreadable input, malformed script

struct RunConfig {
    std::string subcommand;
    std::string input;
    std::optional<Dialect> dialect;   // from the extension when unset
    Bounds bounds;
    /// absence:<Event>, exclusive:<Event> or secret:<term> (StatVerif only).
    std::string property = "exclusive:Exclusive";
    std::string witness_out;
    std::string trace_out;
    std::string script;
    std::uint64_t seed = 0;
    int k = 64;
    bool strict_grammar = false;
    bool greedy_match = false;
    /// "sapic", "statverif" or empty for the dialect's default rule set.
    std::string rules;
    bool process_only = false;
    bool drop_unlock = false;
    std::size_t max_configs = 200;
};

/// Parses one line of an action script, in the syntax of Action::str:
///   schedule(i) | out(i, R) | in(i, R, R) | comm(i, j)
/// where R is a recipe over handles x_1.., adversary nonces $N, model
/// function symbols, or `-` for the default channel. Throws UsageError.
Action parse_action(const SymbolicModel& m, const std::string& line);

/// Whole script; blank lines and lines starting with '#' are skipped.
std::vector<Action> parse_script(const SymbolicModel& m, const std::string& text);

/// Entry point behind the executable. Machine output (JSON lines or source
/// text) goes to `out`, a human summary to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spi
