#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "statepi/runtime.hpp"

namespace spi {

/// SAPIC semantic configuration: restricted nonces, functional state,
/// multiset state, processes, knowledge and held locks.
struct SapicConfig {
    std::vector<Term> restricted;
    std::vector<std::pair<Term, Term>> cells;  // key, value
    std::vector<Fact> msstate;                 // ground, insertion order
    std::vector<Closure> procs;                // no Nil or Par at top level
    Knowledge knowledge;
    std::vector<Term> locks;
    std::vector<TraceStep> raised;
    std::map<std::uint32_t, std::uint32_t> unfolds;  // replication site uid -> copies made
    NonceSource nonces;
    Bindings free_names;  // free names of the initial process and their nonces
};

struct EngineOptions {
    /// First-fit matching for msr left sides instead of full backtracking.
    bool greedy_match = false;
};

/// Start configuration: free names become fresh protocol nonces that are
/// published in the knowledge, in symbol-name order.
SapicConfig initial_config(const PPtr& p0);

/// Every action with a successor, in a fixed order: per process (schedule,
/// adversary output, adversary input with an empty payload placeholder),
/// then communications sender-major.
std::vector<Action> enabled_actions(const SymbolicModel& m, const SapicConfig& cfg,
                                    const EngineOptions& opt = {});

/// One reduction. Throws UsageError when the action is not enabled.
std::pair<SapicConfig, TraceStep> step(const SymbolicModel& m, const SapicConfig& cfg, const Action& a,
                                       const EngineOptions& opt = {});

/// Smallest index whose element equals t modulo the rules.
std::optional<std::size_t> f_mem(const SymbolicModel& m, std::span<const Term> set, Term t);
inline std::optional<std::size_t> f_mem(const SymbolicModel& m, const std::vector<Term>& set, Term t) {
    return f_mem(m, std::span<const Term>(set), t);
}

struct MatchResult {
    Substitution tau;                  // pattern variable -> ground term
    std::vector<std::size_t> consumed;  // msstate indices of the matched linear facts
};

/// Grounds the pattern variables of L (already instantiated otherwise)
/// against the multiset state. Linear facts are matched first, each consuming
/// a distinct state fact; persistent facts are then only required present.
/// Throws UsageError if a pattern variable sits below a function symbol.
std::optional<MatchResult> f_match(const SymbolicModel& m, const std::vector<Fact>& lhs,
                                   const std::vector<Fact>& msstate, bool greedy = false);

/// Folds step over a script from the start configuration.
/// Throws UsageError naming the first non-enabled position.
Trace run_trace(const SymbolicModel& m, const PPtr& p0, const std::vector<Action>& script,
                const EngineOptions& opt = {});

/// Configuration after replaying a script; used by tests and the explorer.
SapicConfig replay(const SymbolicModel& m, const PPtr& p0, const std::vector<Action>& script,
                   const EngineOptions& opt = {});

/// Applies a substitution of adversary variables to every term of the
/// configuration.
SapicConfig substitute_config(const SapicConfig& cfg, const Substitution& s);

}  // namespace spi
