#pragma once

#include <map>
#include <optional>
#include <vector>

#include "statepi/sapic.hpp"

namespace spi {

struct SvProc {
    Closure c;
    bool locked = false;  // the process holds the global lock

    friend bool operator==(const SvProc&, const SvProc&) = default;
};

/// StatVerif configuration. Cells are keyed by restricted cell nonces.
/// A process that terminates while holding the lock stays in `procs` as nil
/// so the lock is never released.
struct StatConfig {
    std::vector<Term> restricted;
    std::vector<std::pair<Term, Term>> cells;
    std::vector<SvProc> procs;
    Knowledge knowledge;
    std::vector<TraceStep> raised;
    std::map<std::uint32_t, std::uint32_t> unfolds;
    NonceSource nonces;
    Bindings free_names;

    bool lock_held() const;
};

/// Free names become published protocol nonces, as for SAPIC.
StatConfig sv_initial_config(const PPtr& p0);

std::vector<Action> sv_enabled_actions(const SymbolicModel& m, const StatConfig& cfg);

/// One reduction; throws NotEnabled when the action has no successor.
std::pair<StatConfig, TraceStep> sv_step(const SymbolicModel& m, const StatConfig& cfg, const Action& a);

StatConfig sv_replay(const SymbolicModel& m, const PPtr& p0, const std::vector<Action>& script);
Trace sv_run_trace(const SymbolicModel& m, const PPtr& p0, const std::vector<Action>& script);

struct EncodeOptions {
    /// Seeded fault: unlock l is never emitted. Used to check that the
    /// simulation tests notice a broken encoder.
    bool drop_unlock = false;
};

/// Translation of StatVerif processes into SAPIC processes. Results are
/// memoized per (node, b) so that encoding a residual process yields the
/// very node the SAPIC engine reaches when it runs the encoding.
class Encoder {
public:
    /// `avoid` holds every symbol of the source process; the lock token and
    /// the fresh lookup variables are chosen outside it.
    Encoder(const PPtr& root, EncodeOptions opt = {});

    /// Throws UsageError for SAPIC-only constructs and for constructs that
    /// have no translation in the given lock state.
    PPtr encode(const PPtr& p, bool b);

    Symbol lock_name() const { return lock_; }
    Term lock_term() const { return Term::name(lock_); }

    /// (ñ, S, ∅, {⌊P_i⌋_{β_i}}, K, {l} or ∅). `token` is the value of the
    /// lock name in the SAPIC configuration.
    SapicConfig encode_config(const StatConfig& o, Term token);

private:
    Symbol fresh(const std::string& base);

    EncodeOptions opt_;
    std::vector<Symbol> taken_;
    Symbol lock_;
    std::map<std::string, Symbol> cell_vars_;
    std::map<std::pair<const Process*, bool>, std::pair<PPtr, PPtr>> memo_;
};

/// ⌊P⌋_b with a fresh lock token.
PPtr encode_process(const PPtr& p, bool b, EncodeOptions opt = {});

/// Adds equal/2 with equal(x, x) -> x when the model lacks it.
void ensure_equal(SymbolicModel& m);

/// ⌊in(attch, x); let y = equal(x, M) in event NotSecret | P0⌋_0.
/// Names of M restricted in P0 (once, outside replication) have their
/// restriction moved to the top so the probe compares against the same
/// value. Throws UsageError when M has variables.
PPtr secrecy_harness(SymbolicModel& m, const PPtr& p0, Term secret, EncodeOptions opt = {});

}  // namespace spi
