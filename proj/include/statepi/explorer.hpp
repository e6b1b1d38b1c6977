#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "statepi/sapic.hpp"
#include "statepi/statverif.hpp"

namespace spi {

struct Bounds {
    int max_steps = 40;           // scheduling decisions per run; eager steps are free
    int max_repl_unfold = 2;      // copies per replication site
    int max_recipe_depth = 3;     // constructor layers on top of known atoms
    int max_new_adv_nonces = 1;   // adversary nonces per run
};

enum class InputMode : std::uint8_t {
    /// Inputs receive a symbolic value that is refined only when the process
    /// inspects it.
    Lazy,
    /// Inputs branch over every recipe up to the depth bound (small runs only).
    Enumerate,
};

struct ExploreOptions {
    EngineOptions engine;
    InputMode inputs = InputMode::Lazy;
    /// Fire restriction, let, event, public outputs, replication (up to the
    /// bound) and unlock as soon as they are enabled, and cell or lock
    /// actions no other process can interfere with. Sound for properties
    /// that stay violated when more events or knowledge are added.
    bool partial_order = true;
    /// Skip configurations already reached with fewer scheduling decisions.
    bool merge_states = true;
    /// Cap on recipes per input in Enumerate mode.
    std::size_t max_enumerated = 4000;
};

class PropertySpec {
public:
    enum class Kind : std::uint8_t { Absence, NeverBothDerivable, Custom };
    /// Returns true when the trace satisfies the property.
    using Predicate = std::function<bool(const SymbolicModel&, const Trace&)>;

    static PropertySpec absence(Symbol event);
    /// Violated iff some E(t1, t2) was raised and both t1 and t2 are
    /// derivable from the knowledge at the end of the trace.
    static PropertySpec never_both_derivable(Symbol marker);
    static PropertySpec custom(std::string name, Predicate p);

    bool violated_by(const SymbolicModel& m, const Trace& t) const;
    Kind kind() const { return kind_; }
    Symbol event() const { return event_; }
    std::string str() const;

private:
    Kind kind_ = Kind::Absence;
    Symbol event_;
    std::string name_;
    Predicate pred_;
};

struct ExploreStats {
    std::size_t nodes = 0;
    std::size_t merged = 0;
    std::size_t refinements = 0;
    std::size_t leaves = 0;
    std::size_t truncated = 0;         // runs cut by max_steps
    std::size_t rejected_witnesses = 0;
};

struct Verdict {
    bool holds = true;
    std::optional<Trace> witness;   // concrete, replayed with run_trace
    std::vector<Action> script;     // concrete actions of the witness
    ExploreStats stats;
};

/// Streams every maximal run (deadlocked or cut by the bounds). Inputs are
/// symbolic in Lazy mode. The visitor returns false to stop. State merging
/// is never applied here.
void explore(const SymbolicModel& m, const PPtr& p0, const Bounds& b,
             const std::function<bool(const Trace&)>& visit, ExploreOptions opt = {});

/// First counterexample in exploration order, confirmed by replaying a
/// concrete script through run_trace.
Verdict check(const SymbolicModel& m, const PPtr& p0, const Bounds& b, const PropertySpec& prop,
              const ExploreOptions& opt = {});

/// check(secrecy_harness(P0, M), absence(NotSecret)).
Verdict check_secrecy_statverif(SymbolicModel& m, const PPtr& p0, Term secret, const Bounds& b,
                                const ExploreOptions& opt = {});

struct DiffOptions {
    std::size_t max_configs = 200;   // StatVerif configurations explored
    int max_extension = 6;           // SAPIC (and StatVerif) steps per matching search
    int max_repl_unfold = 2;
    std::size_t max_search = 20000;  // configurations per matching search
    EncodeOptions encode;
};

struct DiffEdge {
    std::string direction;   // "forward" (StatVerif step) or "backward" (SAPIC step)
    std::size_t config = 0;  // index of the StatVerif configuration in BFS order
    std::string action;
    std::string label;
    std::string reason;
};

struct DiffReport {
    std::size_t statverif_configs = 0;
    std::size_t sapic_configs = 0;
    std::size_t forward_edges = 0;
    std::size_t backward_edges = 0;
    std::vector<DiffEdge> unmatched;

    bool empty() const { return unmatched.empty(); }
    std::string str() const;
};

/// Bounded check of the two simulation directions between the StatVerif
/// semantics of P0 and the SAPIC semantics of its encoding.
DiffReport differential_statverif(const SymbolicModel& m, const PPtr& p0, const DiffOptions& opt = {});

/// Key identifying a configuration up to process order; ignores the trace.
std::vector<std::uint64_t> config_key(const SapicConfig& cfg);

}  // namespace spi
