#pragma once

#include <optional>
#include <string>
#include <vector>

#include "statepi/deduction.hpp"
#include "statepi/model.hpp"
#include "statepi/process.hpp"

namespace spi {

/// Values of the free names and variables of one process node, sorted by
/// symbol. Restricted to the node's free symbols so that equal residual
/// processes compare equal.
using Bindings = std::vector<std::pair<Symbol, Term>>;

const Term* lookup_binding(const Bindings& b, Symbol s);

struct Closure {
    PPtr node;
    Bindings env;

    friend bool operator==(const Closure& a, const Closure& b) {
        return a.node == b.node && a.env == b.env;
    }
};

/// Closure of `node` under `env` plus `extra`, keeping only what the node uses.
Closure close(const PPtr& node, const Bindings& env, std::initializer_list<std::pair<Symbol, Term>> extra = {});

/// Replaces names and variables of a process term by their values.
/// Throws UsageError for an unbound symbol.
Term instantiate(Term t, const Bindings& env);

/// Instantiates and evaluates; std::nullopt is bottom.
std::optional<Term> eval_in(const SymbolicModel& m, Term t, const Bindings& env);

/// Components of a closure once parallel composition is flattened and nil
/// dropped, in left-to-right order.
void flatten(const Closure& c, std::vector<Closure>& out);

/// The requested action has no successor in this configuration.
class NotEnabled : public UsageError {
public:
    using UsageError::UsageError;
};

/// Checks that a recipe only uses handles below `knowledge_size`, adversary
/// nonces, adversary variables and function symbols.
bool valid_recipe(Term recipe, std::size_t knowledge_size);

/// eval_in, with bottom reported as NotEnabled naming `what`.
Term must_eval(const SymbolicModel& m, Term t, const Bindings& env, const char* what);
EventLabel eval_label(const SymbolicModel& m, const EventLabel& e, const Bindings& env);

/// Throws NotEnabled unless `recipe` yields the channel of the input or
/// output at `c` (an invalid recipe stands for the default channel).
void check_channel(const SymbolicModel& m, const Knowledge& k, const Closure& c, Term recipe);
/// Recipe for the channel of the input or output at `c`; `ok` is false when
/// the adversary cannot derive it. Default channel: ok with an invalid term.
std::optional<Term> adversary_channel(const SymbolicModel& m, const Knowledge& k, const Closure& c, bool& ok);
/// Channels of an output and an input agree (both default, or equal terms).
bool same_channel(const SymbolicModel& m, const Closure& out, const Closure& in);

struct Action {
    enum class Kind : std::uint8_t { Schedule, AdvInput, AdvOutput, Comm };
    Kind kind = Kind::Schedule;
    std::size_t proc = 0;   // acting process; the sender for Comm
    std::size_t other = 0;  // receiver for Comm
    Term channel;           // channel recipe; invalid for the default public channel
    Term payload;           // payload recipe for AdvInput

    static Action schedule(std::size_t i) { return {Kind::Schedule, i, 0, {}, {}}; }
    static Action input(std::size_t i, Term channel, Term payload) { return {Kind::AdvInput, i, 0, channel, payload}; }
    static Action output(std::size_t i, Term channel) { return {Kind::AdvOutput, i, 0, channel, {}}; }
    static Action comm(std::size_t from, std::size_t to) { return {Kind::Comm, from, to, {}, {}}; }

    std::string str() const;
    friend bool operator==(const Action&, const Action&) = default;
};

enum class StepKind : std::uint8_t { Silent, Event, Know };

struct TraceStep {
    StepKind kind = StepKind::Silent;
    Action action;
    std::vector<EventLabel> events;  // ground
    Term know;                       // message added to the knowledge
};

struct Trace {
    std::vector<TraceStep> steps;
    Knowledge knowledge;
    bool truncated = false;

    std::vector<EventLabel> events() const;
};

/// JSON lines, one per step (one per event when a step raises several):
/// {"step":i,"kind":"event|know|silent","action":"...","event":{"symbol":..,"args":[..]}}
std::string trace_json(const SymbolicModel& m, const Trace& t, Dialect d);

/// Bindings rewritten by a substitution of adversary variables.
Bindings substitute_bindings(const Bindings& b, const Substitution& s);
EventLabel substitute_label(const EventLabel& e, const Substitution& s);

}  // namespace spi
