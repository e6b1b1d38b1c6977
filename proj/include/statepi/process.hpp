#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "statepi/term.hpp"

namespace spi {

enum class Dialect : std::uint8_t { Sapic, StatVerif };

struct SrcPos {
    int line = 0;
    int col = 0;
};

struct Fact {
    Symbol sym;
    bool persistent = false;
    std::vector<Term> args;

    friend bool operator==(const Fact&, const Fact&) = default;
};

/// Event label; also used for msr event annotations.
struct EventLabel {
    Symbol sym;
    std::vector<Term> args;

    friend bool operator==(const EventLabel&, const EventLabel&) = default;
};

enum class PKind : std::uint8_t {
    Nil,
    Par,
    Repl,
    New,
    Out,
    In,
    Let,
    Event,
    Insert,
    Delete,
    Lookup,
    Lock,
    Unlock,
    Msr,
    SvInit,
    SvAssign,
    SvRead,
    SvLock,
    SvUnlock,
};

const char* kind_name(PKind k);

struct Process;
using PPtr = std::shared_ptr<const Process>;

/// Process AST node. Field use by kind:
///   New      bound = name, p
///   Out      t1 = channel (invalid: default public channel), t2 = message, p
///   In       t1 = channel (invalid: default), bound = variable, p;
///            t2 = pattern term when the input does not bind a plain variable
///   Let      bound = variable (empty for `if`), t1 = term, p, q; cond marks `if M = N`
///   Event    events[0], p
///   Insert   t1 = key, t2 = value, p
///   Delete / Lock / Unlock   t1 = key, p
///   Lookup   t1 = key, bound = variable, p, q
///   Msr      lhs, events, rhs, bound_vars = variables first bound by lhs, p
///   SvInit   t1 = cell, t2 = value
///   SvAssign t1 = cell, t2 = value, p
///   SvRead   t1 = cell, bound = variable, p
///   SvLock / SvUnlock  p
struct Process {
    PKind kind = PKind::Nil;
    Symbol bound;
    Term t1, t2;
    PPtr p, q;
    bool has_else = false;
    bool cond = false;
    std::vector<Fact> lhs, rhs;
    std::vector<EventLabel> events;
    std::vector<Symbol> bound_vars;
    SrcPos pos;

    /// Free names and variables (sorted symbols), computed on first use.
    const std::vector<Symbol>& free_symbols() const;
    /// Construction-order id; deterministic for a given input, used as an
    /// ordering key.
    std::uint32_t uid = 0;

private:
    mutable std::shared_ptr<const std::vector<Symbol>> free_cache_;
};

// Constructors.
PPtr make_nil();
PPtr make_par(PPtr a, PPtr b);
PPtr make_repl(PPtr a);
PPtr make_new(Symbol n, PPtr p);
PPtr make_out(Term chan, Term msg, PPtr p);
PPtr make_in(Term chan, Symbol x, PPtr p);
PPtr make_let(Symbol x, Term t, PPtr p, PPtr q, bool has_else);
PPtr make_if(Term a, Term b, PPtr p, PPtr q, bool has_else);
PPtr make_event(EventLabel e, PPtr p);
PPtr make_insert(Term k, Term v, PPtr p);
PPtr make_delete(Term k, PPtr p);
PPtr make_lookup(Term k, Symbol x, PPtr p, PPtr q, bool has_else);
PPtr make_lock(Term k, PPtr p);
PPtr make_unlock(Term k, PPtr p);
/// `bound` lists the variables the left side binds; by default every
/// variable of the left side.
PPtr make_msr(std::vector<Fact> l, std::vector<EventLabel> e, std::vector<Fact> r, PPtr p,
              std::optional<std::vector<Symbol>> bound = std::nullopt);
PPtr make_sv_init(Term cell, Term v);
PPtr make_sv_assign(Term cell, Term v, PPtr p);
PPtr make_sv_read(Term cell, Symbol x, PPtr p);
PPtr make_sv_lock(PPtr p);
PPtr make_sv_unlock(PPtr p);

/// Copy of a node with different children (and same other fields).
PPtr with_children(const Process& n, PPtr p, PPtr q);

/// Structural equality (ignores positions and uids).
bool same_process(const PPtr& a, const PPtr& b);

std::vector<Symbol> free_names(const PPtr& p);
std::vector<Symbol> free_vars(const PPtr& p);

/// Renames binders so that all are pairwise distinct and distinct from free
/// symbols. Binders below a replication are left for unfolding time.
PPtr alpha_rename(const PPtr& p);

/// Renames free occurrences of symbol `from` to `to` (names and variables).
PPtr rename_free(const PPtr& p, Symbol from, Symbol to);

/// Event symbols raised anywhere in the process.
std::vector<Symbol> event_symbols(const PPtr& p);

/// True for the StatVerif-only node kinds.
bool is_statverif_kind(PKind k);
/// True for the SAPIC-only node kinds.
bool is_sapic_state_kind(PKind k);

}  // namespace spi
