#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spi {

/// Interned identifier. Cheap to copy and compare; the text lives in a
/// process-wide table.
class Symbol {
public:
    Symbol() = default;
    explicit Symbol(std::string_view text);

    const std::string& str() const;
    std::uint32_t id() const { return id_; }
    bool empty() const { return id_ == 0; }

    friend bool operator==(Symbol a, Symbol b) { return a.id_ == b.id_; }
    friend auto operator<=>(Symbol a, Symbol b) { return a.id_ <=> b.id_; }

private:
    std::uint32_t id_ = 0;
};

enum class NonceSort : std::uint8_t { Protocol, Adversary };

enum class TermKind : std::uint8_t {
    Variable,  // pi-variable (process syntax, recipes use x1..xn handles)
    Name,      // pi-name, resolved to a nonce at run time
    Nonce,     // run-time nonce, protocol or adversary
    App,       // function application (constructor or destructor)
    AdvVar,    // symbolic adversary input used by the explorer
};

/// Grammar sort of a symbolic adversary input.
enum class VarSort : std::uint8_t { Any, Nonce, Str };

/// Pseudo head symbol standing for "some nonce" in head constraints.
inline constexpr std::uint32_t kNonceHead = 0xffffffffu;

/// Constraint data of an adversary variable. The value of the variable is
/// some term the adversary could build from the first `snapshot` knowledge
/// entries with at most `budget` constructor layers on top of atoms.
struct AdvVarInfo {
    std::uint32_t id = 0;
    std::uint32_t snapshot = 0;
    std::uint32_t budget = 0;
    VarSort sort = VarSort::Any;
    bool alias_ok = true;                   // may equal a variable atom of K
    std::vector<std::uint32_t> no_heads;    // sorted; head symbol ids (or kNonceHead)
    std::vector<std::uint32_t> no_nonces;   // sorted term ids of excluded nonces

    friend bool operator==(const AdvVarInfo&, const AdvVarInfo&) = default;
};

/// Hash-consed immutable term. Equality is handle equality.
class Term {
public:
    Term() = default;

    static Term var(Symbol name);
    static Term name(Symbol name);
    static Term nonce(std::uint64_t id, NonceSort sort, Symbol hint = {});
    static Term app(Symbol f, std::vector<Term> args);
    static Term constant(Symbol f) { return app(f, {}); }
    static Term adv_var(AdvVarInfo info);

    bool valid() const { return id_ != 0; }
    std::uint32_t id() const { return id_; }

    TermKind kind() const;
    bool is_var() const { return kind() == TermKind::Variable; }
    bool is_name() const { return kind() == TermKind::Name; }
    bool is_nonce() const { return kind() == TermKind::Nonce; }
    bool is_app() const { return kind() == TermKind::App; }
    bool is_adv_var() const { return kind() == TermKind::AdvVar; }

    /// Function symbol for App, variable/name symbol for Variable/Name,
    /// hint for Nonce.
    Symbol symbol() const;
    std::span<const Term> args() const;
    std::size_t arity() const { return args().size(); }
    Term arg(std::size_t i) const { return args()[i]; }

    std::uint64_t nonce_id() const;
    NonceSort nonce_sort() const;
    const AdvVarInfo& adv_info() const;

    std::uint32_t depth() const;
    std::uint32_t size() const;
    /// No Variable and no Name anywhere inside.
    bool ground() const;
    bool has_adv_vars() const;

    std::string str() const;

    friend bool operator==(Term a, Term b) { return a.id_ == b.id_; }
    friend auto operator<=>(Term a, Term b) { return a.id_ <=> b.id_; }

private:
    explicit Term(std::uint32_t id) : id_(id) {}
    friend class TermTable;
    std::uint32_t id_ = 0;
};

struct TermHash {
    std::size_t operator()(Term t) const noexcept { return std::hash<std::uint32_t>{}(t.id()); }
};

/// Head identifier used by constraint checks: symbol id for App, kNonceHead
/// for nonces, 0 otherwise.
std::uint32_t head_of(Term t);

/// Structural subterm test (t occurs in u, including u itself).
bool occurs_in(Term t, Term u);

/// Collects subterms in post-order, deduplicated.
void collect_subterms(Term t, std::vector<Term>& out);

using Substitution = std::map<Term, Term>;

/// Replaces every occurrence of a key (any kind of leaf or subterm) by its
/// image. Keys are matched structurally by handle.
Term substitute(Term t, const Substitution& sigma);

/// Free pi-variables / names of a term (sorted, unique).
std::vector<Symbol> term_vars(Term t);
std::vector<Symbol> term_names(Term t);

/// Source of fresh nonces. Values are plain counters; ids never repeat for
/// one source.
class NonceSource {
public:
    NonceSource() = default;
    explicit NonceSource(std::uint64_t next) : next_(next) {}
    Term fresh(NonceSort sort, Symbol hint = {});
    std::uint64_t peek() const { return next_; }

    friend bool operator==(const NonceSource&, const NonceSource&) = default;

private:
    std::uint64_t next_ = 1;
};

/// Free-standing helper for the common case.
Term fresh_nonce(NonceSource& src, NonceSort sort);

}  // namespace spi

template <>
struct std::hash<spi::Term> {
    std::size_t operator()(spi::Term t) const noexcept { return t.id(); }
};

template <>
struct std::hash<spi::Symbol> {
    std::size_t operator()(spi::Symbol s) const noexcept { return s.id(); }
};
