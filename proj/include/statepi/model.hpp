#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "statepi/term.hpp"

namespace spi {

enum class FuncKind : std::uint8_t { Constructor, Destructor };

struct FuncSymbol {
    Symbol name;
    std::size_t arity = 0;
    FuncKind kind = FuncKind::Constructor;
    bool quoted = false;  // written 'c' in the SAPIC dialect
};

/// head(lhs...) -> rhs, patterns use Term::var leaves.
struct DestructorRule {
    Symbol head;
    std::vector<Term> lhs;
    Term rhs;

    std::string str() const;
};

/// Misuse of the API (arity mismatch, unbound variable, unknown symbol).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a comparison depends on the unknown structure of a symbolic
/// adversary input. The explorer catches it, refines the variable and retries.
struct Undecided {
    enum class Question : std::uint8_t {
        Head,      // does `var` have head `head`?
        NonceEq,   // is `var` equal to nonce `other`?
        Split,     // var against another adversary variable: full case split
    };
    Term var;
    Question question = Question::Head;
    std::uint32_t head = 0;
    Term other;
};

class SymbolicModel {
public:
    SymbolicModel();

    /// Public-key encryption and signatures, with garbage constructors and
    /// strings. `sapic_mode` drops the three rules that are not subterm
    /// convergent.
    static SymbolicModel pkenc_sig(bool sapic_mode = false);

    void add_constructor(Symbol name, std::size_t arity, bool quoted = false);
    void add_destructor(Symbol name, std::size_t arity);
    /// Validates the rule (known head, arities, rhs vars within lhs vars,
    /// determinism against existing rules).
    void add_rule(DestructorRule rule);

    const FuncSymbol* find(Symbol name) const;
    bool is_constructor(Symbol name) const;
    bool is_destructor(Symbol name) const;
    const std::vector<FuncSymbol>& symbols() const { return order_; }

    /// Rules active under the current mode.
    const std::vector<DestructorRule>& rules() const { return active_; }
    std::vector<const DestructorRule*> rules_for(Symbol head) const;
    /// Rules excluded because the model is in SAPIC mode.
    const std::vector<DestructorRule>& filtered_rules() const { return filtered_; }

    bool strict_grammar() const { return strict_; }
    void set_strict_grammar(bool on) { strict_ = on; }
    bool sapic_mode() const { return sapic_mode_; }
    /// Re-partitions rules into active and filtered.
    void set_sapic_mode(bool on);

    /// True iff every active rule's rhs is a variable or subterm of its lhs.
    bool subterm_convergent() const;

private:
    void repartition();

    std::vector<FuncSymbol> order_;
    std::map<Symbol, std::size_t> index_;
    std::vector<DestructorRule> all_;
    std::vector<DestructorRule> active_;
    std::vector<DestructorRule> filtered_;
    std::map<Symbol, std::vector<std::size_t>> by_head_;
    bool strict_ = false;
    bool sapic_mode_ = false;
};

/// Rule rhs is neither a variable nor a subterm of some lhs argument.
bool rule_is_subterm(const DestructorRule& r);

/// Evaluates destructor `d` on destructor-free args. std::nullopt is bottom.
/// Throws UsageError on arity mismatch, Undecided on symbolic inputs whose
/// shape decides the outcome.
std::optional<Term> eval_destructor(const SymbolicModel& m, Symbol d, std::span<const Term> args);

/// Innermost evaluation of a ground term that may contain destructors.
std::optional<Term> eval_term(const SymbolicModel& m, Term t);

/// Equality modulo the rule theory: `equal` defined on the pair.
bool terms_equal(const SymbolicModel& m, Term t, Term u);

/// Syntactic equality aware of adversary variables: decides from the
/// variables' constraints when possible, else throws Undecided.
bool structurally_equal(Term t, Term u);

/// Message-type grammar of the pkenc-sig model (strict mode).
bool in_message_grammar(Term t);

/// Pattern match of a rule pattern against a destructor-free term.
bool match_pattern(Term pattern, Term t, Substitution& binding);

}  // namespace spi
