#include "statepi/model.hpp"

#include <algorithm>

namespace spi {

namespace {

const Symbol kEqual("equal");

enum class Tri : std::uint8_t { No, Yes, Maybe };

bool contains(const std::vector<std::uint32_t>& v, std::uint32_t x) {
    return std::binary_search(v.begin(), v.end(), x);
}

// Three-valued syntactic equality. On Maybe, `pending` holds the first
// question that would settle it.
Tri eq3(Term t, Term u, std::optional<Undecided>& pending) {
    if (t == u) return Tri::Yes;
    if (!t.has_adv_vars() && !u.has_adv_vars()) return Tri::No;
    if (u.is_adv_var() && !t.is_adv_var()) std::swap(t, u);
    if (t.is_adv_var()) {
        const AdvVarInfo& x = t.adv_info();
        if (u.is_adv_var()) {
            if (!pending) {
                // split the newer variable; the older one is `other`
                Term newer = x.id > u.adv_info().id ? t : u;
                Term older = newer == t ? u : t;
                pending = Undecided{newer, Undecided::Question::Split, 0, older};
            }
            return Tri::Maybe;
        }
        if (u.is_nonce()) {
            if (contains(x.no_heads, kNonceHead) || contains(x.no_nonces, u.id())) return Tri::No;
            if (!pending) pending = Undecided{t, Undecided::Question::NonceEq, 0, u};
            return Tri::Maybe;
        }
        if (u.is_app()) {
            if (contains(x.no_heads, u.symbol().id())) return Tri::No;
            if (occurs_in(t, u)) return Tri::No;
            if (!pending) pending = Undecided{t, Undecided::Question::Head, u.symbol().id(), {}};
            return Tri::Maybe;
        }
        return Tri::No;
    }
    if (!t.is_app() || !u.is_app() || t.symbol() != u.symbol() || t.arity() != u.arity())
        return Tri::No;
    // settle concrete mismatches first so that no needless question is asked
    for (std::size_t i = 0; i < t.arity(); ++i) {
        Term a = t.arg(i), b = u.arg(i);
        if (!a.has_adv_vars() && !b.has_adv_vars() && a != b) return Tri::No;
    }
    Tri res = Tri::Yes;
    for (std::size_t i = 0; i < t.arity(); ++i) {
        Tri r = eq3(t.arg(i), u.arg(i), pending);
        if (r == Tri::No) return Tri::No;
        if (r == Tri::Maybe) res = Tri::Maybe;
    }
    return res;
}

Tri match3(Term p, Term t, Substitution& b, std::optional<Undecided>& pending) {
    if (p.is_var()) {
        auto it = b.find(p);
        if (it == b.end()) {
            b.emplace(p, t);
            return Tri::Yes;
        }
        return eq3(it->second, t, pending);
    }
    if (p.is_app() && p.ground() == false) {
        if (t.is_adv_var()) {
            if (contains(t.adv_info().no_heads, p.symbol().id())) return Tri::No;
            if (!pending) pending = Undecided{t, Undecided::Question::Head, p.symbol().id(), {}};
            // bind the pattern variables to nothing yet; outcome unknown
            return Tri::Maybe;
        }
        if (!t.is_app() || t.symbol() != p.symbol() || t.arity() != p.arity()) return Tri::No;
        Tri res = Tri::Yes;
        for (std::size_t i = 0; i < p.arity(); ++i) {
            Tri r = match3(p.arg(i), t.arg(i), b, pending);
            if (r == Tri::No) return Tri::No;
            if (r == Tri::Maybe) res = Tri::Maybe;
        }
        return res;
    }
    return eq3(p, t, pending);
}

void collect_pattern_vars(Term t, std::vector<Term>& out) {
    if (t.is_var()) {
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
        return;
    }
    for (Term a : t.args()) collect_pattern_vars(a, out);
}

// Most general unifier existence for two linear-or-not patterns with
// disjoint variables; used to detect overlapping rules.
bool unify(Term a, Term b, Substitution& s) {
    auto walk = [&](Term t) {
        while (t.is_var()) {
            auto it = s.find(t);
            if (it == s.end()) break;
            t = it->second;
        }
        return t;
    };
    a = walk(a);
    b = walk(b);
    if (a == b) return true;
    if (a.is_var()) {
        if (occurs_in(a, substitute(b, s))) return false;
        s[a] = b;
        return true;
    }
    if (b.is_var()) return unify(b, a, s);
    if (!a.is_app() || !b.is_app() || a.symbol() != b.symbol() || a.arity() != b.arity())
        return false;
    for (std::size_t i = 0; i < a.arity(); ++i)
        if (!unify(a.arg(i), b.arg(i), s)) return false;
    return true;
}

Term rename_apart(Term t, const std::string& suffix) {
    if (t.is_var()) return Term::var(Symbol(t.symbol().str() + suffix));
    if (!t.is_app() || t.arity() == 0) return t;
    std::vector<Term> args;
    for (Term a : t.args()) args.push_back(rename_apart(a, suffix));
    return Term::app(t.symbol(), std::move(args));
}

}  // namespace

std::string DestructorRule::str() const {
    return Term::app(head, lhs).str() + " = " + rhs.str();
}

bool rule_is_subterm(const DestructorRule& r) {
    if (r.rhs.is_var()) return true;
    for (Term a : r.lhs)
        if (occurs_in(r.rhs, a)) return true;
    return false;
}

SymbolicModel::SymbolicModel() {
    add_destructor(kEqual, 2);
    Term x = Term::var(Symbol("x"));
    add_rule({kEqual, {x, x}, x});
}

void SymbolicModel::add_constructor(Symbol name, std::size_t arity, bool quoted) {
    if (auto* f = find(name)) {
        if (f->kind == FuncKind::Constructor && f->arity == arity) return;
        throw UsageError("symbol '" + name.str() + "' redeclared");
    }
    index_[name] = order_.size();
    order_.push_back({name, arity, FuncKind::Constructor, quoted});
}

void SymbolicModel::add_destructor(Symbol name, std::size_t arity) {
    if (auto* f = find(name)) {
        if (f->kind == FuncKind::Destructor && f->arity == arity) return;
        throw UsageError("symbol '" + name.str() + "' redeclared");
    }
    index_[name] = order_.size();
    order_.push_back({name, arity, FuncKind::Destructor});
}

const FuncSymbol* SymbolicModel::find(Symbol name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &order_[it->second];
}

bool SymbolicModel::is_constructor(Symbol name) const {
    auto* f = find(name);
    return f && f->kind == FuncKind::Constructor;
}

bool SymbolicModel::is_destructor(Symbol name) const {
    auto* f = find(name);
    return f && f->kind == FuncKind::Destructor;
}

void SymbolicModel::add_rule(DestructorRule rule) {
    const FuncSymbol* h = find(rule.head);
    if (!h || h->kind != FuncKind::Destructor)
        throw UsageError("rule head '" + rule.head.str() + "' is not a destructor");
    if (h->arity != rule.lhs.size())
        throw UsageError("rule for '" + rule.head.str() + "' has wrong arity");
    auto check_ctor_term = [&](auto&& self, Term t) -> void {
        if (t.is_var()) return;
        if (!t.is_app()) throw UsageError("rule pattern contains a non-pattern term");
        const FuncSymbol* f = find(t.symbol());
        if (!f || f->kind != FuncKind::Constructor)
            throw UsageError("rule pattern uses '" + t.symbol().str() + "' which is not a constructor");
        if (f->arity != t.arity())
            throw UsageError("arity mismatch for '" + t.symbol().str() + "' in rule");
        for (Term a : t.args()) self(self, a);
    };
    for (Term a : rule.lhs) check_ctor_term(check_ctor_term, a);
    check_ctor_term(check_ctor_term, rule.rhs);
    std::vector<Term> lv, rv;
    for (Term a : rule.lhs) collect_pattern_vars(a, lv);
    collect_pattern_vars(rule.rhs, rv);
    for (Term v : rv)
        if (std::find(lv.begin(), lv.end(), v) == lv.end())
            throw UsageError("rule " + rule.str() + ": rhs variable '" + v.str() + "' not in lhs");
    for (const auto& other : all_) {
        if (other.head != rule.head) continue;
        if (other.lhs == rule.lhs && other.rhs == rule.rhs) return;  // duplicate declaration
        Substitution s;
        bool ok = true;
        for (std::size_t i = 0; i < rule.lhs.size() && ok; ++i)
            ok = unify(rename_apart(other.lhs[i], "'"), rule.lhs[i], s);
        if (ok) {
            Term r1 = substitute(rename_apart(other.rhs, "'"), s);
            Term r2 = substitute(rule.rhs, s);
            // overlapping rules with the same result are harmless
            if (r1 != r2)
                throw UsageError("rule " + rule.str() + " overlaps with " + other.str());
        }
    }
    all_.push_back(std::move(rule));
    repartition();
}

std::vector<const DestructorRule*> SymbolicModel::rules_for(Symbol head) const {
    std::vector<const DestructorRule*> out;
    auto it = by_head_.find(head);
    if (it == by_head_.end()) return out;
    for (auto i : it->second) out.push_back(&active_[i]);
    return out;
}

void SymbolicModel::set_sapic_mode(bool on) {
    sapic_mode_ = on;
    repartition();
}

void SymbolicModel::repartition() {
    active_.clear();
    filtered_.clear();
    by_head_.clear();
    for (const auto& r : all_) {
        if (sapic_mode_ && !rule_is_subterm(r)) {
            filtered_.push_back(r);
            continue;
        }
        by_head_[r.head].push_back(active_.size());
        active_.push_back(r);
    }
}

bool SymbolicModel::subterm_convergent() const {
    return std::all_of(active_.begin(), active_.end(), rule_is_subterm);
}

SymbolicModel SymbolicModel::pkenc_sig(bool sapic_mode) {
    SymbolicModel m;
    auto C = [&](const char* n, std::size_t a) { m.add_constructor(Symbol(n), a); };
    auto D = [&](const char* n, std::size_t a) { m.add_destructor(Symbol(n), a); };
    C("enc", 3); C("ek", 1); C("dk", 1); C("sig", 3); C("vk", 1); C("sk", 1);
    C("pair", 2); C("string0", 1); C("string1", 1); C("empty", 0);
    C("garbageSig", 2); C("garbage", 1); C("garbageEnc", 2);
    D("dec", 2); D("isenc", 1); D("isek", 1); D("isdk", 1); D("ekof", 1); D("ekofdk", 1);
    D("verify", 2); D("issig", 1); D("isvk", 1); D("issk", 1); D("vkof", 1); D("vkofsk", 1);
    D("fst", 1); D("snd", 1); D("unstring0", 1); D("unstring1", 1);

    auto v = [](const char* n) { return Term::var(Symbol(n)); };
    auto f = [](const char* n, std::vector<Term> a) { return Term::app(Symbol(n), std::move(a)); };
    auto R = [&](const char* h, std::vector<Term> lhs, Term rhs) {
        m.add_rule({Symbol(h), std::move(lhs), rhs});
    };
    Term t = v("t"), t1 = v("t1"), t2 = v("t2"), t3 = v("t3"), x = v("x"), y = v("y"), s = v("s");
    Term mm = v("m");
    R("dec", {f("dk", {t1}), f("enc", {f("ek", {t1}), mm, t2})}, mm);
    R("isek", {f("ek", {t})}, f("ek", {t}));
    R("isenc", {f("enc", {f("ek", {t1}), t2, t3})}, f("enc", {f("ek", {t1}), t2, t3}));
    R("isenc", {f("garbageEnc", {f("ek", {t1}), t2})}, f("garbageEnc", {f("ek", {t1}), t2}));
    R("fst", {f("pair", {x, y})}, x);
    R("snd", {f("pair", {x, y})}, y);
    R("ekof", {f("enc", {f("ek", {t1}), mm, t2})}, f("ek", {t1}));
    R("ekof", {f("garbageEnc", {t1, t2})}, t1);
    R("verify", {f("vk", {t1}), f("sig", {f("sk", {t1}), t2, t3})}, t2);
    R("issig", {f("sig", {f("sk", {t1}), t2, t3})}, f("sig", {f("sk", {t1}), t2, t3}));
    R("issig", {f("garbageSig", {t1, t2})}, f("garbageSig", {t1, t2}));
    R("vkof", {f("sig", {f("sk", {t1}), t2, t3})}, f("vk", {t1}));
    R("vkof", {f("garbageSig", {t1, t2})}, t1);
    R("isvk", {f("vk", {t1})}, f("vk", {t1}));
    R("unstring0", {f("string0", {s})}, s);
    R("unstring1", {f("string1", {s})}, s);
    R("isdk", {f("dk", {t})}, f("dk", {t}));
    R("ekofdk", {f("dk", {t})}, f("ek", {t}));
    R("issk", {f("sk", {t})}, f("sk", {t}));
    R("vkofsk", {f("sk", {t})}, f("vk", {t}));
    m.set_strict_grammar(true);
    m.set_sapic_mode(sapic_mode);
    return m;
}

bool structurally_equal(Term t, Term u) {
    std::optional<Undecided> pending;
    Tri r = eq3(t, u, pending);
    if (r == Tri::Maybe) throw *pending;
    return r == Tri::Yes;
}

bool match_pattern(Term pattern, Term t, Substitution& binding) {
    std::optional<Undecided> pending;
    Tri r = match3(pattern, t, binding, pending);
    if (r == Tri::Maybe) throw *pending;
    return r == Tri::Yes;
}

std::optional<Term> eval_destructor(const SymbolicModel& m, Symbol d, std::span<const Term> args) {
    const FuncSymbol* f = m.find(d);
    if (!f || f->kind != FuncKind::Destructor)
        throw UsageError("'" + d.str() + "' is not a destructor");
    if (f->arity != args.size())
        throw UsageError("arity mismatch for '" + d.str() + "': expected " +
                         std::to_string(f->arity) + ", got " + std::to_string(args.size()));
    std::optional<Undecided> pending;
    for (const DestructorRule* r : m.rules_for(d)) {
        Substitution b;
        std::optional<Undecided> local;
        Tri res = Tri::Yes;
        for (std::size_t i = 0; i < args.size() && res != Tri::No; ++i) {
            Tri x = match3(r->lhs[i], args[i], b, local);
            if (x == Tri::No) res = Tri::No;
            else if (x == Tri::Maybe) res = Tri::Maybe;
        }
        if (res == Tri::Yes) return substitute(r->rhs, b);
        if (res == Tri::Maybe && !pending) pending = local;
    }
    if (pending) throw *pending;
    return std::nullopt;
}

bool in_message_grammar(Term t) {
    static const Symbol enc("enc"), ek("ek"), dk("dk"), sig("sig"), vk("vk"), sk("sk"),
        pair("pair"), s0("string0"), s1("string1"), empty("empty"), garbage("garbage"),
        genc("garbageEnc"), gsig("garbageSig");
    auto nonce = [](Term x) { return x.is_nonce() || x.is_adv_var(); };
    auto str = [&](auto&& self, Term x) -> bool {
        if (x.is_adv_var()) return true;
        if (!x.is_app()) return false;
        if (x.symbol() == empty && x.arity() == 0) return true;
        if ((x.symbol() == s0 || x.symbol() == s1) && x.arity() == 1) return self(self, x.arg(0));
        return false;
    };
    auto keyed = [&](Term x, Symbol k) {
        return x.is_adv_var() || (x.is_app() && x.symbol() == k && x.arity() == 1 && nonce(x.arg(0)));
    };
    if (nonce(t)) return true;
    if (!t.is_app()) return false;
    Symbol f = t.symbol();
    if (f == enc && t.arity() == 3)
        return keyed(t.arg(0), ek) && in_message_grammar(t.arg(1)) && nonce(t.arg(2));
    if (f == sig && t.arity() == 3)
        return keyed(t.arg(0), sk) && in_message_grammar(t.arg(1)) && nonce(t.arg(2));
    if ((f == ek || f == dk || f == vk || f == sk || f == garbage) && t.arity() == 1)
        return nonce(t.arg(0));
    if (f == pair && t.arity() == 2) return in_message_grammar(t.arg(0)) && in_message_grammar(t.arg(1));
    if ((f == genc || f == gsig) && t.arity() == 2)
        return in_message_grammar(t.arg(0)) && nonce(t.arg(1));
    if (f == empty || f == s0 || f == s1) return str(str, t);
    // user constants are atoms of the message type
    return t.arity() == 0;
}

std::optional<Term> eval_term(const SymbolicModel& m, Term t) {
    switch (t.kind()) {
        case TermKind::Variable:
        case TermKind::Name:
            throw UsageError("unbound symbol '" + t.symbol().str() + "' in evaluated term");
        case TermKind::Nonce:
        case TermKind::AdvVar:
            return t;
        case TermKind::App:
            break;
    }
    const FuncSymbol* f = m.find(t.symbol());
    if (!f) throw UsageError("unknown function symbol '" + t.symbol().str() + "'");
    if (f->arity != t.arity())
        throw UsageError("arity mismatch for '" + t.symbol().str() + "'");
    std::vector<Term> args;
    args.reserve(t.arity());
    bool changed = false;
    for (Term a : t.args()) {
        auto v = eval_term(m, a);
        if (!v) return std::nullopt;
        changed = changed || *v != a;
        args.push_back(*v);
    }
    if (f->kind == FuncKind::Destructor) return eval_destructor(m, t.symbol(), args);
    Term r = changed ? Term::app(t.symbol(), std::move(args)) : t;
    if (m.strict_grammar() && !in_message_grammar(r)) return std::nullopt;
    return r;
}

bool terms_equal(const SymbolicModel& m, Term t, Term u) {
    Term args[2] = {t, u};
    return eval_destructor(m, Symbol("equal"), args).has_value();
}

}  // namespace spi
