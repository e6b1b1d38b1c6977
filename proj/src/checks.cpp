#include "statepi/checks.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace spi {

std::string Diagnostic::str() const {
    return std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": [" + tag + "] " + message;
}

namespace {

struct Checker {
    Dialect d;
    std::vector<Diagnostic> out;
    std::vector<std::pair<Term, SrcPos>> inits;
    std::map<Symbol, bool> fact_kind;

    void diag(const char* tag, std::string msg, const Process& n) { out.push_back({tag, std::move(msg), n.pos}); }

    // Pattern vars nested under a function symbol.
    static void nested_vars(Term t, bool top, std::set<Symbol>& out) {
        if (t.is_var()) {
            if (!top) out.insert(t.symbol());
            return;
        }
        if (t.is_app())
            for (Term a : t.args()) nested_vars(a, false, out);
    }

    void msr(const Process& n, const std::set<Symbol>& scope) {
        std::set<Symbol> bound(n.bound_vars.begin(), n.bound_vars.end());
        for (const Fact& f : n.lhs) {
            for (Term a : f.args) {
                std::set<Symbol> nested;
                nested_vars(a, true, nested);
                for (Symbol v : nested)
                    if (bound.count(v))
                        diag("msr-nested",
                             "variable " + v.str() + " of fact " + f.sym.str() + " occurs below a function symbol",
                             n);
            }
        }
        auto fv_ok = [&](Term t, const std::string& where) {
            for (Symbol v : term_vars(t))
                if (!bound.count(v) && !scope.count(v))
                    diag("msr-fv", "variable " + v.str() + " in " + where + " is not bound by the left side", n);
        };
        for (const Fact& f : n.rhs)
            for (Term a : f.args) fv_ok(a, "fact " + f.sym.str());
        for (const EventLabel& e : n.events)
            for (Term a : e.args) fv_ok(a, "label " + e.sym.str());
        auto kind = [&](const Fact& f) {
            auto [it, fresh] = fact_kind.emplace(f.sym, f.persistent);
            if (!fresh && it->second != f.persistent)
                diag("fact-linearity", "fact " + f.sym.str() + " is used both linear and persistent", n);
        };
        for (const Fact& f : n.lhs) kind(f);
        for (const Fact& f : n.rhs) kind(f);
    }

    void walk(const PPtr& p, bool structural, bool locked, std::set<Symbol> scope) {
        const Process& n = *p;
        bool sv = is_statverif_kind(n.kind);
        bool sapic = is_sapic_state_kind(n.kind);
        if ((d == Dialect::Sapic && sv) || (d == Dialect::StatVerif && sapic))
            diag("dialect",
                 std::string(kind_name(n.kind)) + " is not available in the " +
                     (d == Dialect::Sapic ? "SAPIC" : "StatVerif") + " dialect",
                 n);
        switch (n.kind) {
            case PKind::Nil: return;
            case PKind::Par:
            case PKind::Repl:
                if (locked) diag("sv-lock-par", std::string(kind_name(n.kind)) + " between lock and unlock", n);
                walk(n.p, structural, locked, scope);
                if (n.q) walk(n.q, structural, locked, scope);
                return;
            case PKind::New:
                scope.insert(n.bound);
                walk(n.p, structural, locked, scope);
                return;
            case PKind::In:
                if (n.t2.valid()) diag("in-pattern", "input must bind a plain variable", n);
                if (!n.bound.empty()) scope.insert(n.bound);
                for (Symbol v : term_vars(n.t2)) scope.insert(v);
                break;
            case PKind::Let:
            case PKind::Lookup:
                walk(n.q, false, locked, scope);
                if (!n.bound.empty()) scope.insert(n.bound);
                break;
            case PKind::SvRead: scope.insert(n.bound); break;
            case PKind::Msr:
                msr(n, scope);
                for (Symbol v : n.bound_vars) scope.insert(v);
                break;
            case PKind::SvInit: {
                if (!structural) diag("sv-init-scope", "cell initialization must sit under new, | or ! only", n);
                for (auto& [t, pos] : inits)
                    if (t == n.t1) {
                        diag("sv-init-dup",
                             "cell " + n.t1.str() + " already initialized at " + std::to_string(pos.line) + ":" +
                                 std::to_string(pos.col),
                             n);
                        break;
                    }
                inits.emplace_back(n.t1, n.pos);
                return;
            }
            case PKind::SvLock: locked = true; break;
            case PKind::SvUnlock: locked = false; break;
            default: break;
        }
        walk(n.p, false, locked, scope);
    }
};

}  // namespace

std::vector<Diagnostic> check_restrictions(const PPtr& p, Dialect d) {
    Checker c{d, {}, {}, {}};
    c.walk(p, true, false, {});
    for (Symbol v : free_vars(p)) c.out.push_back({"free-var", "variable " + v.str() + " is free", p->pos});
    return c.out;
}

}  // namespace spi
