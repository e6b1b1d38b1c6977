#include "statepi/process.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <set>

namespace spi {

namespace {

std::atomic<std::uint32_t> g_uid{1};

std::shared_ptr<Process> node(PKind k) {
    auto n = std::make_shared<Process>();
    n->kind = k;
    n->uid = g_uid.fetch_add(1, std::memory_order_relaxed);
    return n;
}

// Collects free occurrences as (symbol, is_name) pairs.
using Occ = std::set<std::pair<Symbol, bool>>;

void term_occ(Term t, Occ& out) {
    if (!t.valid()) return;
    for (Symbol s : term_vars(t)) out.insert({s, false});
    for (Symbol s : term_names(t)) out.insert({s, true});
}

void erase_sym(Occ& o, Symbol s) {
    o.erase({s, false});
    o.erase({s, true});
}

Occ occurrences(const PPtr& p) {
    Occ out;
    if (!p) return out;
    const Process& n = *p;
    auto cont = [&](const PPtr& c, Symbol bound = {}) {
        Occ sub = occurrences(c);
        if (!bound.empty()) erase_sym(sub, bound);
        out.insert(sub.begin(), sub.end());
    };
    switch (n.kind) {
        case PKind::Nil: break;
        case PKind::Par: cont(n.p); cont(n.q); break;
        case PKind::Repl: cont(n.p); break;
        case PKind::New: cont(n.p, n.bound); break;
        case PKind::Out: term_occ(n.t1, out); term_occ(n.t2, out); cont(n.p); break;
        case PKind::In: {
            term_occ(n.t1, out);
            Occ sub = occurrences(n.p);
            if (n.t2.valid()) {
                for (Symbol s : term_vars(n.t2)) erase_sym(sub, s);
            } else {
                erase_sym(sub, n.bound);
            }
            out.insert(sub.begin(), sub.end());
            break;
        }
        case PKind::Let:
        case PKind::Lookup:
            term_occ(n.t1, out);
            cont(n.p, n.bound);
            cont(n.q);
            break;
        case PKind::Event:
            for (Term a : n.events[0].args) term_occ(a, out);
            cont(n.p);
            break;
        case PKind::Insert: term_occ(n.t1, out); term_occ(n.t2, out); cont(n.p); break;
        case PKind::Delete:
        case PKind::Lock:
        case PKind::Unlock: term_occ(n.t1, out); cont(n.p); break;
        case PKind::Msr: {
            Occ sub = occurrences(n.p);
            for (const auto& f : n.lhs) for (Term a : f.args) term_occ(a, sub);
            for (const auto& f : n.rhs) for (Term a : f.args) term_occ(a, sub);
            for (const auto& e : n.events) for (Term a : e.args) term_occ(a, sub);
            for (Symbol v : n.bound_vars) erase_sym(sub, v);
            out.insert(sub.begin(), sub.end());
            break;
        }
        case PKind::SvInit: term_occ(n.t1, out); term_occ(n.t2, out); break;
        case PKind::SvAssign: term_occ(n.t1, out); term_occ(n.t2, out); cont(n.p); break;
        case PKind::SvRead: term_occ(n.t1, out); cont(n.p, n.bound); break;
        case PKind::SvLock:
        case PKind::SvUnlock: cont(n.p); break;
    }
    return out;
}

}  // namespace

const char* kind_name(PKind k) {
    switch (k) {
        case PKind::Nil: return "nil";
        case PKind::Par: return "par";
        case PKind::Repl: return "repl";
        case PKind::New: return "new";
        case PKind::Out: return "out";
        case PKind::In: return "in";
        case PKind::Let: return "let";
        case PKind::Event: return "event";
        case PKind::Insert: return "insert";
        case PKind::Delete: return "delete";
        case PKind::Lookup: return "lookup";
        case PKind::Lock: return "lock";
        case PKind::Unlock: return "unlock";
        case PKind::Msr: return "msr";
        case PKind::SvInit: return "init";
        case PKind::SvAssign: return "assign";
        case PKind::SvRead: return "read";
        case PKind::SvLock: return "sv-lock";
        case PKind::SvUnlock: return "sv-unlock";
    }
    return "?";
}

const std::vector<Symbol>& Process::free_symbols() const {
    if (!free_cache_) {
        // a temporary owner is needed for occurrences(); the node itself is
        // never freed through it
        PPtr self(std::shared_ptr<const Process>{}, this);
        Occ o = occurrences(self);
        auto v = std::make_shared<std::vector<Symbol>>();
        for (auto& [s, is_name] : o) v->push_back(s);
        std::sort(v->begin(), v->end());
        v->erase(std::unique(v->begin(), v->end()), v->end());
        free_cache_ = v;
    }
    return *free_cache_;
}

PPtr make_nil() { return node(PKind::Nil); }

PPtr make_par(PPtr a, PPtr b) {
    auto n = node(PKind::Par);
    n->p = std::move(a);
    n->q = std::move(b);
    return n;
}

PPtr make_repl(PPtr a) {
    auto n = node(PKind::Repl);
    n->p = std::move(a);
    return n;
}

PPtr make_new(Symbol s, PPtr p) {
    auto n = node(PKind::New);
    n->bound = s;
    n->p = std::move(p);
    return n;
}

PPtr make_out(Term chan, Term msg, PPtr p) {
    auto n = node(PKind::Out);
    n->t1 = chan;
    n->t2 = msg;
    n->p = std::move(p);
    return n;
}

PPtr make_in(Term chan, Symbol x, PPtr p) {
    auto n = node(PKind::In);
    n->t1 = chan;
    n->bound = x;
    n->p = std::move(p);
    return n;
}

PPtr make_let(Symbol x, Term t, PPtr p, PPtr q, bool has_else) {
    auto n = node(PKind::Let);
    n->bound = x;
    n->t1 = t;
    n->p = std::move(p);
    n->q = q ? std::move(q) : make_nil();
    n->has_else = has_else;
    return n;
}

PPtr make_if(Term a, Term b, PPtr p, PPtr q, bool has_else) {
    auto n = node(PKind::Let);
    n->t1 = Term::app(Symbol("equal"), {a, b});
    n->cond = true;
    n->p = std::move(p);
    n->q = q ? std::move(q) : make_nil();
    n->has_else = has_else;
    return n;
}

PPtr make_event(EventLabel e, PPtr p) {
    auto n = node(PKind::Event);
    n->events.push_back(std::move(e));
    n->p = std::move(p);
    return n;
}

PPtr make_insert(Term k, Term v, PPtr p) {
    auto n = node(PKind::Insert);
    n->t1 = k;
    n->t2 = v;
    n->p = std::move(p);
    return n;
}

PPtr make_delete(Term k, PPtr p) {
    auto n = node(PKind::Delete);
    n->t1 = k;
    n->p = std::move(p);
    return n;
}

PPtr make_lookup(Term k, Symbol x, PPtr p, PPtr q, bool has_else) {
    auto n = node(PKind::Lookup);
    n->t1 = k;
    n->bound = x;
    n->p = std::move(p);
    n->q = q ? std::move(q) : make_nil();
    n->has_else = has_else;
    return n;
}

PPtr make_lock(Term k, PPtr p) {
    auto n = node(PKind::Lock);
    n->t1 = k;
    n->p = std::move(p);
    return n;
}

PPtr make_unlock(Term k, PPtr p) {
    auto n = node(PKind::Unlock);
    n->t1 = k;
    n->p = std::move(p);
    return n;
}

PPtr make_msr(std::vector<Fact> l, std::vector<EventLabel> e, std::vector<Fact> r, PPtr p,
              std::optional<std::vector<Symbol>> bound) {
    auto n = node(PKind::Msr);
    std::vector<Symbol> bv;
    if (bound) {
        bv = std::move(*bound);
    } else {
        for (const auto& f : l)
            for (Term a : f.args)
                for (Symbol s : term_vars(a)) bv.push_back(s);
    }
    std::sort(bv.begin(), bv.end());
    bv.erase(std::unique(bv.begin(), bv.end()), bv.end());
    n->lhs = std::move(l);
    n->events = std::move(e);
    n->rhs = std::move(r);
    n->bound_vars = std::move(bv);
    n->p = std::move(p);
    return n;
}

PPtr make_sv_init(Term cell, Term v) {
    auto n = node(PKind::SvInit);
    n->t1 = cell;
    n->t2 = v;
    return n;
}

PPtr make_sv_assign(Term cell, Term v, PPtr p) {
    auto n = node(PKind::SvAssign);
    n->t1 = cell;
    n->t2 = v;
    n->p = std::move(p);
    return n;
}

PPtr make_sv_read(Term cell, Symbol x, PPtr p) {
    auto n = node(PKind::SvRead);
    n->t1 = cell;
    n->bound = x;
    n->p = std::move(p);
    return n;
}

PPtr make_sv_lock(PPtr p) {
    auto n = node(PKind::SvLock);
    n->p = std::move(p);
    return n;
}

PPtr make_sv_unlock(PPtr p) {
    auto n = node(PKind::SvUnlock);
    n->p = std::move(p);
    return n;
}

PPtr with_children(const Process& src, PPtr p, PPtr q) {
    auto n = node(src.kind);
    n->bound = src.bound;
    n->t1 = src.t1;
    n->t2 = src.t2;
    n->has_else = src.has_else;
    n->cond = src.cond;
    n->lhs = src.lhs;
    n->rhs = src.rhs;
    n->events = src.events;
    n->bound_vars = src.bound_vars;
    n->pos = src.pos;
    n->p = std::move(p);
    n->q = std::move(q);
    return n;
}

bool same_process(const PPtr& a, const PPtr& b) {
    if (!a || !b) return !a && !b;
    if (a == b) return true;
    const Process& x = *a;
    const Process& y = *b;
    return x.kind == y.kind && x.bound == y.bound && x.t1 == y.t1 && x.t2 == y.t2 &&
           x.has_else == y.has_else && x.cond == y.cond && x.lhs == y.lhs && x.rhs == y.rhs &&
           x.events == y.events && same_process(x.p, y.p) && same_process(x.q, y.q);
}

std::vector<Symbol> free_names(const PPtr& p) {
    std::vector<Symbol> out;
    for (auto& [s, is_name] : occurrences(p))
        if (is_name) out.push_back(s);
    return out;
}

std::vector<Symbol> free_vars(const PPtr& p) {
    std::vector<Symbol> out;
    for (auto& [s, is_name] : occurrences(p))
        if (!is_name) out.push_back(s);
    return out;
}

namespace {

Term rename_term(Term t, Symbol from, Symbol to) {
    if (!t.valid()) return t;
    Substitution s{{Term::var(from), Term::var(to)}, {Term::name(from), Term::name(to)}};
    return substitute(t, s);
}

std::vector<Term> rename_terms(std::vector<Term> ts, Symbol from, Symbol to) {
    for (Term& t : ts) t = rename_term(t, from, to);
    return ts;
}

PPtr rename_impl(const PPtr& p, Symbol from, Symbol to) {
    if (!p) return p;
    const Process& n = *p;
    auto occurs = [&](const PPtr& c) {
        const auto& fs = c->free_symbols();
        return std::binary_search(fs.begin(), fs.end(), from);
    };
    if (!occurs(p)) return p;
    bool shadows = false;
    switch (n.kind) {
        case PKind::New:
        case PKind::In:
        case PKind::Let:
        case PKind::Lookup:
        case PKind::SvRead:
            shadows = n.bound == from;
            break;
        default:
            break;
    }
    if (n.kind == PKind::Msr &&
        std::find(n.bound_vars.begin(), n.bound_vars.end(), from) != n.bound_vars.end())
        return p;
    PPtr np = n.p ? (shadows ? n.p : rename_impl(n.p, from, to)) : nullptr;
    PPtr nq = n.q ? rename_impl(n.q, from, to) : nullptr;
    if (n.kind == PKind::In && n.t2.valid()) {
        for (Symbol v : term_vars(n.t2))
            if (v == from) np = n.p;
    }
    auto c = std::const_pointer_cast<Process>(with_children(n, np, nq));
    c->t1 = rename_term(n.t1, from, to);
    if (!(n.kind == PKind::In && n.t2.valid())) c->t2 = rename_term(n.t2, from, to);
    for (auto& f : c->lhs) f.args = rename_terms(f.args, from, to);
    for (auto& f : c->rhs) f.args = rename_terms(f.args, from, to);
    for (auto& e : c->events) e.args = rename_terms(e.args, from, to);
    return c;
}

}  // namespace

PPtr rename_free(const PPtr& p, Symbol from, Symbol to) { return rename_impl(p, from, to); }

PPtr alpha_rename(const PPtr& root) {
    std::set<Symbol> used;
    for (Symbol s : root->free_symbols()) used.insert(s);
    auto fresh_for = [&](Symbol s) {
        if (!used.count(s)) {
            used.insert(s);
            return s;
        }
        for (int i = 1;; ++i) {
            Symbol c(s.str() + "_" + std::to_string(i));
            if (!used.count(c)) {
                used.insert(c);
                return c;
            }
        }
    };
    std::function<PPtr(const PPtr&)> go = [&](const PPtr& p) -> PPtr {
        if (!p) return p;
        const Process& n = *p;
        if (n.kind == PKind::Repl) return p;
        switch (n.kind) {
            case PKind::New:
            case PKind::In:
            case PKind::Let:
            case PKind::Lookup:
            case PKind::SvRead: {
                if (n.bound.empty() || (n.kind == PKind::In && n.t2.valid())) break;
                Symbol b = fresh_for(n.bound);
                PPtr body = b == n.bound ? n.p : rename_free(n.p, n.bound, b);
                auto c = std::const_pointer_cast<Process>(with_children(n, go(body), go(n.q)));
                c->bound = b;
                return c;
            }
            default:
                break;
        }
        return with_children(n, go(n.p), go(n.q));
    };
    return go(root);
}

std::vector<Symbol> event_symbols(const PPtr& p) {
    std::vector<Symbol> out;
    std::function<void(const PPtr&)> go = [&](const PPtr& x) {
        if (!x) return;
        for (const auto& e : x->events) out.push_back(e.sym);
        go(x->p);
        go(x->q);
    };
    go(p);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool is_statverif_kind(PKind k) {
    return k == PKind::SvInit || k == PKind::SvAssign || k == PKind::SvRead || k == PKind::SvLock ||
           k == PKind::SvUnlock;
}

bool is_sapic_state_kind(PKind k) {
    return k == PKind::Insert || k == PKind::Delete || k == PKind::Lookup || k == PKind::Lock ||
           k == PKind::Unlock || k == PKind::Msr;
}

}  // namespace spi
