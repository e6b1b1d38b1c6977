#include "statepi/explorer.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace spi {

namespace {

// Adversary nonces and the lock token live far above protocol nonce ids.
constexpr std::uint64_t kAdvNonceBase = 1ull << 40;
constexpr std::uint64_t kLockTokenId = 1ull << 41;
constexpr std::uint64_t kSep = ~0ull;

struct KeyHash {
    std::size_t operator()(const std::vector<std::uint64_t>& v) const noexcept {
        std::size_t h = v.size();
        for (std::uint64_t x : v) h ^= std::hash<std::uint64_t>{}(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return h;
    }
};
using KeySet = std::unordered_set<std::vector<std::uint64_t>, KeyHash>;

void push_closure(std::vector<std::uint64_t>& out, const Closure& c) {
    out.push_back(c.node->uid);
    for (auto& [s, v] : c.env) {
        out.push_back(s.id());
        out.push_back(v.id());
    }
}

std::vector<std::uint64_t> closure_key(const Closure& c, std::uint64_t extra = 0) {
    std::vector<std::uint64_t> k{extra};
    push_closure(k, c);
    return k;
}

void append_sorted(std::vector<std::uint64_t>& out, std::vector<std::vector<std::uint64_t>> parts) {
    std::sort(parts.begin(), parts.end());
    for (auto& p : parts) {
        out.insert(out.end(), p.begin(), p.end());
        out.push_back(kSep - 1);
    }
    out.push_back(kSep);
}

void collect_vars(Term t, std::set<Term>& out) {
    if (!t.valid() || !t.has_adv_vars()) return;
    if (t.is_adv_var()) {
        out.insert(t);
        return;
    }
    for (Term a : t.args()) collect_vars(a, out);
}

void collect_adv_nonces(Term t, std::set<Term>& out) {
    if (!t.valid()) return;
    if (t.is_nonce()) {
        if (t.nonce_sort() == NonceSort::Adversary) out.insert(t);
        return;
    }
    if (t.is_app())
        for (Term a : t.args()) collect_adv_nonces(a, out);
}

bool contains(const std::vector<std::uint32_t>& v, std::uint32_t x) { return std::binary_search(v.begin(), v.end(), x); }

void insert_sorted(std::vector<std::uint32_t>& v, std::uint32_t x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
}

// Whether `t` is a possible value of the adversary variable `var`.
bool admissible(Term var, Term t) {
    const AdvVarInfo& x = var.adv_info();
    if (t == var || occurs_in(var, t)) return false;
    if (t.is_nonce()) {
        if (contains(x.no_heads, kNonceHead) || contains(x.no_nonces, t.id())) return false;
    } else if (t.is_app()) {
        if (contains(x.no_heads, t.symbol().id())) return false;
        if (x.sort == VarSort::Nonce) return false;
    }
    return true;
}

void term_symbols(Term t, std::vector<Symbol>& out) {
    if (!t.valid()) return;
    if (t.is_var() || t.is_name()) {
        out.push_back(t.symbol());
        return;
    }
    if (t.is_app())
        for (Term a : t.args()) term_symbols(a, out);
}

bool mentions(Term t, Symbol s) {
    std::vector<Symbol> v;
    term_symbols(t, v);
    return std::find(v.begin(), v.end(), s) != v.end();
}

// Variables a node binds in its first continuation.
std::vector<Symbol> binders(const Process& n) {
    std::vector<Symbol> out;
    switch (n.kind) {
        case PKind::New:
        case PKind::In:
        case PKind::Let:
        case PKind::Lookup:
            if (!n.bound.empty()) out.push_back(n.bound);
            if (n.kind == PKind::In) term_symbols(n.t2, out);
            break;
        case PKind::Msr: out = n.bound_vars; break;
        default: break;
    }
    return out;
}

// Static view of which cells and locks a process may touch from a given
// node on, used to fire state actions eagerly when no other process can
// interfere with them.
class Footprint {
public:
    struct Site {
        PKind kind;
        Term key;
        std::vector<Symbol> open;  // key symbols not bound between the process and the site
        bool fresh = false;        // key is a name restricted on the way
        bool opaque = false;       // key depends on a later input or binding
        std::vector<Term> held;    // locks taken on the way and still valid here
    };

    explicit Footprint(const PPtr& root) {
        walk(root, {});
    }

    bool enabled() const { return enabled_; }
    // Locks are only released by their holder, so holding them excludes
    // other processes from the sites they protect.
    bool protection() const { return matched_unlocks_; }

    const std::vector<Term>& held(const Process* n) const {
        static const std::vector<Term> none;
        auto it = held_.find(n);
        return it == held_.end() || !it->second ? none : *it->second;
    }

    const std::vector<Site>& sites(const Process* n) {
        auto it = sites_.find(n);
        if (it != sites_.end()) return it->second;
        std::vector<Site> out;
        if (n->kind == PKind::Insert || n->kind == PKind::Delete || n->kind == PKind::Lookup ||
            n->kind == PKind::Lock || n->kind == PKind::Unlock) {
            Site s{n->kind, n->t1, {}, false, false, held(n)};
            term_symbols(n->t1, s.open);
            out.push_back(std::move(s));
        }
        if (n->p) {
            std::vector<Symbol> bs = binders(*n);
            for (Site s : sites(n->p.get())) {
                for (Symbol v : bs) rebind(s, v, n->kind == PKind::New);
                out.push_back(std::move(s));
            }
        }
        if (n->q)
            for (const Site& s : sites(n->q.get())) out.push_back(s);
        return sites_.emplace(n, std::move(out)).first->second;
    }

private:
    bool enabled_ = true;
    bool matched_unlocks_ = true;
    std::map<const Process*, std::optional<std::vector<Term>>> held_;
    std::set<std::pair<const Process*, std::vector<Term>>> walked_;
    std::map<const Process*, std::vector<Site>> sites_;

    static void rebind(Site& s, Symbol v, bool is_new) {
        auto it = std::find(s.open.begin(), s.open.end(), v);
        if (it != s.open.end()) {
            s.open.erase(it);
            if (is_new && (s.key.is_name() || s.key.is_var()) && s.key.symbol() == v) s.fresh = true;
            else if (!s.fresh) s.opaque = true;
        }
        std::erase_if(s.held, [&](Term t) { return mentions(t, v); });
    }

    void walk(const PPtr& n, std::vector<Term> held) {
        if (!walked_.insert({n.get(), held}).second) return;
        auto [it, first] = held_.try_emplace(n.get(), held);
        if (!first && it->second && *it->second != held) it->second = std::nullopt;
        switch (n->kind) {
            case PKind::Msr:
            case PKind::SvInit:
            case PKind::SvAssign:
            case PKind::SvRead:
            case PKind::SvLock:
            case PKind::SvUnlock: enabled_ = false; break;
            case PKind::Unlock:
                if (auto h = std::find(held.begin(), held.end(), n->t1); h != held.end()) held.erase(h);
                else matched_unlocks_ = false;
                break;
            default: break;
        }
        std::vector<Term> inner = held;
        if (n->kind == PKind::Lock) inner.push_back(n->t1);
        if (n->kind == PKind::Par || n->kind == PKind::Repl) inner.clear();
        for (Symbol v : binders(*n)) std::erase_if(inner, [&](Term t) { return mentions(t, v); });
        if (n->p) walk(n->p, inner);
        if (n->q) walk(n->q, n->kind == PKind::Par ? inner : held);
    }
};

struct State {
    SapicConfig cfg;
    std::vector<Action> script;
    std::uint32_t next_var = 1;
    int adv_nonces = 0;
    int steps = 0;
};

State substitute_state(const State& st, const Substitution& s) {
    State c = st;
    c.cfg = substitute_config(st.cfg, s);
    for (Action& a : c.script) {
        if (a.payload.valid() && a.payload.has_adv_vars()) a.payload = substitute(a.payload, s);
        if (a.channel.valid() && a.channel.has_adv_vars()) a.channel = substitute(a.channel, s);
    }
    return c;
}

std::set<Term> state_vars(const State& st) {
    std::set<Term> out;
    const SapicConfig& c = st.cfg;
    for (auto& [k, v] : c.cells) {
        collect_vars(k, out);
        collect_vars(v, out);
    }
    for (const Fact& f : c.msstate)
        for (Term a : f.args) collect_vars(a, out);
    for (const Closure& p : c.procs)
        for (auto& [s, v] : p.env) collect_vars(v, out);
    for (Term t : c.knowledge.entries) collect_vars(t, out);
    for (Term t : c.locks) collect_vars(t, out);
    for (const TraceStep& ts : c.raised)
        for (const EventLabel& e : ts.events)
            for (Term a : e.args) collect_vars(a, out);
    for (const Action& a : st.script) {
        collect_vars(a.payload, out);
        collect_vars(a.channel, out);
    }
    return out;
}

std::set<Term> state_adv_nonces(const State& st) {
    std::set<Term> out;
    for (Term t : st.cfg.knowledge.entries) collect_adv_nonces(t, out);
    for (const Closure& p : st.cfg.procs)
        for (auto& [s, v] : p.env) collect_adv_nonces(v, out);
    for (const Action& a : st.script) collect_adv_nonces(a.payload, out);
    return out;
}

Term with_info(Term, AdvVarInfo info) { return Term::adv_var(std::move(info)); }

}  // namespace

std::vector<std::uint64_t> config_key(const SapicConfig& cfg) {
    std::vector<std::uint64_t> k;
    std::vector<std::uint64_t> r;
    for (Term t : cfg.restricted) r.push_back(t.id());
    std::sort(r.begin(), r.end());
    k.insert(k.end(), r.begin(), r.end());
    k.push_back(kSep);
    std::vector<std::vector<std::uint64_t>> parts;
    for (auto& [key, val] : cfg.cells) parts.push_back({key.id(), val.id()});
    append_sorted(k, std::move(parts));
    parts.clear();
    for (const Fact& f : cfg.msstate) {
        std::vector<std::uint64_t> p{f.sym.id(), f.persistent ? 1u : 0u};
        for (Term a : f.args) p.push_back(a.id());
        parts.push_back(std::move(p));
    }
    append_sorted(k, std::move(parts));
    parts.clear();
    for (const Closure& c : cfg.procs) parts.push_back(closure_key(c));
    append_sorted(k, std::move(parts));
    for (Term t : cfg.knowledge.entries) k.push_back(t.id());
    k.push_back(kSep);
    std::vector<std::uint64_t> l;
    for (Term t : cfg.locks) l.push_back(t.id());
    std::sort(l.begin(), l.end());
    k.insert(k.end(), l.begin(), l.end());
    k.push_back(kSep);
    return k;
}

// ---------------------------------------------------------------- properties

PropertySpec PropertySpec::absence(Symbol event) {
    PropertySpec p;
    p.kind_ = Kind::Absence;
    p.event_ = event;
    return p;
}

PropertySpec PropertySpec::never_both_derivable(Symbol marker) {
    PropertySpec p;
    p.kind_ = Kind::NeverBothDerivable;
    p.event_ = marker;
    return p;
}

PropertySpec PropertySpec::custom(std::string name, Predicate pred) {
    PropertySpec p;
    p.kind_ = Kind::Custom;
    p.name_ = std::move(name);
    p.pred_ = std::move(pred);
    return p;
}

bool PropertySpec::violated_by(const SymbolicModel& m, const Trace& t) const {
    switch (kind_) {
        case Kind::Absence:
            for (const TraceStep& s : t.steps)
                for (const EventLabel& e : s.events)
                    if (e.sym == event_) return true;
            return false;
        case Kind::NeverBothDerivable: {
            std::optional<Saturation> sat;
            for (const TraceStep& s : t.steps)
                for (const EventLabel& e : s.events) {
                    if (e.sym != event_ || e.args.size() != 2) continue;
                    if (!sat) sat = saturate(m, t.knowledge);
                    if (compose(m, *sat, e.args[0]) && compose(m, *sat, e.args[1])) return true;
                }
            return false;
        }
        case Kind::Custom: return !pred_(m, t);
    }
    return false;
}

std::string PropertySpec::str() const {
    switch (kind_) {
        case Kind::Absence: return "absence(" + event_.str() + ")";
        case Kind::NeverBothDerivable: return "never_both_derivable(" + event_.str() + ")";
        case Kind::Custom: return name_;
    }
    return "?";
}

// ---------------------------------------------------------------- explorer

namespace {

class Explorer {
public:
    Explorer(const SymbolicModel& m, const PPtr& p0, const Bounds& b, const ExploreOptions& opt)
        : m_(m), p0_(p0), b_(b), opt_(opt), fp_(p0) {}

    const PropertySpec* prop = nullptr;
    const std::function<bool(const Trace&)>* visit = nullptr;
    std::optional<Verdict> found;
    ExploreStats stats;

    void run() {
        State s;
        s.cfg = initial_config(p0_);
        dfs(std::move(s));
    }

private:
    const SymbolicModel& m_;
    PPtr p0_;
    Bounds b_;
    ExploreOptions opt_;
    mutable Footprint fp_;
    bool stop_ = false;
    std::unordered_map<std::vector<std::uint64_t>, int, KeyHash> visited_;

    std::vector<std::uint64_t> state_key(const State& st) const {
        std::vector<std::uint64_t> k = config_key(st.cfg);
        for (auto& [uid, n] : st.cfg.unfolds) {
            k.push_back(uid);
            k.push_back(n);
        }
        k.push_back(kSep);
        std::vector<std::vector<std::uint64_t>> evs;
        for (const TraceStep& ts : st.cfg.raised)
            for (const EventLabel& e : ts.events) {
                if (prop && prop->kind() != PropertySpec::Kind::Custom && e.sym != prop->event()) continue;
                std::vector<std::uint64_t> v{e.sym.id()};
                for (Term a : e.args) v.push_back(a.id());
                evs.push_back(std::move(v));
            }
        std::sort(evs.begin(), evs.end());
        evs.erase(std::unique(evs.begin(), evs.end()), evs.end());
        append_sorted(k, std::move(evs));
        k.push_back(static_cast<std::uint64_t>(st.adv_nonces));
        return k;
    }

    void dfs(State st) {
        if (stop_) return;
        ++stats.nodes;
        if (opt_.merge_states && !visit) {
            auto key = state_key(st);
            auto it = visited_.find(key);
            if (it != visited_.end() && it->second <= st.steps) {
                ++stats.merged;
                return;
            }
            visited_[std::move(key)] = st.steps;
        }
        std::vector<State> next;
        bool cut = false;
        try {
            if (prop && prop->violated_by(m_, Trace{st.cfg.raised, st.cfg.knowledge, false}) && confirm(st)) {
                stop_ = true;
                return;
            }
            next = expand(st, cut);
        } catch (const Undecided& u) {
            ++stats.refinements;
            for (State& c : refine(st, u)) {
                dfs(std::move(c));
                if (stop_) return;
            }
            return;
        }
        if (next.empty()) {
            ++stats.leaves;
            if (cut) ++stats.truncated;
            if (visit && !(*visit)(Trace{st.cfg.raised, st.cfg.knowledge, cut})) stop_ = true;
            return;
        }
        for (State& c : next) {
            dfs(std::move(c));
            if (stop_) return;
        }
    }

    State apply(const State& st, const Action& a, bool free) const {
        State c;
        c.cfg = step(m_, st.cfg, a, opt_.engine).first;
        c.script = st.script;
        c.script.push_back(a);
        c.next_var = st.next_var;
        c.adv_nonces = st.adv_nonces;
        c.steps = st.steps + (free ? 0 : 1);
        return c;
    }

    std::optional<State> eager(const State& st) const {
        const SapicConfig& cfg = st.cfg;
        for (std::size_t i = 0; i < cfg.procs.size(); ++i) {
            const Closure& c = cfg.procs[i];
            switch (c.node->kind) {
                case PKind::New:
                case PKind::Let: return apply(st, Action::schedule(i), true);
                case PKind::Event:
                    try {
                        return apply(st, Action::schedule(i), true);
                    } catch (const NotEnabled&) {
                        break;
                    }
                case PKind::Repl: {
                    auto it = cfg.unfolds.find(c.node->uid);
                    if (it == cfg.unfolds.end() || static_cast<int>(it->second) < b_.max_repl_unfold)
                        return apply(st, Action::schedule(i), true);
                    break;
                }
                case PKind::Unlock: {
                    if (!fp_.enabled() || !fp_.protection()) break;
                    auto k = eval_in(m_, c.node->t1, c.env);
                    if (k && std::find(cfg.locks.begin(), cfg.locks.end(), *k) != cfg.locks.end())
                        return apply(st, Action::schedule(i), true);
                    break;
                }
                case PKind::Insert:
                case PKind::Delete:
                case PKind::Lookup:
                case PKind::Lock:
                    if (!independent_state_action(cfg, i)) break;
                    try {
                        return apply(st, Action::schedule(i), true);
                    } catch (const NotEnabled&) {
                        break;
                    }
                case PKind::Out: {
                    bool ok = false;
                    auto r = adversary_channel(m_, cfg.knowledge, c, ok);
                    if (ok && eval_in(m_, c.node->t2, c.env)) return apply(st, Action::output(i, r ? *r : Term()), true);
                    break;
                }
                default: break;
            }
        }
        return std::nullopt;
    }

    static bool bound_in(Term t, const Bindings& env) {
        std::vector<Symbol> syms;
        term_symbols(t, syms);
        for (Symbol s : syms)
            if (!lookup_binding(env, s)) return false;
        return true;
    }

    // True when no other process can touch the cell or lock of process i's
    // next action before that action fires.
    bool independent_state_action(const SapicConfig& cfg, std::size_t i) const {
        if (!fp_.enabled()) return false;
        const Closure& ci = cfg.procs[i];
        auto k = eval_in(m_, ci.node->t1, ci.env);
        if (!k || k->has_adv_vars()) return false;
        bool lock = ci.node->kind == PKind::Lock;
        std::vector<Term> mine;
        if (fp_.protection())
            for (Term l : fp_.held(ci.node.get()))
                if (bound_in(l, ci.env))
                    if (auto v = eval_in(m_, l, ci.env)) mine.push_back(*v);
        for (std::size_t j = 0; j < cfg.procs.size(); ++j) {
            if (j == i) continue;
            const Closure& cj = cfg.procs[j];
            for (const Footprint::Site& s : fp_.sites(cj.node.get())) {
                bool relevant = lock ? (s.kind == PKind::Lock || s.kind == PKind::Unlock)
                                     : (s.kind == PKind::Insert || s.kind == PKind::Delete || s.kind == PKind::Lookup);
                if (!relevant || s.fresh) continue;
                if (!s.opaque && bound_in(s.key, cj.env)) {
                    auto v = eval_in(m_, s.key, cj.env);
                    if (!v || (!v->has_adv_vars() && *v != *k)) continue;
                }
                bool guarded = false;
                for (Term l : s.held) {
                    if (!bound_in(l, cj.env)) continue;
                    auto v = eval_in(m_, l, cj.env);
                    if (v && std::find(mine.begin(), mine.end(), *v) != mine.end()) guarded = true;
                }
                if (!guarded) return false;
            }
        }
        return true;
    }

    std::vector<State> expand(const State& st, bool& cut) {
        if (opt_.partial_order)
            if (auto e = eager(st)) return {std::move(*e)};
        const SapicConfig& cfg = st.cfg;
        std::vector<Action> acts = enabled_actions(m_, cfg, opt_.engine);
        std::vector<Action> keep;
        std::set<std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>> comm_seen;
        for (const Action& a : acts) {
            const Closure& c = cfg.procs[a.proc];
            if (a.kind == Action::Kind::Comm) {
                if (opt_.partial_order) {
                    bool ok = false;
                    adversary_channel(m_, cfg.knowledge, c, ok);
                    if (ok) continue;
                }
                if (!comm_seen.insert({closure_key(c), closure_key(cfg.procs[a.other])}).second) continue;
                keep.push_back(a);
                continue;
            }
            bool dup = false;
            for (std::size_t j = 0; j < a.proc && !dup; ++j) dup = cfg.procs[j] == c;
            if (dup) continue;
            if (a.kind == Action::Kind::Schedule && c.node->kind == PKind::Repl) {
                auto it = cfg.unfolds.find(c.node->uid);
                if (it != cfg.unfolds.end() && static_cast<int>(it->second) >= b_.max_repl_unfold) continue;
            }
            keep.push_back(a);
        }
        if (keep.empty()) return {};
        if (st.steps >= b_.max_steps) {
            cut = true;
            return {};
        }
        std::vector<State> out;
        for (const Action& a : keep) {
            if (a.kind != Action::Kind::AdvInput) {
                out.push_back(apply(st, a, false));
                continue;
            }
            if (opt_.inputs == InputMode::Lazy) {
                AdvVarInfo info;
                info.id = st.next_var;
                info.snapshot = static_cast<std::uint32_t>(cfg.knowledge.size());
                info.budget = static_cast<std::uint32_t>(b_.max_recipe_depth);
                State c = apply(st, Action::input(a.proc, a.channel, Term::adv_var(info)), false);
                c.next_var = st.next_var + 1;
                out.push_back(std::move(c));
                continue;
            }
            for (auto& [recipe, fresh] : enumerate_recipes(st)) {
                try {
                    State c = apply(st, Action::input(a.proc, a.channel, recipe), false);
                    if (fresh) ++c.adv_nonces;
                    out.push_back(std::move(c));
                } catch (const NotEnabled&) {
                }
            }
        }
        return out;
    }

    // Recipes for Enumerate mode: saturated knowledge, public constants and
    // adversary nonces, closed under constructors up to the depth bound.
    std::vector<std::pair<Term, bool>> enumerate_recipes(const State& st) const {
        std::vector<std::pair<Term, bool>> out;
        std::unordered_set<Term> values;
        std::vector<std::pair<Term, Term>> level;  // value, recipe
        Saturation sat = saturate(m_, st.cfg.knowledge);
        auto add = [&](Term v, Term r, bool fresh, std::vector<std::pair<Term, Term>>& into) {
            if (values.size() >= opt_.max_enumerated || !values.insert(v).second) return;
            out.emplace_back(r, fresh);
            into.emplace_back(v, r);
        };
        for (const auto& it : sat.items()) add(it.term, it.recipe, false, level);
        for (const FuncSymbol& f : m_.symbols())
            if (f.kind == FuncKind::Constructor && f.arity == 0) {
                Term c = Term::constant(f.name);
                if (auto v = eval_term(m_, c)) add(*v, c, false, level);
            }
        for (Term n : state_adv_nonces(st)) add(n, n, false, level);
        if (st.adv_nonces < b_.max_new_adv_nonces) {
            Term n = Term::nonce(kAdvNonceBase + static_cast<std::uint64_t>(st.adv_nonces), NonceSort::Adversary);
            add(n, n, true, level);
        }
        std::vector<std::pair<Term, Term>> all = level;
        for (int d = 1; d <= b_.max_recipe_depth; ++d) {
            std::vector<std::pair<Term, Term>> fresh_level;
            for (const FuncSymbol& f : m_.symbols()) {
                if (f.kind != FuncKind::Constructor || f.arity == 0) continue;
                std::vector<std::size_t> idx(f.arity, 0);
                while (true) {
                    bool uses_last = false;
                    std::vector<Term> vs, rs;
                    for (std::size_t i = 0; i < f.arity; ++i) {
                        vs.push_back(all[idx[i]].first);
                        rs.push_back(all[idx[i]].second);
                        uses_last = uses_last || idx[i] >= all.size() - level.size();
                    }
                    if (uses_last) {
                        if (auto v = eval_term(m_, Term::app(f.name, vs))) add(*v, Term::app(f.name, rs), false, fresh_level);
                    }
                    std::size_t k = 0;
                    while (k < f.arity && ++idx[k] == all.size()) idx[k++] = 0;
                    if (k == f.arity || values.size() >= opt_.max_enumerated) break;
                }
            }
            if (fresh_level.empty()) break;
            all.insert(all.end(), fresh_level.begin(), fresh_level.end());
            level = std::move(fresh_level);
        }
        // adversary nonces flagged fresh must keep their flag
        for (auto& [r, fresh] : out)
            if (r.is_nonce() && r.nonce_sort() == NonceSort::Adversary) {
                std::set<Term> known = state_adv_nonces(st);
                fresh = !known.count(r);
            }
        return out;
    }

    std::vector<Term> atoms(const State& st, Term var) const {
        const AdvVarInfo& x = var.adv_info();
        const auto& e = st.cfg.knowledge.entries;
        std::vector<Term> prefix(e.begin(), e.begin() + std::min<std::size_t>(x.snapshot, e.size()));
        Saturation sat = saturate(m_, prefix);
        std::vector<Term> out;
        for (const auto& it : sat.items())
            if (!it.term.is_adv_var()) out.push_back(it.term);
        for (Term n : state_adv_nonces(st))
            if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
        return out;
    }

    Term shape(State& st, Term var, const FuncSymbol& f) const {
        const AdvVarInfo& x = var.adv_info();
        std::vector<Term> args;
        for (std::size_t i = 0; i < f.arity; ++i) {
            AdvVarInfo y;
            y.id = st.next_var++;
            y.snapshot = x.snapshot;
            y.budget = x.budget - 1;
            args.push_back(Term::adv_var(y));
        }
        return Term::app(f.name, std::move(args));
    }

    const FuncSymbol* symbol_by_id(std::uint32_t id) const {
        for (const FuncSymbol& f : m_.symbols())
            if (f.name.id() == id) return &f;
        return nullptr;
    }

    std::vector<State> refine(const State& st, const Undecided& u) {
        try {
            return refine_once(st, u);
        } catch (const Undecided& inner) {
            return refine(st, inner);
        }
    }

    std::vector<State> refine_once(const State& st, const Undecided& u) {
        std::vector<State> out;
        Term x = u.var;
        const AdvVarInfo& xi = x.adv_info();
        auto bind = [&](const State& base, Term value) { out.push_back(substitute_state(base, {{x, value}})); };
        auto fresh_nonce = [&]() {
            if (st.adv_nonces >= b_.max_new_adv_nonces || contains(xi.no_heads, kNonceHead)) return;
            State c = st;
            Term n = Term::nonce(kAdvNonceBase + static_cast<std::uint64_t>(c.adv_nonces++), NonceSort::Adversary);
            bind(c, n);
        };
        switch (u.question) {
            case Undecided::Question::Head: {
                for (Term t : atoms(st, x))
                    if (t.is_app() && t.symbol().id() == u.head && admissible(x, t)) bind(st, t);
                const FuncSymbol* f = symbol_by_id(u.head);
                if (f && f->kind == FuncKind::Constructor && (f->arity == 0 || xi.budget > 0)) {
                    State c = st;
                    Term t = shape(c, x, *f);
                    bind(c, t);
                }
                AdvVarInfo neg = xi;
                insert_sorted(neg.no_heads, u.head);
                bind(st, with_info(x, neg));
                break;
            }
            case Undecided::Question::NonceEq: {
                Term n = u.other;
                bool known = n.nonce_sort() == NonceSort::Adversary;
                if (!known) {
                    auto as = atoms(st, x);
                    known = std::find(as.begin(), as.end(), n) != as.end();
                }
                if (known && admissible(x, n)) bind(st, n);
                AdvVarInfo neg = xi;
                insert_sorted(neg.no_nonces, n.id());
                bind(st, with_info(x, neg));
                break;
            }
            case Undecided::Question::Split: {
                Term y = u.other;
                AdvVarInfo merged = y.adv_info();
                for (auto h : xi.no_heads) insert_sorted(merged.no_heads, h);
                for (auto n : xi.no_nonces) insert_sorted(merged.no_nonces, n);
                Term y2 = with_info(y, merged);
                Substitution s{{x, y2}};
                if (y2 != y) s.emplace(y, y2);
                out.push_back(substitute_state(st, s));
                for (Term t : atoms(st, x))
                    if (t != y && admissible(x, t)) bind(st, t);
                for (const FuncSymbol& f : m_.symbols()) {
                    if (f.kind != FuncKind::Constructor || contains(xi.no_heads, f.name.id())) continue;
                    if (f.arity > 0 && xi.budget == 0) continue;
                    State c = st;
                    Term t = shape(c, x, f);
                    if (admissible(x, t)) bind(c, t);
                }
                fresh_nonce();
                break;
            }
        }
        return out;
    }

    // Concrete value for a leftover adversary variable.
    std::optional<Term> concretize(State& st, Term var) const {
        const AdvVarInfo& x = var.adv_info();
        std::vector<Term> cands;
        if (!contains(x.no_heads, kNonceHead))
            cands.push_back(Term::nonce(kAdvNonceBase + 1000 + x.id, NonceSort::Adversary));
        for (const FuncSymbol& f : m_.symbols())
            if (f.kind == FuncKind::Constructor && f.arity == 0) cands.push_back(Term::constant(f.name));
        try {
            for (Term t : atoms(st, var)) cands.push_back(t);
        } catch (const Undecided&) {
        }
        for (Term t : cands)
            if (!t.has_adv_vars() && admissible(var, t)) return t;
        return std::nullopt;
    }

    bool confirm(const State& st) {
        State s = st;
        while (true) {
            auto vars = state_vars(s);
            if (vars.empty()) break;
            Term x = *std::min_element(vars.begin(), vars.end(), [](Term a, Term b) {
                return a.adv_info().id < b.adv_info().id;
            });
            auto v = concretize(s, x);
            if (!v) {
                ++stats.rejected_witnesses;
                return false;
            }
            s = substitute_state(s, {{x, *v}});
        }
        SapicConfig cfg = initial_config(p0_);
        std::vector<Action> script;
        try {
            for (Action a : s.script) {
                if (a.kind == Action::Kind::AdvInput || a.kind == Action::Kind::AdvOutput) {
                    bool ok = false;
                    auto r = adversary_channel(m_, cfg.knowledge, cfg.procs.at(a.proc), ok);
                    if (!ok) throw NotEnabled("channel not derivable");
                    a.channel = r ? *r : Term();
                }
                if (a.kind == Action::Kind::AdvInput) {
                    auto r = derivable(m_, cfg.knowledge, a.payload);
                    if (!r) throw NotEnabled("payload not derivable");
                    a.payload = *r;
                }
                cfg = step(m_, cfg, a, opt_.engine).first;
                script.push_back(a);
            }
        } catch (const UsageError&) {
            ++stats.rejected_witnesses;
            return false;
        }
        Trace t{cfg.raised, cfg.knowledge, false};
        if (!prop->violated_by(m_, t)) {
            ++stats.rejected_witnesses;
            return false;
        }
        Verdict v;
        v.holds = false;
        v.witness = std::move(t);
        v.script = std::move(script);
        found = std::move(v);
        return true;
    }
};

}  // namespace

void explore(const SymbolicModel& m, const PPtr& p0, const Bounds& b,
             const std::function<bool(const Trace&)>& visit, ExploreOptions opt) {
    opt.merge_states = false;
    Explorer e(m, p0, b, opt);
    e.visit = &visit;
    e.run();
}

Verdict check(const SymbolicModel& m, const PPtr& p0, const Bounds& b, const PropertySpec& prop,
              const ExploreOptions& opt) {
    Explorer e(m, p0, b, opt);
    e.prop = &prop;
    e.run();
    Verdict v = e.found ? std::move(*e.found) : Verdict{};
    v.stats = e.stats;
    return v;
}

Verdict check_secrecy_statverif(SymbolicModel& m, const PPtr& p0, Term secret, const Bounds& b,
                                const ExploreOptions& opt) {
    PPtr h = secrecy_harness(m, p0, secret);
    return check(m, h, b, PropertySpec::absence(Symbol("NotSecret")), opt);
}

// ---------------------------------------------------------------- differential

namespace {

std::string label_of(const SymbolicModel& m, const Knowledge& before, const Action& a, const TraceStep& ts) {
    if (!ts.events.empty()) {
        std::string s = "event";
        for (const EventLabel& e : ts.events) {
            s += " " + e.sym.str() + "(";
            for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? "," : "") + e.args[i].str();
            s += ")";
        }
        return s;
    }
    if (ts.kind == StepKind::Know) return "out " + ts.know.str();
    if (a.kind == Action::Kind::AdvInput) {
        std::string ch = "-";
        if (a.channel.valid())
            if (auto v = apply_recipe(m, before.entries, a.channel)) ch = v->str();
        auto v = apply_recipe(m, before.entries, a.payload);
        return "in " + ch + " " + (v ? v->str() : "?");
    }
    return "";
}

std::vector<std::uint64_t> sv_key(const StatConfig& o) {
    std::vector<std::uint64_t> k;
    std::vector<std::uint64_t> r;
    for (Term t : o.restricted) r.push_back(t.id());
    std::sort(r.begin(), r.end());
    k.insert(k.end(), r.begin(), r.end());
    k.push_back(kSep);
    std::vector<std::vector<std::uint64_t>> parts;
    for (auto& [key, val] : o.cells) parts.push_back({key.id(), val.id()});
    append_sorted(k, std::move(parts));
    parts.clear();
    for (const SvProc& p : o.procs) parts.push_back(closure_key(p.c, p.locked ? 1 : 0));
    append_sorted(k, std::move(parts));
    for (Term t : o.knowledge.entries) k.push_back(t.id());
    k.push_back(kSep);
    for (auto& [uid, n] : o.unfolds) {
        k.push_back(uid);
        k.push_back(n);
    }
    return k;
}

// Input actions expanded over the knowledge entries (one recipe per distinct
// value); `only` restricts inputs to a single payload recipe.
template <class Cfg>
std::vector<Action> expand_inputs(const std::vector<Action>& acts, const Cfg& cfg, const Action* only) {
    std::vector<Action> out;
    for (const Action& a : acts) {
        if (a.kind != Action::Kind::AdvInput) {
            out.push_back(a);
            continue;
        }
        if (only) {
            if (only->kind == Action::Kind::AdvInput) out.push_back(Action::input(a.proc, a.channel, only->payload));
            continue;
        }
        std::vector<Term> seen;
        for (std::size_t i = 0; i < cfg.knowledge.size(); ++i) {
            Term v = cfg.knowledge.entries[i];
            if (std::find(seen.begin(), seen.end(), v) != seen.end()) continue;
            seen.push_back(v);
            out.push_back(Action::input(a.proc, a.channel, handle(i)));
        }
    }
    return out;
}

class Differ {
public:
    Differ(const SymbolicModel& m, const PPtr& p0, const DiffOptions& opt)
        : m_(m), p0_(p0), opt_(opt), enc_(p0, opt.encode) {
        token_ = Term::nonce(kLockTokenId, NonceSort::Protocol, enc_.lock_name());
    }

    DiffReport run() {
        DiffReport rep;
        std::deque<StatConfig> queue;
        std::unordered_set<std::vector<std::uint64_t>, KeyHash> seen;
        StatConfig init = sv_initial_config(p0_);
        seen.insert(sv_key(init));
        queue.push_back(std::move(init));
        std::size_t index = 0;
        while (!queue.empty() && index < opt_.max_configs) {
            StatConfig o1 = std::move(queue.front());
            queue.pop_front();
            SapicConfig c1 = encode(o1);
            for (auto& [a, o2, label] : sv_successors(o1, nullptr, true)) {
                ++rep.forward_edges;
                if (!forward(c1, a, label, encode(o2)))
                    rep.unmatched.push_back({"forward", index, a.str(), label,
                                             "no SAPIC run with this label reaches the encoded successor within " +
                                                 std::to_string(opt_.max_extension) + " steps"});
                if (seen.insert(sv_key(o2)).second) queue.push_back(std::move(o2));
            }
            std::map<std::string, KeySet> goals;
            for (const Action& a : expand_inputs(enabled_actions(m_, c1), c1, nullptr)) {
                SapicConfig c2;
                TraceStep ts;
                try {
                    std::tie(c2, ts) = step(m_, c1, a);
                } catch (const NotEnabled&) {
                    continue;
                }
                ++rep.backward_edges;
                std::string label = label_of(m_, c1.knowledge, a, ts);
                auto g = goals.find(label);
                if (g == goals.end()) g = goals.emplace(label, targets(o1, a, label)).first;
                if (!backward(g->second, c2)) rep.unmatched.push_back({"backward", index, a.str(), label, reason(c1, a, c2)});
            }
            ++index;
        }
        rep.statverif_configs = index;
        rep.sapic_configs = sapic_seen_.size();
        return rep;
    }

private:
    const SymbolicModel& m_;
    PPtr p0_;
    DiffOptions opt_;
    Encoder enc_;
    Term token_;
    KeySet sapic_seen_;

    SapicConfig encode(const StatConfig& o) {
        SapicConfig c = enc_.encode_config(o, token_);
        sapic_seen_.insert(config_key(c));
        return c;
    }

    struct SvEdge {
        Action a;
        StatConfig o2;
        std::string label;
    };

    std::vector<SvEdge> sv_successors(const StatConfig& o, const Action* only, bool bounded) {
        std::vector<SvEdge> out;
        for (const Action& a : expand_inputs(sv_enabled_actions(m_, o), o, only)) {
            const Closure& c = o.procs[a.proc].c;
            if (bounded && a.kind == Action::Kind::Schedule && c.node->kind == PKind::Repl) {
                auto it = o.unfolds.find(c.node->uid);
                if (it != o.unfolds.end() && static_cast<int>(it->second) >= opt_.max_repl_unfold) continue;
            }
            try {
                auto [o2, ts] = sv_step(m_, o, a);
                out.push_back({a, std::move(o2), label_of(m_, o.knowledge, a, ts)});
            } catch (const NotEnabled&) {
            }
        }
        return out;
    }

    // SAPIC run from c1 with labels silent* α silent* ending in `target`.
    bool forward(const SapicConfig& c1, const Action& a, const std::string& alpha, const SapicConfig& target) {
        auto goal = config_key(target);
        struct Node {
            SapicConfig c;
            bool matched;
            int depth;
        };
        std::deque<Node> q;
        std::set<std::pair<std::vector<std::uint64_t>, bool>> seen;
        q.push_back({c1, alpha.empty(), 0});
        std::size_t budget = opt_.max_search;
        while (!q.empty() && budget--) {
            Node n = std::move(q.front());
            q.pop_front();
            auto key = config_key(n.c);
            if (n.matched && key == goal) return true;
            if (!seen.insert({key, n.matched}).second) continue;
            sapic_seen_.insert(key);
            if (n.depth >= opt_.max_extension) continue;
            for (const Action& b : expand_inputs(enabled_actions(m_, n.c), n.c, &a)) {
                try {
                    auto [c2, ts] = step(m_, n.c, b);
                    std::string l = label_of(m_, n.c.knowledge, b, ts);
                    if (l.empty()) q.push_back({std::move(c2), n.matched, n.depth + 1});
                    else if (!n.matched && l == alpha) q.push_back({std::move(c2), true, n.depth + 1});
                } catch (const NotEnabled&) {
                }
            }
        }
        return false;
    }

    // Encoded configurations of StatVerif runs from o1 labelled silent* α silent*.
    KeySet targets(const StatConfig& o1, const Action& a, const std::string& alpha) {
        KeySet out;
        struct Node {
            StatConfig o;
            bool matched;
            int depth;
        };
        std::deque<Node> q;
        std::set<std::pair<std::vector<std::uint64_t>, bool>> seen;
        q.push_back({o1, alpha.empty(), 0});
        std::size_t budget = opt_.max_search;
        while (!q.empty() && budget--) {
            Node n = std::move(q.front());
            q.pop_front();
            if (!seen.insert({sv_key(n.o), n.matched}).second) continue;
            if (n.matched) out.insert(config_key(enc_.encode_config(n.o, token_)));
            if (n.depth >= opt_.max_extension) continue;
            for (auto& e : sv_successors(n.o, &a, false)) {
                if (e.label.empty()) q.push_back({std::move(e.o2), n.matched, n.depth + 1});
                else if (!n.matched && e.label == alpha) q.push_back({std::move(e.o2), true, n.depth + 1});
            }
        }
        return out;
    }

    bool backward(const KeySet& goals, const SapicConfig& c2) {
        if (goals.empty()) return false;
        std::deque<std::pair<SapicConfig, int>> q;
        KeySet seen;
        q.emplace_back(c2, 0);
        std::size_t budget = opt_.max_search;
        while (!q.empty() && budget--) {
            auto [c, depth] = std::move(q.front());
            q.pop_front();
            auto key = config_key(c);
            if (goals.count(key)) return true;
            if (!seen.insert(key).second) continue;
            sapic_seen_.insert(key);
            if (depth >= opt_.max_extension) continue;
            for (const Action& b : enabled_actions(m_, c)) {
                if (b.kind != Action::Kind::Schedule && b.kind != Action::Kind::Comm) continue;
                try {
                    auto [c3, ts] = step(m_, c, b);
                    if (label_of(m_, c.knowledge, b, ts).empty()) q.emplace_back(std::move(c3), depth + 1);
                } catch (const NotEnabled&) {
                }
            }
        }
        return false;
    }

    bool lookup_miss_under_lock(const SapicConfig& c, const Action& a) const {
        if (a.kind != Action::Kind::Schedule || c.locks.empty()) return false;
        const Closure& p = c.procs.at(a.proc);
        if (p.node->kind != PKind::Lookup) return false;
        auto k = eval_in(m_, p.node->t1, p.env);
        if (!k) return false;
        for (auto& [key, val] : c.cells)
            if (key == *k) return false;
        return true;
    }

    std::string reason(const SapicConfig& c1, const Action& a, const SapicConfig& c2) const {
        if (lookup_miss_under_lock(c1, a))
            return "lookup of an uninitialized cell takes the implicit else branch while the lock is held";
        // The step may only lead there: look a few silent steps ahead.
        std::deque<std::pair<SapicConfig, int>> q;
        q.emplace_back(c2, 0);
        std::size_t budget = opt_.max_search;
        while (!q.empty() && budget--) {
            auto [c, depth] = std::move(q.front());
            q.pop_front();
            for (const Action& b : enabled_actions(m_, c)) {
                if (b.kind != Action::Kind::Schedule && b.kind != Action::Kind::Comm) continue;
                if (lookup_miss_under_lock(c, b))
                    return "step leads to a lookup of an uninitialized cell whose implicit else branch keeps the lock held";
                if (depth + 1 >= opt_.max_extension) continue;
                try {
                    auto [c3, ts] = step(m_, c, b);
                    if (label_of(m_, c.knowledge, b, ts).empty()) q.emplace_back(std::move(c3), depth + 1);
                } catch (const NotEnabled&) {
                }
            }
        }
        return "no StatVerif run with this label reaches an encoded configuration within " +
               std::to_string(opt_.max_extension) + " steps";
    }
};

}  // namespace

DiffReport differential_statverif(const SymbolicModel& m, const PPtr& p0, const DiffOptions& opt) {
    Differ d(m, p0, opt);
    return d.run();
}

std::string DiffReport::str() const {
    std::ostringstream os;
    os << "statverif configurations: " << statverif_configs << "\n"
       << "sapic configurations: " << sapic_configs << "\n"
       << "forward edges: " << forward_edges << "\n"
       << "backward edges: " << backward_edges << "\n"
       << "unmatched: " << unmatched.size() << "\n";
    for (const DiffEdge& e : unmatched)
        os << "  " << e.direction << " config " << e.config << " " << e.action
           << (e.label.empty() ? "" : " [" + e.label + "]") << ": " << e.reason << "\n";
    return os.str();
}

}  // namespace spi
