#include "statepi/statverif.hpp"

#include <algorithm>
#include <set>

namespace spi {

namespace {

// Flattens parallel composition. Nil is dropped unless it still holds the lock.
void sv_flatten(const Closure& c, bool locked, std::vector<SvProc>& out) {
    switch (c.node->kind) {
        case PKind::Nil:
            if (locked) out.push_back({c, true});
            return;
        case PKind::Par:
            if (locked) throw UsageError("parallel composition while holding the lock");
            sv_flatten(close(c.node->p, c.env), false, out);
            sv_flatten(close(c.node->q, c.env), false, out);
            return;
        default: out.push_back({c, locked});
    }
}

std::vector<SvProc> sv_comps(const Closure& c, bool locked) {
    std::vector<SvProc> out;
    sv_flatten(c, locked, out);
    return out;
}

std::vector<SvProc> rebuild(const std::vector<SvProc>& procs, const std::map<std::size_t, std::vector<SvProc>>& repl) {
    std::vector<SvProc> out, tail;
    for (std::size_t k = 0; k < procs.size(); ++k) {
        auto it = repl.find(k);
        if (it == repl.end()) {
            out.push_back(procs[k]);
            continue;
        }
        if (it->second.empty()) continue;
        out.push_back(it->second[0]);
        tail.insert(tail.end(), it->second.begin() + 1, it->second.end());
    }
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

std::optional<std::size_t> find_cell(const SymbolicModel& m, const StatConfig& cfg, Term s) {
    for (std::size_t i = 0; i < cfg.cells.size(); ++i)
        if (terms_equal(m, cfg.cells[i].first, s)) return i;
    return std::nullopt;
}

bool others_unlocked(const StatConfig& cfg, std::size_t self) {
    for (std::size_t i = 0; i < cfg.procs.size(); ++i)
        if (i != self && cfg.procs[i].locked) return false;
    return true;
}

void collect_symbols(const PPtr& p, std::set<Symbol>& out) {
    if (!p) return;
    const Process& n = *p;
    auto term = [&](Term t) {
        if (!t.valid()) return;
        for (Symbol s : term_vars(t)) out.insert(s);
        for (Symbol s : term_names(t)) out.insert(s);
    };
    if (!n.bound.empty()) out.insert(n.bound);
    term(n.t1);
    term(n.t2);
    for (const auto& e : n.events)
        for (Term a : e.args) term(a);
    for (const auto* fs : {&n.lhs, &n.rhs})
        for (const Fact& f : *fs)
            for (Term a : f.args) term(a);
    for (Symbol s : n.bound_vars) out.insert(s);
    collect_symbols(n.p, out);
    collect_symbols(n.q, out);
}

// Removes the restriction of `name`, which must occur exactly once and not
// below a replication.
PPtr drop_binder(const PPtr& p, Symbol name, bool under_repl, int& found) {
    if (!p) return p;
    const Process& n = *p;
    if (n.kind == PKind::New && n.bound == name) {
        if (under_repl) throw UsageError("secret name " + name.str() + " is restricted below a replication");
        ++found;
        return drop_binder(n.p, name, under_repl, found);
    }
    bool repl = under_repl || n.kind == PKind::Repl;
    PPtr a = drop_binder(n.p, name, repl, found), b = drop_binder(n.q, name, repl, found);
    if (a == n.p && b == n.q) return p;
    return with_children(n, a, b);
}

}  // namespace

bool StatConfig::lock_held() const {
    return std::any_of(procs.begin(), procs.end(), [](const SvProc& p) { return p.locked; });
}

StatConfig sv_initial_config(const PPtr& p0) {
    if (auto fv = free_vars(p0); !fv.empty()) throw UsageError("process is not closed: free variable " + fv[0].str());
    StatConfig cfg;
    std::vector<Symbol> fn = free_names(p0);
    std::sort(fn.begin(), fn.end(), [](Symbol a, Symbol b) { return a.str() < b.str(); });
    for (Symbol s : fn) {
        Term n = cfg.nonces.fresh(NonceSort::Protocol, s);
        cfg.free_names.emplace_back(s, n);
        cfg.knowledge.add(n);
    }
    std::sort(cfg.free_names.begin(), cfg.free_names.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    sv_flatten(close(p0, cfg.free_names), false, cfg.procs);
    return cfg;
}

std::vector<Action> sv_enabled_actions(const SymbolicModel& m, const StatConfig& cfg) {
    std::vector<Action> out;
    for (std::size_t i = 0; i < cfg.procs.size(); ++i) {
        const Closure& c = cfg.procs[i].c;
        switch (c.node->kind) {
            case PKind::Nil: break;
            case PKind::Out: {
                bool ok = false;
                auto r = adversary_channel(m, cfg.knowledge, c, ok);
                if (ok && eval_in(m, c.node->t2, c.env)) out.push_back(Action::output(i, r ? *r : Term()));
                break;
            }
            case PKind::In: {
                bool ok = false;
                auto r = adversary_channel(m, cfg.knowledge, c, ok);
                if (ok && !c.node->t2.valid()) out.push_back(Action::input(i, r ? *r : Term(), Term()));
                break;
            }
            default:
                try {
                    sv_step(m, cfg, Action::schedule(i));
                    out.push_back(Action::schedule(i));
                } catch (const NotEnabled&) {
                }
        }
    }
    for (std::size_t i = 0; i < cfg.procs.size(); ++i) {
        const Closure& s = cfg.procs[i].c;
        if (s.node->kind != PKind::Out || !eval_in(m, s.node->t2, s.env)) continue;
        for (std::size_t j = 0; j < cfg.procs.size(); ++j) {
            const Closure& r = cfg.procs[j].c;
            if (j == i || r.node->kind != PKind::In || r.node->t2.valid()) continue;
            if (same_channel(m, s, r)) out.push_back(Action::comm(i, j));
        }
    }
    return out;
}

std::pair<StatConfig, TraceStep> sv_step(const SymbolicModel& m, const StatConfig& cfg, const Action& a) {
    if (a.proc >= cfg.procs.size()) throw NotEnabled("no process " + std::to_string(a.proc));
    StatConfig next = cfg;
    TraceStep ts;
    ts.action = a;
    const SvProc& me = cfg.procs[a.proc];
    const Closure& c = me.c;
    const Process& n = *c.node;
    std::map<std::size_t, std::vector<SvProc>> repl;
    auto then = [&](const PPtr& p, bool locked, std::initializer_list<std::pair<Symbol, Term>> extra = {}) {
        repl[a.proc] = sv_comps(close(p, c.env, extra), locked);
    };

    switch (a.kind) {
        case Action::Kind::AdvOutput: {
            if (n.kind != PKind::Out) throw NotEnabled("process is not an output");
            check_channel(m, cfg.knowledge, c, a.channel);
            Term msg = must_eval(m, n.t2, c.env, "message");
            next.knowledge.add(msg);
            ts.kind = StepKind::Know;
            ts.know = msg;
            then(n.p, me.locked);
            break;
        }
        case Action::Kind::AdvInput: {
            if (n.kind != PKind::In) throw NotEnabled("process is not an input");
            if (n.t2.valid()) throw UsageError("pattern inputs are not supported");
            check_channel(m, cfg.knowledge, c, a.channel);
            if (!a.payload.valid() || !valid_recipe(a.payload, cfg.knowledge.size()))
                throw NotEnabled("payload is not an adversary recipe");
            auto v = apply_recipe(m, cfg.knowledge.entries, a.payload);
            if (!v) throw NotEnabled("payload recipe evaluates to bottom");
            then(n.p, me.locked, {{n.bound, *v}});
            break;
        }
        case Action::Kind::Comm: {
            if (a.other >= cfg.procs.size() || a.other == a.proc) throw NotEnabled("bad receiver");
            const SvProc& r = cfg.procs[a.other];
            if (n.kind != PKind::Out || r.c.node->kind != PKind::In || r.c.node->t2.valid())
                throw NotEnabled("comm needs an output and an input");
            if (!same_channel(m, c, r.c)) throw NotEnabled("channels differ");
            Term msg = must_eval(m, n.t2, c.env, "message");
            then(n.p, me.locked);
            repl[a.other] = sv_comps(close(r.c.node->p, r.c.env, {{r.c.node->bound, msg}}), r.locked);
            break;
        }
        case Action::Kind::Schedule:
            switch (n.kind) {
                case PKind::Nil: throw NotEnabled("terminated process holds the lock");
                case PKind::Par: repl[a.proc] = sv_comps(c, me.locked); break;
                case PKind::Repl: {
                    if (me.locked) throw UsageError("replication while holding the lock");
                    ++next.unfolds[n.uid];
                    std::vector<SvProc> v{me};
                    sv_flatten(close(n.p, c.env), false, v);
                    repl[a.proc] = std::move(v);
                    break;
                }
                case PKind::New: {
                    Term nonce = next.nonces.fresh(NonceSort::Protocol, n.bound);
                    next.restricted.push_back(nonce);
                    then(n.p, me.locked, {{n.bound, nonce}});
                    break;
                }
                case PKind::Let: {
                    auto v = eval_in(m, n.t1, c.env);
                    if (v && !n.bound.empty()) then(n.p, me.locked, {{n.bound, *v}});
                    else if (v) then(n.p, me.locked);
                    else then(n.q, me.locked);
                    break;
                }
                case PKind::Event: {
                    ts.kind = StepKind::Event;
                    ts.events.push_back(eval_label(m, n.events.at(0), c.env));
                    then(n.p, me.locked);
                    break;
                }
                case PKind::SvInit: {
                    if (me.locked) throw NotEnabled("cell initialization while holding the lock");
                    Term s = must_eval(m, n.t1, c.env, "cell");
                    Term v = must_eval(m, n.t2, c.env, "cell value");
                    if (std::find(cfg.restricted.begin(), cfg.restricted.end(), s) == cfg.restricted.end())
                        throw NotEnabled("cell " + s.str() + " is not a restricted name");
                    if (find_cell(m, cfg, s)) throw NotEnabled("cell " + s.str() + " is already initialized");
                    next.cells.emplace_back(s, v);
                    repl[a.proc] = {};
                    break;
                }
                case PKind::SvAssign: {
                    Term s = must_eval(m, n.t1, c.env, "cell");
                    Term v = must_eval(m, n.t2, c.env, "cell value");
                    auto i = find_cell(m, cfg, s);
                    if (!i) throw NotEnabled("cell " + s.str() + " is not initialized");
                    if (!others_unlocked(cfg, a.proc)) throw NotEnabled("another process holds the lock");
                    next.cells[*i].second = v;
                    then(n.p, me.locked);
                    break;
                }
                case PKind::SvRead: {
                    Term s = must_eval(m, n.t1, c.env, "cell");
                    auto i = find_cell(m, cfg, s);
                    if (!i) throw NotEnabled("cell " + s.str() + " is not initialized");
                    if (!others_unlocked(cfg, a.proc)) throw NotEnabled("another process holds the lock");
                    then(n.p, me.locked, {{n.bound, cfg.cells[*i].second}});
                    break;
                }
                case PKind::SvLock:
                    if (me.locked) throw NotEnabled("lock is already held by this process");
                    if (!others_unlocked(cfg, a.proc)) throw NotEnabled("another process holds the lock");
                    then(n.p, true);
                    break;
                case PKind::SvUnlock:
                    if (!me.locked) throw NotEnabled("unlock without holding the lock");
                    then(n.p, false);
                    break;
                case PKind::Out:
                case PKind::In: throw NotEnabled("communication needs an adversary or comm action");
                default: throw UsageError(std::string(kind_name(n.kind)) + " is not a StatVerif construct");
            }
            break;
    }
    next.procs = rebuild(cfg.procs, repl);
    next.raised.push_back(ts);
    return {std::move(next), std::move(ts)};
}

StatConfig sv_replay(const SymbolicModel& m, const PPtr& p0, const std::vector<Action>& script) {
    StatConfig cfg = sv_initial_config(p0);
    for (std::size_t i = 0; i < script.size(); ++i) {
        try {
            cfg = sv_step(m, cfg, script[i]).first;
        } catch (const NotEnabled& e) {
            throw UsageError("action " + std::to_string(i) + " (" + script[i].str() + ") is not enabled: " + e.what());
        }
    }
    return cfg;
}

Trace sv_run_trace(const SymbolicModel& m, const PPtr& p0, const std::vector<Action>& script) {
    StatConfig cfg = sv_replay(m, p0, script);
    return Trace{cfg.raised, cfg.knowledge, false};
}

Encoder::Encoder(const PPtr& root, EncodeOptions opt) : opt_(opt) {
    std::set<Symbol> syms;
    collect_symbols(root, syms);
    taken_.assign(syms.begin(), syms.end());
    lock_ = fresh("l");
}

Symbol Encoder::fresh(const std::string& base) {
    for (int k = 0;; ++k) {
        Symbol s(k == 0 ? base : base + "_" + std::to_string(k));
        if (std::find(taken_.begin(), taken_.end(), s) == taken_.end()) {
            taken_.push_back(s);
            return s;
        }
    }
}

PPtr Encoder::encode(const PPtr& p, bool b) {
    auto key = std::make_pair(p.get(), b);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second.second;

    const Process& n = *p;
    Term l = lock_term();
    auto unreachable = [&]() -> PPtr {
        throw UsageError(std::string(kind_name(n.kind)) + " under the lock: unreachable under lock discipline");
    };
    auto unlock = [&](PPtr k) { return opt_.drop_unlock ? k : make_unlock(l, std::move(k)); };
    auto cell_var = [&]() {
        std::string base = n.t1.kind() == TermKind::Name ? "x_" + n.t1.symbol().str() : "x_s";
        auto it = cell_vars_.find(base);
        if (it == cell_vars_.end()) it = cell_vars_.emplace(base, fresh(base)).first;
        return it->second;
    };

    PPtr out;
    switch (n.kind) {
        case PKind::Nil: out = make_nil(); break;
        case PKind::Par:
            out = b ? unreachable() : make_par(encode(n.p, false), encode(n.q, false));
            break;
        case PKind::Repl: out = b ? unreachable() : make_repl(encode(n.p, false)); break;
        case PKind::New:
        case PKind::Out:
        case PKind::In:
        case PKind::Event: out = with_children(n, encode(n.p, b), nullptr); break;
        case PKind::Let: out = with_children(n, encode(n.p, b), encode(n.q, b)); break;
        case PKind::SvInit: out = b ? unreachable() : make_insert(n.t1, n.t2, make_nil()); break;
        case PKind::SvLock: out = b ? unreachable() : make_lock(l, encode(n.p, true)); break;
        case PKind::SvUnlock: out = b ? unlock(encode(n.p, false)) : unreachable(); break;
        case PKind::SvAssign: {
            Symbol x = cell_var();
            PPtr rest = b ? encode(n.p, true) : unlock(encode(n.p, false));
            PPtr body = make_lookup(n.t1, x, make_insert(n.t1, n.t2, rest), nullptr, false);
            out = b ? body : make_lock(l, body);
            break;
        }
        case PKind::SvRead: {
            PPtr rest = b ? encode(n.p, true) : unlock(encode(n.p, false));
            PPtr body = make_lookup(n.t1, n.bound, rest, nullptr, false);
            out = b ? body : make_lock(l, body);
            break;
        }
        default:
            throw UsageError(std::string(kind_name(n.kind)) + " is already SAPIC dialect");
    }
    memo_[key] = {p, out};
    return out;
}

SapicConfig Encoder::encode_config(const StatConfig& o, Term token) {
    SapicConfig cfg;
    cfg.restricted = o.restricted;
    cfg.cells = o.cells;
    for (const SvProc& sp : o.procs)
        flatten(close(encode(sp.c.node, sp.locked), sp.c.env, {{lock_, token}}), cfg.procs);
    cfg.knowledge = o.knowledge;
    if (o.lock_held()) cfg.locks.push_back(token);
    for (auto& [key, val] : memo_)
        if (val.first->kind == PKind::Repl && !key.second)
            if (auto it = o.unfolds.find(val.first->uid); it != o.unfolds.end()) cfg.unfolds[val.second->uid] = it->second;
    cfg.nonces = o.nonces;
    cfg.free_names = o.free_names;
    cfg.free_names.emplace_back(lock_, token);
    std::sort(cfg.free_names.begin(), cfg.free_names.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return cfg;
}

PPtr encode_process(const PPtr& p, bool b, EncodeOptions opt) {
    Encoder e(p, opt);
    return e.encode(p, b);
}

void ensure_equal(SymbolicModel& m) {
    Symbol eq("equal");
    if (m.find(eq)) return;
    m.add_destructor(eq, 2);
    Term x = Term::var(Symbol("x"));
    m.add_rule({eq, {x, x}, x});
}

PPtr secrecy_harness(SymbolicModel& m, const PPtr& p0, Term secret, EncodeOptions opt) {
    if (!term_vars(secret).empty()) throw UsageError("secret term has variables: " + secret.str());
    ensure_equal(m);
    std::set<Symbol> syms;
    collect_symbols(p0, syms);
    for (Symbol s : term_names(secret)) syms.insert(s);
    auto fresh = [&](const std::string& base) {
        for (int k = 0;; ++k) {
            Symbol s(k == 0 ? base : base + "_" + std::to_string(k));
            if (syms.insert(s).second) return s;
        }
    };
    // Restricted names of the secret scope over the probe as well.
    std::vector<Symbol> fn = free_names(p0), hoisted;
    PPtr body = p0;
    for (Symbol s : term_names(secret)) {
        if (std::find(fn.begin(), fn.end(), s) != fn.end()) continue;
        int found = 0;
        body = drop_binder(body, s, false, found);
        if (found > 1) throw UsageError("secret name " + s.str() + " is restricted more than once");
        if (found == 1) hoisted.push_back(s);
    }
    Symbol att = fresh("attch"), x = fresh("x"), y = fresh("y");
    PPtr probe = make_in(Term::name(att), x,
                         make_let(y, Term::app(Symbol("equal"), {Term::var(x), secret}),
                                  make_event({Symbol("NotSecret"), {}}, make_nil()), nullptr, false));
    PPtr whole = make_par(probe, body);
    for (auto it = hoisted.rbegin(); it != hoisted.rend(); ++it) whole = make_new(*it, whole);
    return encode_process(whole, false, opt);
}

}  // namespace spi
