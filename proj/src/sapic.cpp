#include "statepi/sapic.hpp"

#include <algorithm>
#include <map>

namespace spi {

namespace {

// Rebuilds the process list: slot k is replaced by the first component of
// repl[k] (or dropped if empty), further components go to the end.
std::vector<Closure> rebuild(const std::vector<Closure>& procs, const std::map<std::size_t, std::vector<Closure>>& repl) {
    std::vector<Closure> out, tail;
    out.reserve(procs.size() + 2);
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

std::vector<Closure> comps(const Closure& c) {
    std::vector<Closure> out;
    flatten(c, out);
    return out;
}

struct Matcher {
    const SymbolicModel& m;
    const std::vector<Fact>& lhs;
    const std::vector<Fact>& ms;
    bool greedy;
    std::vector<std::size_t> order;
    std::vector<char> used;
    MatchResult res;

    bool fact(const Fact& pat, const Fact& f, Substitution& tau) {
        if (pat.sym != f.sym || pat.persistent != f.persistent || pat.args.size() != f.args.size()) return false;
        for (std::size_t i = 0; i < pat.args.size(); ++i) {
            Term p = pat.args[i], t = f.args[i];
            if (p.is_var()) {
                auto it = tau.find(p);
                if (it == tau.end()) tau.emplace(p, t);
                else if (!terms_equal(m, it->second, t)) return false;
            } else if (!terms_equal(m, p, t)) {
                return false;
            }
        }
        return true;
    }

    bool go(std::size_t k) {
        if (k == order.size()) return true;
        const Fact& pat = lhs[order[k]];
        for (std::size_t i = 0; i < ms.size(); ++i) {
            if (!pat.persistent && used[i]) continue;
            Substitution saved = res.tau;
            if (!fact(pat, ms[i], res.tau)) {
                res.tau = std::move(saved);
                continue;
            }
            if (!pat.persistent) {
                used[i] = 1;
                res.consumed.push_back(i);
            }
            if (go(k + 1)) return true;
            if (!pat.persistent) {
                used[i] = 0;
                res.consumed.pop_back();
            }
            res.tau = std::move(saved);
            if (greedy) return false;
        }
        return false;
    }
};

// Left side with everything but the pattern variables replaced by values.
std::vector<Fact> instantiate_lhs(const SymbolicModel& m, const Process& n, const Bindings& env) {
    std::vector<Fact> out;
    auto pattern = [&](Symbol s) { return std::binary_search(n.bound_vars.begin(), n.bound_vars.end(), s); };
    for (const Fact& f : n.lhs) {
        Fact g{f.sym, f.persistent, {}};
        for (Term a : f.args) {
            if (a.is_var() && pattern(a.symbol())) {
                g.args.push_back(a);
                continue;
            }
            for (Symbol v : term_vars(a))
                if (pattern(v)) throw UsageError("pattern variable " + v.str() + " below a function symbol");
            g.args.push_back(must_eval(m, a, env, "fact argument"));
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace

std::optional<std::size_t> f_mem(const SymbolicModel& m, std::span<const Term> set, Term t) {
    for (std::size_t i = 0; i < set.size(); ++i)
        if (terms_equal(m, set[i], t)) return i;
    return std::nullopt;
}

std::optional<MatchResult> f_match(const SymbolicModel& m, const std::vector<Fact>& lhs,
                                   const std::vector<Fact>& msstate, bool greedy) {
    for (const Fact& f : lhs)
        for (Term a : f.args)
            if (!a.is_var() && !term_vars(a).empty())
                throw UsageError("fact " + f.sym.str() + " has a variable below a function symbol");
    Matcher mt{m, lhs, msstate, greedy, {}, std::vector<char>(msstate.size(), 0), {}};
    for (std::size_t i = 0; i < lhs.size(); ++i)
        if (!lhs[i].persistent) mt.order.push_back(i);
    for (std::size_t i = 0; i < lhs.size(); ++i)
        if (lhs[i].persistent) mt.order.push_back(i);
    if (!mt.go(0)) return std::nullopt;
    return std::move(mt.res);
}

SapicConfig initial_config(const PPtr& p0) {
    if (auto fv = free_vars(p0); !fv.empty()) throw UsageError("process is not closed: free variable " + fv[0].str());
    SapicConfig cfg;
    std::vector<Symbol> fn = free_names(p0);
    std::sort(fn.begin(), fn.end(), [](Symbol a, Symbol b) { return a.str() < b.str(); });
    for (Symbol s : fn) {
        Term n = cfg.nonces.fresh(NonceSort::Protocol, s);
        cfg.free_names.emplace_back(s, n);
        cfg.knowledge.add(n);
    }
    std::sort(cfg.free_names.begin(), cfg.free_names.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    flatten(close(p0, cfg.free_names), cfg.procs);
    return cfg;
}

std::vector<Action> enabled_actions(const SymbolicModel& m, const SapicConfig& cfg, const EngineOptions& opt) {
    std::vector<Action> out;
    for (std::size_t i = 0; i < cfg.procs.size(); ++i) {
        const Closure& c = cfg.procs[i];
        switch (c.node->kind) {
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
            case PKind::New:
            case PKind::Let:
            case PKind::Repl:
            case PKind::Unlock:
            case PKind::Delete:
                out.push_back(Action::schedule(i));
                break;
            default:
                if (is_statverif_kind(c.node->kind)) break;
                try {
                    step(m, cfg, Action::schedule(i), opt);
                    out.push_back(Action::schedule(i));
                } catch (const NotEnabled&) {
                }
        }
    }
    for (std::size_t i = 0; i < cfg.procs.size(); ++i) {
        const Closure& s = cfg.procs[i];
        if (s.node->kind != PKind::Out || !eval_in(m, s.node->t2, s.env)) continue;
        for (std::size_t j = 0; j < cfg.procs.size(); ++j) {
            const Closure& r = cfg.procs[j];
            if (j == i || r.node->kind != PKind::In || r.node->t2.valid()) continue;
            if (same_channel(m, s, r)) out.push_back(Action::comm(i, j));
        }
    }
    return out;
}

std::pair<SapicConfig, TraceStep> step(const SymbolicModel& m, const SapicConfig& cfg, const Action& a,
                                       const EngineOptions& opt) {
    if (a.proc >= cfg.procs.size()) throw NotEnabled("no process " + std::to_string(a.proc));
    SapicConfig next = cfg;
    TraceStep ts;
    ts.action = a;
    const Closure& c = cfg.procs[a.proc];
    const Process& n = *c.node;
    std::map<std::size_t, std::vector<Closure>> repl;
    auto then = [&](const PPtr& p, std::initializer_list<std::pair<Symbol, Term>> extra = {}) {
        repl[a.proc] = comps(close(p, c.env, extra));
    };

    switch (a.kind) {
        case Action::Kind::AdvOutput: {
            if (n.kind != PKind::Out) throw NotEnabled("process is not an output");
            check_channel(m, cfg.knowledge, c, a.channel);
            Term msg = must_eval(m, n.t2, c.env, "message");
            next.knowledge.add(msg);
            ts.kind = StepKind::Know;
            ts.know = msg;
            then(n.p);
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
            then(n.p, {{n.bound, *v}});
            break;
        }
        case Action::Kind::Comm: {
            if (a.other >= cfg.procs.size() || a.other == a.proc) throw NotEnabled("bad receiver");
            const Closure& r = cfg.procs[a.other];
            if (n.kind != PKind::Out || r.node->kind != PKind::In || r.node->t2.valid())
                throw NotEnabled("comm needs an output and an input");
            if (!same_channel(m, c, r)) throw NotEnabled("channels differ");
            Term msg = must_eval(m, n.t2, c.env, "message");
            then(n.p);
            repl[a.other] = comps(close(r.node->p, r.env, {{r.node->bound, msg}}));
            break;
        }
        case Action::Kind::Schedule:
            switch (n.kind) {
                case PKind::Nil:
                case PKind::Par: repl[a.proc] = comps(c); break;
                case PKind::Repl: {
                    ++next.unfolds[n.uid];
                    std::vector<Closure> v{c};
                    flatten(close(n.p, c.env), v);
                    repl[a.proc] = std::move(v);
                    break;
                }
                case PKind::New: {
                    Term nonce = next.nonces.fresh(NonceSort::Protocol, n.bound);
                    next.restricted.push_back(nonce);
                    then(n.p, {{n.bound, nonce}});
                    break;
                }
                case PKind::Let: {
                    auto v = eval_in(m, n.t1, c.env);
                    if (v && !n.bound.empty()) then(n.p, {{n.bound, *v}});
                    else if (v) then(n.p);
                    else then(n.q);
                    break;
                }
                case PKind::Event: {
                    ts.kind = StepKind::Event;
                    ts.events.push_back(eval_label(m, n.events.at(0), c.env));
                    then(n.p);
                    break;
                }
                case PKind::Insert: {
                    Term k = must_eval(m, n.t1, c.env, "cell key");
                    Term v = must_eval(m, n.t2, c.env, "cell value");
                    std::vector<Term> keys;
                    for (auto& [key, val] : next.cells) keys.push_back(key);
                    if (auto i = f_mem(m, keys, k)) next.cells.erase(next.cells.begin() + *i);
                    next.cells.emplace_back(k, v);
                    then(n.p);
                    break;
                }
                case PKind::Delete: {
                    auto k = eval_in(m, n.t1, c.env);
                    if (k) {
                        std::vector<Term> keys;
                        for (auto& [key, val] : next.cells) keys.push_back(key);
                        if (auto i = f_mem(m, keys, *k)) next.cells.erase(next.cells.begin() + *i);
                    }
                    then(n.p);
                    break;
                }
                case PKind::Lookup: {
                    Term k = must_eval(m, n.t1, c.env, "cell key");
                    std::vector<Term> keys;
                    for (auto& [key, val] : cfg.cells) keys.push_back(key);
                    if (auto i = f_mem(m, keys, k)) then(n.p, {{n.bound, cfg.cells[*i].second}});
                    else then(n.q);
                    break;
                }
                case PKind::Lock: {
                    Term k = must_eval(m, n.t1, c.env, "lock term");
                    if (f_mem(m, cfg.locks, k)) throw NotEnabled("lock " + k.str() + " is held");
                    next.locks.push_back(k);
                    then(n.p);
                    break;
                }
                case PKind::Unlock: {
                    auto k = eval_in(m, n.t1, c.env);
                    if (k)
                        if (auto i = f_mem(m, cfg.locks, *k)) next.locks.erase(next.locks.begin() + *i);
                    then(n.p);
                    break;
                }
                case PKind::Msr: {
                    std::vector<Fact> lhs = instantiate_lhs(m, n, c.env);
                    auto match = f_match(m, lhs, cfg.msstate, opt.greedy_match);
                    if (!match) throw NotEnabled("no match for the left side");
                    Bindings env = c.env;
                    for (auto& [var, val] : match->tau) env.emplace_back(var.symbol(), val);
                    std::sort(env.begin(), env.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
                    std::vector<Fact> add;
                    for (const Fact& f : n.rhs) {
                        Fact g{f.sym, f.persistent, {}};
                        for (Term t : f.args) g.args.push_back(must_eval(m, t, env, "fact argument"));
                        add.push_back(std::move(g));
                    }
                    for (const EventLabel& e : n.events) ts.events.push_back(eval_label(m, e, env));
                    std::vector<std::size_t> gone = match->consumed;
                    std::sort(gone.rbegin(), gone.rend());
                    for (std::size_t i : gone) next.msstate.erase(next.msstate.begin() + i);
                    for (Fact& f : add) {
                        if (f.persistent && std::find(next.msstate.begin(), next.msstate.end(), f) != next.msstate.end())
                            continue;
                        next.msstate.push_back(std::move(f));
                    }
                    if (!ts.events.empty()) ts.kind = StepKind::Event;
                    repl[a.proc] = comps(close(n.p, env));
                    break;
                }
                case PKind::Out:
                case PKind::In: throw NotEnabled("communication needs an adversary or comm action");
                default: throw UsageError(std::string(kind_name(n.kind)) + " is not a SAPIC construct");
            }
            break;
    }
    next.procs = rebuild(cfg.procs, repl);
    next.raised.push_back(ts);
    return {std::move(next), std::move(ts)};
}

SapicConfig replay(const SymbolicModel& m, const PPtr& p0, const std::vector<Action>& script,
                   const EngineOptions& opt) {
    SapicConfig cfg = initial_config(p0);
    for (std::size_t i = 0; i < script.size(); ++i) {
        try {
            cfg = step(m, cfg, script[i], opt).first;
        } catch (const NotEnabled& e) {
            throw UsageError("action " + std::to_string(i) + " (" + script[i].str() + ") is not enabled: " + e.what());
        }
    }
    return cfg;
}

Trace run_trace(const SymbolicModel& m, const PPtr& p0, const std::vector<Action>& script,
                const EngineOptions& opt) {
    SapicConfig cfg = replay(m, p0, script, opt);
    return Trace{cfg.raised, cfg.knowledge, false};
}

SapicConfig substitute_config(const SapicConfig& cfg, const Substitution& s) {
    SapicConfig out = cfg;
    auto sub = [&](Term& t) {
        if (t.valid() && t.has_adv_vars()) t = substitute(t, s);
    };
    for (auto& [k, v] : out.cells) {
        sub(k);
        sub(v);
    }
    for (Fact& f : out.msstate)
        for (Term& a : f.args) sub(a);
    for (Closure& c : out.procs) c.env = substitute_bindings(c.env, s);
    for (Term& t : out.knowledge.entries) sub(t);
    for (Term& t : out.locks) sub(t);
    for (TraceStep& st : out.raised) {
        sub(st.know);
        sub(st.action.payload);
        for (EventLabel& e : st.events)
            for (Term& a : e.args) sub(a);
    }
    return out;
}

}  // namespace spi
