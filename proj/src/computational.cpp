#include "statepi/computational.hpp"

#include <algorithm>

namespace spi {

namespace {

constexpr std::uint8_t kNonceTag = 'N';
constexpr std::uint8_t kAppTag = 'A';

std::size_t nonce_len(int k) { return static_cast<std::size_t>((k + 7) / 8); }

void put(Bitstring& out, std::uint64_t v, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Reader {
    const Bitstring& b;
    std::size_t pos = 0;

    bool get(std::uint64_t& v, int bytes) {
        if (b.size() - pos < static_cast<std::size_t>(bytes)) return false;
        v = 0;
        for (int i = 0; i < bytes; ++i) v = (v << 8) | b[pos++];
        return true;
    }
};

std::optional<Term> decode_at(Reader& r, std::size_t end, int k, const std::function<Term(const Bitstring&)>& nonce_term) {
    if (r.pos >= end) return std::nullopt;
    std::uint8_t tag = r.b[r.pos++];
    if (tag == kNonceTag) {
        std::size_t n = nonce_len(k);
        if (end - r.pos < n) return std::nullopt;
        Bitstring bits(r.b.begin() + static_cast<std::ptrdiff_t>(r.pos), r.b.begin() + static_cast<std::ptrdiff_t>(r.pos + n));
        if (k % 8 && bits[0] >> (k % 8)) return std::nullopt;
        r.pos += n;
        return nonce_term(bits);
    }
    if (tag != kAppTag) return std::nullopt;
    std::uint64_t len = 0, arity = 0;
    if (!r.get(len, 2) || end - r.pos < len) return std::nullopt;
    std::string name(r.b.begin() + static_cast<std::ptrdiff_t>(r.pos), r.b.begin() + static_cast<std::ptrdiff_t>(r.pos + len));
    r.pos += len;
    if (name.empty() || !r.get(arity, 2)) return std::nullopt;
    std::vector<Term> args;
    for (std::uint64_t i = 0; i < arity; ++i) {
        std::uint64_t alen = 0;
        if (!r.get(alen, 4) || end - r.pos < alen) return std::nullopt;
        std::size_t stop = r.pos + alen;
        auto a = decode_at(r, stop, k, nonce_term);
        if (!a || r.pos != stop) return std::nullopt;
        args.push_back(*a);
    }
    return Term::app(Symbol(name), std::move(args));
}

// Decoding with a private nonce numbering, used by the destructor
// implementation to hand shapes to the symbolic rules and back.
struct NonceTable {
    std::map<Bitstring, Term> to_term;
    std::map<Term, Bitstring> to_bytes;

    Term term(const Bitstring& b) {
        auto it = to_term.find(b);
        if (it != to_term.end()) return it->second;
        Term t = Term::nonce(to_term.size() + 1, NonceSort::Protocol);
        to_term.emplace(b, t);
        to_bytes.emplace(t, b);
        return t;
    }
};

// Only constructor applications of the model with matching arity.
bool well_typed(const SymbolicModel& m, Term t) {
    if (t.is_nonce()) return true;
    const FuncSymbol* f = m.find(t.symbol());
    if (!f || f->kind != FuncKind::Constructor || f->arity != t.arity()) return false;
    for (Term a : t.args())
        if (!well_typed(m, a)) return false;
    return true;
}

void flatten_comp(const CompClosure& c, std::vector<CompClosure>& out);

CompClosure close_comp(const PPtr& node, const CompBindings& env,
                       std::initializer_list<std::pair<Symbol, Bitstring>> extra = {}) {
    CompClosure c{node, {}};
    for (Symbol s : node->free_symbols()) {
        const Bitstring* v = nullptr;
        for (auto& e : extra)
            if (e.first == s) v = &e.second;
        if (!v) {
            auto it = std::lower_bound(env.begin(), env.end(), s, [](const auto& e, Symbol k) { return e.first < k; });
            if (it != env.end() && it->first == s) v = &it->second;
        }
        if (v) c.env.emplace_back(s, *v);
    }
    std::sort(c.env.begin(), c.env.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return c;
}

void flatten_comp(const CompClosure& c, std::vector<CompClosure>& out) {
    switch (c.node->kind) {
        case PKind::Nil: return;
        case PKind::Par:
            flatten_comp(close_comp(c.node->p, c.env), out);
            flatten_comp(close_comp(c.node->q, c.env), out);
            return;
        default: out.push_back(c);
    }
}

std::vector<CompClosure> comps(const CompClosure& c) {
    std::vector<CompClosure> out;
    flatten_comp(c, out);
    return out;
}

// Same slot discipline as the symbolic engine so that scripts address the
// same processes.
std::vector<CompClosure> rebuild(const std::vector<CompClosure>& procs,
                                 const std::map<std::size_t, std::vector<CompClosure>>& repl) {
    std::vector<CompClosure> out, tail;
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

template <class T>
std::optional<std::size_t> index_of(const std::vector<T>& v, const Bitstring& b) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] == b) return i;
    return std::nullopt;
}

std::optional<std::size_t> key_index(const std::vector<std::pair<Bitstring, Bitstring>>& cells, const Bitstring& k) {
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].first == k) return i;
    return std::nullopt;
}

}  // namespace

std::string hex(const Bitstring& b) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (std::uint8_t c : b) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 15]);
    }
    return out;
}

Bitstring impl_nonce(std::mt19937_64& rng, int k) {
    Bitstring out(nonce_len(k) + 1);
    out[0] = kNonceTag;
    for (std::size_t i = 1; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(rng());
    if (k % 8) out[1] &= static_cast<std::uint8_t>((1u << (k % 8)) - 1);
    return out;
}

Bitstring encode(Term t, const std::function<Bitstring(Term)>& nonce_bytes) {
    switch (t.kind()) {
        case TermKind::Nonce: return nonce_bytes(t);
        case TermKind::App: {
            Bitstring out{kAppTag};
            const std::string& name = t.symbol().str();
            put(out, name.size(), 2);
            out.insert(out.end(), name.begin(), name.end());
            put(out, t.arity(), 2);
            for (Term a : t.args()) {
                Bitstring b = encode(a, nonce_bytes);
                put(out, b.size(), 4);
                out.insert(out.end(), b.begin(), b.end());
            }
            return out;
        }
        default: throw UsageError("cannot encode non-ground term " + t.str());
    }
}

std::optional<Term> decode(const Bitstring& b, int k, const std::function<Term(const Bitstring&)>& nonce_term) {
    Reader r{b};
    auto t = decode_at(r, b.size(), k, [&](const Bitstring& bits) {
        Bitstring full{kNonceTag};
        full.insert(full.end(), bits.begin(), bits.end());
        return nonce_term(full);
    });
    if (!t || r.pos != b.size()) return std::nullopt;
    return t;
}

std::optional<Bitstring> impl_constructor(const SymbolicModel& m, Symbol f, const std::vector<Bitstring>& args, int k) {
    Bitstring out{kAppTag};
    const std::string& name = f.str();
    put(out, name.size(), 2);
    out.insert(out.end(), name.begin(), name.end());
    put(out, args.size(), 2);
    for (const Bitstring& a : args) {
        put(out, a.size(), 4);
        out.insert(out.end(), a.begin(), a.end());
    }
    if (m.strict_grammar()) {
        NonceTable table;
        auto t = decode(out, k, [&](const Bitstring& b) { return table.term(b); });
        if (!t || !in_message_grammar(*t)) return std::nullopt;
    }
    return out;
}

std::optional<Bitstring> impl_destructor(const SymbolicModel& m, Symbol d, const std::vector<Bitstring>& args, int k) {
    NonceTable table;
    std::vector<Term> shapes;
    for (const Bitstring& a : args) {
        auto t = decode(a, k, [&](const Bitstring& b) { return table.term(b); });
        if (!t || !well_typed(m, *t)) return std::nullopt;
        shapes.push_back(*t);
    }
    auto r = eval_destructor(m, d, shapes);
    if (!r) return std::nullopt;
    return encode(*r, [&](Term n) { return table.to_bytes.at(n); });
}

// ---------------------------------------------------------------- execution

CompExec::CompExec(const SymbolicModel& m, const PPtr& p0, int k, std::uint64_t seed, EngineOptions opt)
    : m_(m), k_(k), rng_(seed), opt_(opt) {
    if (k < 1) throw UsageError("security parameter must be positive");
    if (auto fv = free_vars(p0); !fv.empty()) throw UsageError("process is not closed: free variable " + fv[0].str());
    std::vector<Symbol> fn = free_names(p0);
    std::sort(fn.begin(), fn.end(), [](Symbol a, Symbol b) { return a.str() < b.str(); });
    CompBindings env;
    for (Symbol s : fn) {
        Bitstring b = draw(mirror_.fresh(NonceSort::Protocol, s));
        env.emplace_back(s, b);
        cfg_.knowledge.push_back(b);
    }
    std::sort(env.begin(), env.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    flatten_comp(close_comp(p0, env), cfg_.procs);
    trace_.knowledge = cfg_.knowledge;
}

Bitstring CompExec::draw(Term symbolic) {
    Bitstring b = impl_nonce(rng_, k_);
    trace_.nonces.emplace_back(symbolic, b);
    return b;
}

std::optional<Bitstring> CompExec::eval(Term t, const CompBindings& env) const {
    switch (t.kind()) {
        case TermKind::Variable:
        case TermKind::Name: {
            auto it = std::lower_bound(env.begin(), env.end(), t.symbol(),
                                       [](const auto& e, Symbol k) { return e.first < k; });
            if (it == env.end() || it->first != t.symbol())
                throw UsageError("unbound symbol '" + t.symbol().str() + "'");
            return it->second;
        }
        case TermKind::App: {
            const FuncSymbol* f = m_.find(t.symbol());
            if (!f) throw UsageError("unknown function symbol '" + t.symbol().str() + "'");
            std::vector<Bitstring> args;
            for (Term a : t.args()) {
                auto v = eval(a, env);
                if (!v) return std::nullopt;
                args.push_back(std::move(*v));
            }
            if (f->kind == FuncKind::Destructor) return impl_destructor(m_, t.symbol(), args, k_);
            return impl_constructor(m_, t.symbol(), args, k_);
        }
        default: throw UsageError("term " + t.str() + " has no computational value");
    }
}

Bitstring CompExec::must_eval(Term t, const CompBindings& env, const char* what) const {
    auto v = eval(t, env);
    if (!v) throw NotEnabled(std::string(what) + " evaluates to bottom");
    return *v;
}

std::optional<Bitstring> CompExec::recipe_bytes(Term r) {
    if (auto i = handle_index(r)) {
        if (*i >= cfg_.knowledge.size()) return std::nullopt;
        return cfg_.knowledge[*i];
    }
    switch (r.kind()) {
        case TermKind::Nonce: {
            if (r.nonce_sort() != NonceSort::Adversary) return std::nullopt;
            auto it = adversary_.find(r.nonce_id());
            if (it == adversary_.end()) it = adversary_.emplace(r.nonce_id(), draw(r)).first;
            return it->second;
        }
        case TermKind::App: {
            const FuncSymbol* f = m_.find(r.symbol());
            if (!f || f->arity != r.arity()) return std::nullopt;
            std::vector<Bitstring> args;
            for (Term a : r.args()) {
                auto v = recipe_bytes(a);
                if (!v) return std::nullopt;
                args.push_back(std::move(*v));
            }
            if (f->kind == FuncKind::Destructor) return impl_destructor(m_, r.symbol(), args, k_);
            return impl_constructor(m_, r.symbol(), args, k_);
        }
        default: return std::nullopt;
    }
}

void CompExec::step(const Action& a) {
    CompAction c{a.kind, a.proc, a.other, std::nullopt, {}};
    if (a.channel.valid()) {
        auto ch = recipe_bytes(a.channel);
        if (!ch) throw NotEnabled("channel recipe evaluates to bottom");
        c.channel = std::move(*ch);
    }
    if (a.kind == Action::Kind::AdvInput) {
        if (!a.payload.valid()) throw NotEnabled("payload is not an adversary recipe");
        auto p = recipe_bytes(a.payload);
        if (!p) throw NotEnabled("payload recipe evaluates to bottom");
        c.payload = std::move(*p);
    }
    step(c);
}

void CompExec::step(const CompAction& a) {
    if (a.proc >= cfg_.procs.size()) throw NotEnabled("no process " + std::to_string(a.proc));
    CompConfig next = cfg_;
    std::vector<CompEvent> events;
    const CompClosure& c = cfg_.procs[a.proc];
    const Process& n = *c.node;
    std::map<std::size_t, std::vector<CompClosure>> repl;
    auto then = [&](const PPtr& p, std::initializer_list<std::pair<Symbol, Bitstring>> extra = {}) {
        repl[a.proc] = comps(close_comp(p, c.env, extra));
    };
    auto check_channel = [&]() {
        if (!n.t1.valid()) {
            if (a.channel) throw NotEnabled("default channel takes no channel recipe");
            return;
        }
        Bitstring ch = must_eval(n.t1, c.env, "channel");
        if (!a.channel || *a.channel != ch) throw NotEnabled("channel bytes differ");
    };
    auto label = [&](const EventLabel& e, const CompBindings& env) {
        CompEvent out{e.sym, {}};
        for (Term t : e.args) out.args.push_back(must_eval(t, env, "event argument"));
        return out;
    };

    switch (a.kind) {
        case Action::Kind::AdvOutput: {
            if (n.kind != PKind::Out) throw NotEnabled("process is not an output");
            check_channel();
            next.knowledge.push_back(must_eval(n.t2, c.env, "message"));
            then(n.p);
            break;
        }
        case Action::Kind::AdvInput: {
            if (n.kind != PKind::In) throw NotEnabled("process is not an input");
            if (n.t2.valid()) throw UsageError("pattern inputs are not supported");
            check_channel();
            then(n.p, {{n.bound, a.payload}});
            break;
        }
        case Action::Kind::Comm: {
            if (a.other >= cfg_.procs.size() || a.other == a.proc) throw NotEnabled("bad receiver");
            const CompClosure& r = cfg_.procs[a.other];
            if (n.kind != PKind::Out || r.node->kind != PKind::In || r.node->t2.valid())
                throw NotEnabled("comm needs an output and an input");
            bool x = n.t1.valid(), y = r.node->t1.valid();
            if (x != y) throw NotEnabled("channels differ");
            if (x && eval(n.t1, c.env) != eval(r.node->t1, r.env)) throw NotEnabled("channels differ");
            if (x && !eval(n.t1, c.env)) throw NotEnabled("channel evaluates to bottom");
            Bitstring msg = must_eval(n.t2, c.env, "message");
            then(n.p);
            repl[a.other] = comps(close_comp(r.node->p, r.env, {{r.node->bound, msg}}));
            break;
        }
        case Action::Kind::Schedule:
            switch (n.kind) {
                case PKind::Nil:
                case PKind::Par: repl[a.proc] = comps(c); break;
                case PKind::Repl: {
                    ++next.unfolds[n.uid];
                    std::vector<CompClosure> v{c};
                    flatten_comp(close_comp(n.p, c.env), v);
                    repl[a.proc] = std::move(v);
                    break;
                }
                case PKind::New: {
                    Bitstring b = draw(mirror_.fresh(NonceSort::Protocol, n.bound));
                    then(n.p, {{n.bound, b}});
                    break;
                }
                case PKind::Let: {
                    auto v = eval(n.t1, c.env);
                    if (v && !n.bound.empty()) then(n.p, {{n.bound, *v}});
                    else if (v) then(n.p);
                    else then(n.q);
                    break;
                }
                case PKind::Event: events.push_back(label(n.events.at(0), c.env)); then(n.p); break;
                case PKind::Insert: {
                    Bitstring k = must_eval(n.t1, c.env, "cell key");
                    Bitstring v = must_eval(n.t2, c.env, "cell value");
                    if (auto i = key_index(next.cells, k)) next.cells.erase(next.cells.begin() + static_cast<std::ptrdiff_t>(*i));
                    next.cells.emplace_back(std::move(k), std::move(v));
                    then(n.p);
                    break;
                }
                case PKind::Delete: {
                    if (auto k = eval(n.t1, c.env))
                        if (auto i = key_index(next.cells, *k)) next.cells.erase(next.cells.begin() + static_cast<std::ptrdiff_t>(*i));
                    then(n.p);
                    break;
                }
                case PKind::Lookup: {
                    Bitstring k = must_eval(n.t1, c.env, "cell key");
                    if (auto i = key_index(cfg_.cells, k)) then(n.p, {{n.bound, cfg_.cells[*i].second}});
                    else then(n.q);
                    break;
                }
                case PKind::Lock: {
                    Bitstring k = must_eval(n.t1, c.env, "lock term");
                    if (index_of(cfg_.locks, k)) throw NotEnabled("lock is held");
                    next.locks.push_back(std::move(k));
                    then(n.p);
                    break;
                }
                case PKind::Unlock: {
                    if (auto k = eval(n.t1, c.env))
                        if (auto i = index_of(cfg_.locks, *k)) next.locks.erase(next.locks.begin() + static_cast<std::ptrdiff_t>(*i));
                    then(n.p);
                    break;
                }
                case PKind::Msr: {
                    auto pattern = [&](Symbol s) { return std::binary_search(n.bound_vars.begin(), n.bound_vars.end(), s); };
                    // Left side: pattern variables stay open, the rest is evaluated.
                    struct Slot {
                        bool open;
                        Symbol var;
                        Bitstring value;
                    };
                    std::vector<std::vector<Slot>> lhs;
                    for (const Fact& f : n.lhs) {
                        std::vector<Slot> slots;
                        for (Term t : f.args) {
                            if (t.is_var() && pattern(t.symbol())) {
                                slots.push_back({true, t.symbol(), {}});
                                continue;
                            }
                            for (Symbol v : term_vars(t))
                                if (pattern(v)) throw UsageError("pattern variable " + v.str() + " below a function symbol");
                            slots.push_back({false, {}, must_eval(t, c.env, "fact argument")});
                        }
                        lhs.push_back(std::move(slots));
                    }
                    std::vector<std::size_t> order;
                    for (std::size_t i = 0; i < n.lhs.size(); ++i)
                        if (!n.lhs[i].persistent) order.push_back(i);
                    for (std::size_t i = 0; i < n.lhs.size(); ++i)
                        if (n.lhs[i].persistent) order.push_back(i);
                    std::map<Symbol, Bitstring> tau;
                    std::vector<char> used(cfg_.msstate.size(), 0);
                    std::vector<std::size_t> consumed;
                    std::function<bool(std::size_t)> go = [&](std::size_t k) {
                        if (k == order.size()) return true;
                        const Fact& pat = n.lhs[order[k]];
                        for (std::size_t i = 0; i < cfg_.msstate.size(); ++i) {
                            const CompFact& f = cfg_.msstate[i];
                            if (!pat.persistent && used[i]) continue;
                            if (pat.sym != f.sym || pat.persistent != f.persistent || pat.args.size() != f.args.size())
                                continue;
                            auto saved = tau;
                            bool ok = true;
                            for (std::size_t j = 0; j < f.args.size() && ok; ++j) {
                                const Slot& s = lhs[order[k]][j];
                                if (!s.open) {
                                    ok = s.value == f.args[j];
                                    continue;
                                }
                                auto it = tau.find(s.var);
                                if (it == tau.end()) tau.emplace(s.var, f.args[j]);
                                else ok = it->second == f.args[j];
                            }
                            if (!ok) {
                                tau = std::move(saved);
                                continue;
                            }
                            if (!pat.persistent) {
                                used[i] = 1;
                                consumed.push_back(i);
                            }
                            if (go(k + 1)) return true;
                            if (!pat.persistent) {
                                used[i] = 0;
                                consumed.pop_back();
                            }
                            tau = std::move(saved);
                            if (opt_.greedy_match) return false;
                        }
                        return false;
                    };
                    if (!go(0)) throw NotEnabled("no match for the left side");
                    CompBindings env = c.env;
                    for (auto& [var, val] : tau) env.emplace_back(var, val);
                    std::sort(env.begin(), env.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
                    std::vector<CompFact> add;
                    for (const Fact& f : n.rhs) {
                        CompFact g{f.sym, f.persistent, {}};
                        for (Term t : f.args) g.args.push_back(must_eval(t, env, "fact argument"));
                        add.push_back(std::move(g));
                    }
                    for (const EventLabel& e : n.events) events.push_back(label(e, env));
                    std::sort(consumed.rbegin(), consumed.rend());
                    for (std::size_t i : consumed) next.msstate.erase(next.msstate.begin() + static_cast<std::ptrdiff_t>(i));
                    for (CompFact& f : add) {
                        if (f.persistent && std::find(next.msstate.begin(), next.msstate.end(), f) != next.msstate.end())
                            continue;
                        next.msstate.push_back(std::move(f));
                    }
                    repl[a.proc] = comps(close_comp(n.p, env));
                    break;
                }
                case PKind::Out:
                case PKind::In: throw NotEnabled("communication needs an adversary or comm action");
                default: throw UsageError(std::string(kind_name(n.kind)) + " is not a SAPIC construct");
            }
            break;
    }
    next.procs = rebuild(cfg_.procs, repl);
    cfg_ = std::move(next);
    trace_.events.insert(trace_.events.end(), events.begin(), events.end());
    trace_.knowledge = cfg_.knowledge;
}

CompTrace exec_computational(const SymbolicModel& m, const PPtr& p0, const std::vector<Action>& script, int k,
                             std::uint64_t seed, const EngineOptions& opt) {
    CompExec ex(m, p0, k, seed, opt);
    for (std::size_t i = 0; i < script.size(); ++i) {
        try {
            ex.step(script[i]);
        } catch (const NotEnabled& e) {
            throw UsageError("action " + std::to_string(i) + " (" + script[i].str() + ") is not enabled: " + e.what());
        }
    }
    return ex.trace();
}

std::optional<Bitstring> encode_with(const CompTrace& t, Term symbolic) {
    try {
        return encode(symbolic, [&](Term n) {
            for (auto& [sym, bytes] : t.nonces)
                if (sym == n) return bytes;
            throw UsageError("nonce never drawn");
        });
    } catch (const UsageError&) {
        return std::nullopt;
    }
}

}  // namespace spi
