#include "statepi/runtime.hpp"

#include <algorithm>

#include <json.hpp>

#include "statepi/printer.hpp"

namespace spi {

const Term* lookup_binding(const Bindings& b, Symbol s) {
    auto it = std::lower_bound(b.begin(), b.end(), s, [](const auto& e, Symbol k) { return e.first < k; });
    return it != b.end() && it->first == s ? &it->second : nullptr;
}

Closure close(const PPtr& node, const Bindings& env, std::initializer_list<std::pair<Symbol, Term>> extra) {
    Closure c{node, {}};
    const auto& fs = node->free_symbols();
    c.env.reserve(fs.size());
    for (Symbol s : fs) {
        const Term* v = nullptr;
        for (auto& e : extra)
            if (e.first == s) v = &e.second;
        if (!v) v = lookup_binding(env, s);
        if (v) c.env.emplace_back(s, *v);
    }
    std::sort(c.env.begin(), c.env.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return c;
}

Term instantiate(Term t, const Bindings& env) {
    switch (t.kind()) {
        case TermKind::Variable:
        case TermKind::Name: {
            const Term* v = lookup_binding(env, t.symbol());
            if (!v) throw UsageError("unbound symbol '" + t.symbol().str() + "'");
            return *v;
        }
        case TermKind::App: {
            if (t.ground()) return t;
            std::vector<Term> args;
            args.reserve(t.arity());
            for (Term a : t.args()) args.push_back(instantiate(a, env));
            return Term::app(t.symbol(), std::move(args));
        }
        default:
            return t;
    }
}

std::optional<Term> eval_in(const SymbolicModel& m, Term t, const Bindings& env) {
    return eval_term(m, instantiate(t, env));
}

void flatten(const Closure& c, std::vector<Closure>& out) {
    switch (c.node->kind) {
        case PKind::Nil: return;
        case PKind::Par:
            flatten(close(c.node->p, c.env), out);
            flatten(close(c.node->q, c.env), out);
            return;
        default:
            out.push_back(c);
    }
}

bool valid_recipe(Term r, std::size_t n) {
    switch (r.kind()) {
        case TermKind::Variable: {
            auto i = handle_index(r);
            return i && *i < n;
        }
        case TermKind::Name: return false;
        case TermKind::Nonce: return r.nonce_sort() == NonceSort::Adversary;
        case TermKind::AdvVar: return true;
        case TermKind::App:
            for (Term a : r.args())
                if (!valid_recipe(a, n)) return false;
            return true;
    }
    return false;
}

Term must_eval(const SymbolicModel& m, Term t, const Bindings& env, const char* what) {
    auto v = eval_in(m, t, env);
    if (!v) throw NotEnabled(std::string(what) + " evaluates to bottom");
    return *v;
}

EventLabel eval_label(const SymbolicModel& m, const EventLabel& e, const Bindings& env) {
    EventLabel out{e.sym, {}};
    for (Term a : e.args) out.args.push_back(must_eval(m, a, env, "event argument"));
    return out;
}

void check_channel(const SymbolicModel& m, const Knowledge& k, const Closure& c, Term recipe) {
    const Process& n = *c.node;
    if (!n.t1.valid()) {
        if (recipe.valid()) throw NotEnabled("default channel takes no channel recipe");
        return;
    }
    Term ch = must_eval(m, n.t1, c.env, "channel");
    if (!recipe.valid() || !valid_recipe(recipe, k.size())) throw NotEnabled("channel recipe is not an adversary recipe");
    auto v = apply_recipe(m, k.entries, recipe);
    if (!v || !terms_equal(m, *v, ch)) throw NotEnabled("channel recipe does not yield the channel");
}

std::optional<Term> adversary_channel(const SymbolicModel& m, const Knowledge& k, const Closure& c, bool& ok) {
    ok = false;
    if (!c.node->t1.valid()) {
        ok = true;
        return Term();
    }
    auto ch = eval_in(m, c.node->t1, c.env);
    if (!ch) return std::nullopt;
    auto r = derivable(m, k, *ch);
    ok = r.has_value();
    return r;
}

bool same_channel(const SymbolicModel& m, const Closure& out, const Closure& in) {
    bool a = out.node->t1.valid(), b = in.node->t1.valid();
    if (!a || !b) return a == b;
    auto c1 = eval_in(m, out.node->t1, out.env);
    auto c2 = eval_in(m, in.node->t1, in.env);
    return c1 && c2 && terms_equal(m, *c1, *c2);
}

std::string Action::str() const {
    auto t = [](Term x) { return x.valid() ? x.str() : std::string("-"); };
    switch (kind) {
        case Kind::Schedule: return "schedule(" + std::to_string(proc) + ")";
        case Kind::AdvInput: return "in(" + std::to_string(proc) + ", " + t(channel) + ", " + t(payload) + ")";
        case Kind::AdvOutput: return "out(" + std::to_string(proc) + ", " + t(channel) + ")";
        case Kind::Comm: return "comm(" + std::to_string(proc) + ", " + std::to_string(other) + ")";
    }
    return "?";
}

std::vector<EventLabel> Trace::events() const {
    std::vector<EventLabel> out;
    for (const TraceStep& s : steps) out.insert(out.end(), s.events.begin(), s.events.end());
    return out;
}

std::string trace_json(const SymbolicModel& m, const Trace& t, Dialect d) {
    std::string out;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const TraceStep& s = t.steps[i];
        auto base = [&]() {
            nlohmann::ordered_json j;
            j["step"] = i;
            j["kind"] = s.kind == StepKind::Event ? "event" : s.kind == StepKind::Know ? "know" : "silent";
            j["action"] = s.action.str();
            return j;
        };
        if (s.events.empty()) {
            auto j = base();
            if (s.know.valid()) j["know"] = print_term(m, s.know, d);
            out += j.dump() + "\n";
            continue;
        }
        for (const EventLabel& e : s.events) {
            auto j = base();
            nlohmann::ordered_json ev;
            ev["symbol"] = e.sym.str();
            ev["args"] = nlohmann::json::array();
            for (Term a : e.args) ev["args"].push_back(print_term(m, a, d));
            j["event"] = ev;
            out += j.dump() + "\n";
        }
    }
    return out;
}

Bindings substitute_bindings(const Bindings& b, const Substitution& s) {
    Bindings out = b;
    for (auto& [k, v] : out)
        if (v.has_adv_vars()) v = substitute(v, s);
    return out;
}

EventLabel substitute_label(const EventLabel& e, const Substitution& s) {
    EventLabel out = e;
    for (Term& a : out.args) a = substitute(a, s);
    return out;
}

}  // namespace spi
