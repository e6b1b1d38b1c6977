#include "statepi/deduction.hpp"

#include <algorithm>
#include <string>

namespace spi {

Term handle(std::size_t i) { return Term::var(Symbol("x_" + std::to_string(i + 1))); }

std::optional<std::size_t> handle_index(Term t) {
    if (!t.is_var()) return std::nullopt;
    const std::string& s = t.symbol().str();
    if (s.size() < 3 || s[0] != 'x' || s[1] != '_') return std::nullopt;
    std::size_t v = 0;
    for (std::size_t i = 2; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        v = v * 10 + static_cast<std::size_t>(s[i] - '0');
    }
    if (v == 0) return std::nullopt;
    return v - 1;
}

namespace {

Term plug(Term recipe, const std::vector<Term>& entries) {
    if (auto i = handle_index(recipe)) {
        if (*i >= entries.size()) throw UsageError("recipe handle " + recipe.str() + " out of range");
        return entries[*i];
    }
    if (recipe.is_var() || recipe.is_name())
        throw UsageError("recipe contains unbound symbol '" + recipe.str() + "'");
    if (!recipe.is_app() || recipe.arity() == 0) return recipe;
    std::vector<Term> args;
    args.reserve(recipe.arity());
    for (Term a : recipe.args()) args.push_back(plug(a, entries));
    return Term::app(recipe.symbol(), std::move(args));
}

void handles_preorder(Term r, std::vector<std::size_t>& out) {
    if (auto i = handle_index(r)) {
        out.push_back(*i);
        return;
    }
    for (Term a : r.args()) handles_preorder(a, out);
}

// Smaller depth first, then earlier knowledge entries.
bool better_recipe(Term a, Term b) {
    if (a.depth() != b.depth()) return a.depth() < b.depth();
    std::vector<std::size_t> ha, hb;
    handles_preorder(a, ha);
    handles_preorder(b, hb);
    if (ha != hb) return ha < hb;
    return a.size() < b.size();
}

// rhs equal to a whole argument yields a term that is already known.
bool rule_is_identity(const DestructorRule& r) {
    return std::find(r.lhs.begin(), r.lhs.end(), r.rhs) != r.lhs.end();
}

std::size_t principal_index(const DestructorRule& r) {
    for (std::size_t i = 0; i < r.lhs.size(); ++i)
        if (occurs_in(r.rhs, r.lhs[i])) return i;
    return 0;
}

bool has_pattern_vars(Term t) { return !t.ground(); }

}  // namespace

std::optional<Term> apply_recipe(const SymbolicModel& m, const std::vector<Term>& entries, Term recipe) {
    return eval_term(m, plug(recipe, entries));
}

const Saturation::Item* Saturation::find(Term t) const {
    auto it = index_.find(t);
    return it == index_.end() ? nullptr : &items_[it->second];
}

std::optional<Term> compose(const SymbolicModel& m, const Saturation& sat, Term t) {
    std::unordered_map<Term, std::optional<Term>> memo;
    auto go = [&](auto&& self, Term u) -> std::optional<Term> {
        auto it = memo.find(u);
        if (it != memo.end()) return it->second;
        std::optional<Term> best;
        if (const auto* item = sat.find(u)) best = item->recipe;
        if (u.is_adv_var() || (u.is_nonce() && u.nonce_sort() == NonceSort::Adversary)) {
            best = u;
        } else if (u.is_app()) {
            const FuncSymbol* f = m.find(u.symbol());
            bool grammar_ok = !m.strict_grammar() || in_message_grammar(u);
            if (f && f->kind == FuncKind::Constructor && grammar_ok) {
                std::vector<Term> rs;
                bool ok = true;
                for (Term a : u.args()) {
                    auto r = self(self, a);
                    if (!r) {
                        ok = false;
                        break;
                    }
                    rs.push_back(*r);
                }
                if (ok) {
                    Term c = Term::app(u.symbol(), std::move(rs));
                    if (!best || better_recipe(c, *best)) best = c;
                }
            }
        }
        memo.emplace(u, best);
        return best;
    };
    return go(go, t);
}

Saturation saturate(const SymbolicModel& m, const std::vector<Term>& entries) {
    Saturation sat;
    auto offer = [&](Term t, Term recipe) {
        auto it = sat.index_.find(t);
        if (it == sat.index_.end()) {
            sat.index_.emplace(t, sat.items_.size());
            sat.items_.push_back({t, recipe});
            return true;
        }
        auto& item = sat.items_[it->second];
        if (better_recipe(recipe, item.recipe)) {
            item.recipe = recipe;
            return true;
        }
        return false;
    };
    for (std::size_t i = 0; i < entries.size(); ++i) offer(entries[i], handle(i));

    std::vector<const DestructorRule*> rules;
    for (const auto& r : m.rules())
        if (!rule_is_identity(r)) rules.push_back(&r);

    bool changed = true;
    while (changed) {
        changed = false;
        for (const DestructorRule* r : rules) {
            std::size_t p = principal_index(*r);
            for (std::size_t si = 0; si < sat.items_.size(); ++si) {
                Term s = sat.items_[si].term;
                Term srecipe = sat.items_[si].recipe;
                // an adversary input at the root: whatever the adversary
                // could extract from it, it already knew
                if (s.is_adv_var()) continue;
                Substitution b;
                if (!match_pattern(r->lhs[p], s, b)) continue;
                std::vector<Term> arg_recipes(r->lhs.size());
                arg_recipes[p] = srecipe;
                // the remaining arguments must be derivable instances
                auto fill = [&](auto&& self, std::size_t k, Substitution& bb) -> bool {
                    if (k == r->lhs.size()) return true;
                    if (k == p) return self(self, k + 1, bb);
                    Term inst = substitute(r->lhs[k], bb);
                    if (!has_pattern_vars(inst)) {
                        auto rec = compose(m, sat, inst);
                        if (!rec) return false;
                        arg_recipes[k] = *rec;
                        return self(self, k + 1, bb);
                    }
                    for (const auto& cand : sat.items_) {
                        if (cand.term.is_adv_var()) continue;
                        Substitution b2 = bb;
                        if (!match_pattern(inst, cand.term, b2)) continue;
                        arg_recipes[k] = cand.recipe;
                        if (self(self, k + 1, b2)) {
                            bb = std::move(b2);
                            return true;
                        }
                    }
                    return false;
                };
                if (!fill(fill, 0, b)) continue;
                Term result = substitute(r->rhs, b);
                if (has_pattern_vars(result)) continue;
                if (m.strict_grammar() && !in_message_grammar(result)) continue;
                if (offer(result, Term::app(r->head, arg_recipes))) changed = true;
            }
        }
    }
    return sat;
}

std::optional<Term> derivable(const SymbolicModel& m, const Knowledge& k, Term t) {
    Saturation sat = saturate(m, k.entries);
    return compose(m, sat, t);
}

}  // namespace spi
