#include <gtest/gtest.h>

#include <set>

#include "gen.hpp"
#include "statepi/model.hpp"

using namespace spi;
using testgen::f;

namespace {

struct TermsTest : ::testing::Test {
    SymbolicModel m = SymbolicModel::pkenc_sig();
    NonceSource src;
    Term n1 = src.fresh(NonceSort::Protocol, Symbol("n1"));
    Term n2 = src.fresh(NonceSort::Protocol, Symbol("n2"));
    Term a = src.fresh(NonceSort::Protocol, Symbol("a"));
    Term b = src.fresh(NonceSort::Protocol, Symbol("b"));
    Term c = src.fresh(NonceSort::Protocol, Symbol("c"));
    Term msg = src.fresh(NonceSort::Protocol, Symbol("m"));
    Term r = src.fresh(NonceSort::Protocol, Symbol("r"));
    Term r2 = src.fresh(NonceSort::Protocol, Symbol("r2"));

    std::optional<Term> D(const char* d, std::vector<Term> args) {
        return eval_destructor(m, Symbol(d), args);
    }
};

}  // namespace

TEST_F(TermsTest, HashConsing) {
    EXPECT_EQ(f("pair", {a, b}), f("pair", {a, b}));
    EXPECT_NE(f("pair", {a, b}), f("pair", {b, a}));
    EXPECT_EQ(f("pair", {a, b}).depth(), 1u);
    EXPECT_EQ(f("empty", {}).depth(), 0u);
}

TEST_F(TermsTest, DecMatchingKey) {
    EXPECT_EQ(D("dec", {f("dk", {n1}), f("enc", {f("ek", {n1}), msg, r})}), msg);
}

TEST_F(TermsTest, DecKeyMismatchIsBottom) {
    EXPECT_FALSE(D("dec", {f("dk", {n1}), f("enc", {f("ek", {n2}), msg, r})}).has_value());
}

TEST_F(TermsTest, Projections) {
    EXPECT_EQ(D("fst", {f("pair", {a, b})}), a);
    EXPECT_EQ(D("snd", {f("pair", {a, b})}), b);
    EXPECT_FALSE(D("fst", {a}).has_value());
}

TEST_F(TermsTest, Verify) {
    EXPECT_EQ(D("verify", {f("vk", {n1}), f("sig", {f("sk", {n1}), msg, r})}), msg);
    EXPECT_FALSE(D("verify", {f("vk", {n2}), f("sig", {f("sk", {n1}), msg, r})}).has_value());
}

TEST_F(TermsTest, ArityMismatchIsUsageError) {
    EXPECT_THROW(D("fst", {a, b}), UsageError);
    EXPECT_THROW(D("pair", {a, b}), UsageError);
}

TEST_F(TermsTest, EvalTermNested) {
    Term t = f("snd", {f("pair", {a, f("pair", {b, c})})});
    EXPECT_EQ(eval_term(m, t), f("pair", {b, c}));
    EXPECT_FALSE(eval_term(m, f("equal", {a, b})).has_value());
    EXPECT_EQ(eval_term(m, f("unstring0", {f("string0", {f("empty", {})})})), f("empty", {}));
    EXPECT_FALSE(eval_term(m, f("pair", {a, f("fst", {a})})).has_value());
}

TEST_F(TermsTest, EvalTermUnboundVariable) {
    EXPECT_THROW(eval_term(m, f("pair", {a, Term::var(Symbol("x"))})), UsageError);
}

TEST_F(TermsTest, StrictGrammarRejectsIllTyped) {
    // first argument of enc must be an encryption key
    EXPECT_FALSE(eval_term(m, f("enc", {a, msg, r})).has_value());
    SymbolicModel loose = m;
    loose.set_strict_grammar(false);
    EXPECT_TRUE(eval_term(loose, f("enc", {a, msg, r})).has_value());
}

TEST_F(TermsTest, TermsEqual) {
    EXPECT_TRUE(terms_equal(m, msg, msg));
    EXPECT_FALSE(terms_equal(m, f("pair", {a, b}), f("pair", {a, c})));
    EXPECT_FALSE(terms_equal(m, f("enc", {f("ek", {n1}), msg, r}), f("enc", {f("ek", {n1}), msg, r2})));
}

TEST_F(TermsTest, FreshNonces) {
    NonceSource s;
    Term x = s.fresh(NonceSort::Protocol);
    Term y = s.fresh(NonceSort::Protocol);
    EXPECT_NE(x, y);
    EXPECT_EQ(s.fresh(NonceSort::Adversary).nonce_sort(), NonceSort::Adversary);
    std::set<Term> seen;
    for (int i = 0; i < 10000; ++i) seen.insert(fresh_nonce(s, NonceSort::Protocol));
    EXPECT_EQ(seen.size(), 10000u);
}

TEST_F(TermsTest, SapicModeFiltersThreeRules) {
    SymbolicModel s = SymbolicModel::pkenc_sig(true);
    ASSERT_EQ(s.filtered_rules().size(), 3u);
    std::set<std::string> heads;
    for (const auto& r : s.filtered_rules()) heads.insert(r.head.str());
    EXPECT_EQ(heads, (std::set<std::string>{"ekofdk", "vkof", "vkofsk"}));
    EXPECT_TRUE(s.subterm_convergent());
    EXPECT_FALSE(m.subterm_convergent());
    EXPECT_FALSE(eval_destructor(s, Symbol("ekofdk"), std::vector<Term>{f("dk", {n1})}).has_value());
    EXPECT_EQ(D("ekofdk", {f("dk", {n1})}), f("ek", {n1}));
    // vkof on garbage signatures stays
    EXPECT_EQ(eval_destructor(s, Symbol("vkof"), std::vector<Term>{f("garbageSig", {a, r})}), a);
}

TEST_F(TermsTest, EqualAlwaysPresent) {
    SymbolicModel empty;
    EXPECT_TRUE(empty.is_destructor(Symbol("equal")));
}

TEST_F(TermsTest, RuleValidation) {
    SymbolicModel u;
    u.add_constructor(Symbol("h"), 1);
    u.add_destructor(Symbol("g"), 1);
    Term x = Term::var(Symbol("x")), y = Term::var(Symbol("y"));
    EXPECT_THROW(u.add_rule({Symbol("g"), {f("h", {x})}, y}), UsageError);
    EXPECT_THROW(u.add_rule({Symbol("g"), {x, x}, x}), UsageError);
    u.add_rule({Symbol("g"), {f("h", {x})}, x});
    // overlapping rule with a different result breaks determinism
    EXPECT_THROW(u.add_rule({Symbol("g"), {y}, y}), UsageError);
}

TEST_F(TermsTest, AdversaryVariableRaisesQuestion) {
    Term X = Term::adv_var({.id = 1, .snapshot = 0, .budget = 2});
    try {
        D("fst", {X});
        FAIL() << "expected a question";
    } catch (const Undecided& u) {
        EXPECT_EQ(u.var, X);
        EXPECT_EQ(u.question, Undecided::Question::Head);
        EXPECT_EQ(u.head, Symbol("pair").id());
    }
    Term Xn = Term::adv_var({.id = 1, .snapshot = 0, .budget = 2, .no_heads = {Symbol("pair").id()}});
    EXPECT_FALSE(D("fst", {Xn}).has_value());
    // a concrete mismatch elsewhere settles the rule without a question
    EXPECT_FALSE(D("dec", {f("vk", {n1}), X}).has_value());
}

// Properties over random well-typed terms.

TEST_F(TermsTest, PropertyEqualityIsEquivalence) {
    std::mt19937_64 rng(7);
    testgen::MessageGen g(rng, {a, b, c, n1});
    for (int i = 0; i < 300; ++i) {
        Term x = g.message(3), y = g.message(2), z = g.pick(2) ? x : g.message(1);
        EXPECT_TRUE(terms_equal(m, x, x));
        EXPECT_EQ(terms_equal(m, x, y), terms_equal(m, y, x));
        if (terms_equal(m, x, z) && terms_equal(m, z, y)) EXPECT_TRUE(terms_equal(m, x, y));
    }
}

TEST_F(TermsTest, PropertyDeterminismAndGrammarClosure) {
    std::mt19937_64 rng(11);
    testgen::MessageGen g(rng, {a, b, n1, n2, r});
    std::vector<Symbol> ds;
    for (const auto& fs : m.symbols())
        if (fs.kind == FuncKind::Destructor) ds.push_back(fs.name);
    int defined = 0;
    for (int i = 0; i < 2000; ++i) {
        Symbol d = ds[g.pick(ds.size())];
        std::vector<Term> args;
        for (std::size_t k = 0; k < m.find(d)->arity; ++k) args.push_back(g.message(3));
        if (d == Symbol("dec") && g.pick(2)) {
            Term k = g.nonce();
            args = {f("dk", {k}), f("enc", {f("ek", {k}), g.message(2), g.nonce()})};
        }
        auto r1 = eval_destructor(m, d, args);
        auto r2 = eval_destructor(m, d, args);
        EXPECT_EQ(r1, r2);
        if (r1) {
            ++defined;
            EXPECT_TRUE(in_message_grammar(*r1)) << r1->str();
            EXPECT_TRUE(r1->is_app() || r1->is_nonce());
        }
    }
    EXPECT_GT(defined, 50);
}

TEST_F(TermsTest, PropertySapicRulesAreSubterm) {
    SymbolicModel s = SymbolicModel::pkenc_sig(true);
    for (const auto& r : s.rules()) EXPECT_TRUE(rule_is_subterm(r)) << r.str();
}
