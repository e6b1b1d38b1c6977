#include <gtest/gtest.h>

#include <random>

#include "gen.hpp"
#include "oracles.hpp"
#include "statepi/deduction.hpp"

using namespace spi;
using testgen::f;

namespace {

struct DeductionTest : ::testing::Test {
    SymbolicModel m = SymbolicModel::pkenc_sig();
    NonceSource src;
    Term n = src.fresh(NonceSort::Protocol, Symbol("n"));
    Term a = src.fresh(NonceSort::Protocol, Symbol("a"));
    Term b = src.fresh(NonceSort::Protocol, Symbol("b"));
    Term c = src.fresh(NonceSort::Protocol, Symbol("c"));
    Term msg = src.fresh(NonceSort::Protocol, Symbol("m"));
    Term r = src.fresh(NonceSort::Protocol, Symbol("r"));
    Term adv = src.fresh(NonceSort::Adversary);

    Knowledge K(std::vector<Term> es) { return Knowledge{std::move(es), {}}; }
};

}  // namespace

TEST_F(DeductionTest, DecryptWithKnownKey) {
    Knowledge k = K({f("enc", {f("ek", {n}), msg, r}), f("dk", {n})});
    ASSERT_TRUE(oracle::derivable_bruteforce(m, k.entries, msg, {}));
    auto rec = derivable(m, k, msg);
    ASSERT_TRUE(rec);
    EXPECT_EQ(*rec, f("dec", {handle(1), handle(0)}));
    EXPECT_EQ(rec->str(), "dec(x_2, x_1)");
}

TEST_F(DeductionTest, AdversaryNonceFromNothing) {
    auto rec = derivable(m, K({}), adv);
    ASSERT_TRUE(rec);
    EXPECT_EQ(*rec, adv);
}

TEST_F(DeductionTest, SecondProjection) {
    Knowledge k = K({f("pair", {a, b})});
    ASSERT_TRUE(oracle::derivable_bruteforce(m, k.entries, b, {}));
    EXPECT_EQ(derivable(m, k, b), f("snd", {handle(0)}));
}

TEST_F(DeductionTest, RestrictedKeyBlocksDecryption) {
    Knowledge k = K({f("enc", {f("ek", {n}), msg, r})});
    k.restricted = {n};
    ASSERT_FALSE(oracle::derivable_bruteforce(m, k.entries, msg, {}));
    EXPECT_FALSE(derivable(m, k, msg));
}

TEST_F(DeductionTest, SaturationExamples) {
    EXPECT_TRUE(saturate(m, std::vector<Term>{}).items().empty());
    auto s = saturate(m, std::vector<Term>{f("pair", {a, f("pair", {b, c})})});
    for (Term t : {a, b, c, f("pair", {b, c})}) EXPECT_TRUE(s.contains(t)) << t.str();
    auto s2 = saturate(m, std::vector<Term>{f("sig", {f("sk", {n}), msg, r}), f("vk", {n})});
    EXPECT_TRUE(s2.contains(msg));
}

TEST_F(DeductionTest, CompositionAndPreferenceForHandles) {
    Knowledge k = K({f("pair", {a, b})});
    EXPECT_EQ(derivable(m, k, f("pair", {a, b})), handle(0));
    EXPECT_EQ(derivable(m, k, f("pair", {b, a})), f("pair", {f("snd", {handle(0)}), f("fst", {handle(0)})}));
    // duplicate entries resolve to the first handle
    Knowledge k2 = K({a, a});
    EXPECT_EQ(derivable(m, k2, a), handle(0));
}

TEST_F(DeductionTest, KeyDerivationRulesOnlyOutsideSapicMode) {
    Knowledge k = K({f("dk", {n})});
    EXPECT_EQ(derivable(m, k, f("ek", {n})), f("ekofdk", {handle(0)}));
    SymbolicModel s = SymbolicModel::pkenc_sig(true);
    EXPECT_FALSE(derivable(s, k, f("ek", {n})));
}

TEST_F(DeductionTest, NothingRestrictedFromEmptyKnowledge) {
    for (Term t : {n, a, msg}) EXPECT_FALSE(derivable(m, K({}), t));
}

// Properties over random knowledge sets.

namespace {

struct RandomCase {
    std::vector<Term> knowledge;
    Term target;
};

RandomCase random_case(testgen::MessageGen& g, int max_entries, int depth) {
    RandomCase rc;
    std::size_t count = g.pick(max_entries) + 1;
    for (std::size_t i = 0; i < count; ++i) rc.knowledge.push_back(g.message(static_cast<int>(g.pick(depth)) + 1));
    if (g.pick(3) == 0) {
        rc.target = g.message(2);
    } else {
        std::vector<Term> subs;
        for (Term k : rc.knowledge) collect_subterms(k, subs);
        rc.target = subs[g.pick(subs.size())];
    }
    return rc;
}

}  // namespace

TEST_F(DeductionTest, PropertySoundnessAndOracleAgreement) {
    std::mt19937_64 rng(2024);
    Term p1 = src.fresh(NonceSort::Protocol), p2 = src.fresh(NonceSort::Protocol),
         p3 = src.fresh(NonceSort::Protocol);
    testgen::MessageGen g(rng, {p1, p2, p3, adv});
    int positive = 0;
    for (int i = 0; i < 300; ++i) {
        RandomCase rc = random_case(g, 5, 4);
        Knowledge k = K(rc.knowledge);
        auto rec = derivable(m, k, rc.target);
        bool expect = oracle::derivable_bruteforce(m, rc.knowledge, rc.target, {adv});
        ASSERT_EQ(rec.has_value(), expect) << "target " << rc.target.str();
        if (rec) {
            ++positive;
            auto v = apply_recipe(m, k.entries, *rec);
            ASSERT_TRUE(v);
            EXPECT_TRUE(terms_equal(m, *v, rc.target));
        }
    }
    EXPECT_GT(positive, 50);
}

TEST_F(DeductionTest, PropertyMonotonicity) {
    std::mt19937_64 rng(99);
    Term p1 = src.fresh(NonceSort::Protocol), p2 = src.fresh(NonceSort::Protocol);
    testgen::MessageGen g(rng, {p1, p2, adv});
    for (int i = 0; i < 200; ++i) {
        RandomCase rc = random_case(g, 4, 3);
        Knowledge k = K(rc.knowledge);
        if (!derivable(m, k, rc.target)) continue;
        Knowledge bigger = k;
        bigger.add(g.message(2));
        EXPECT_TRUE(derivable(m, bigger, rc.target));
    }
}
