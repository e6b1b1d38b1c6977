#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <regex>
#include <set>

#include "corpus.hpp"
#include "gen.hpp"
#include "statepi/explorer.hpp"
#include "statepi/parser.hpp"

using namespace spi;

namespace {

struct Fixture {
    SymbolicModel m = SymbolicModel::pkenc_sig(true);
    PPtr parse(const std::string& s) { return parse_process(s, Dialect::Sapic, m); }
};

Bounds small(int steps = 12, int depth = 1) {
    Bounds b;
    b.max_steps = steps;
    b.max_recipe_depth = depth;
    return b;
}

ParsedFile load(const char* rel) { return parse_source(testcorpus::read(rel), *dialect_for_path(rel)); }

PPtr sapic_of(const ParsedFile& pf) {
    return pf.dialect == Dialect::StatVerif ? encode_process(pf.process, false) : pf.process;
}

std::string single_user(std::string src) {
    auto at = src.find("! user");
    src.replace(at, 6, "user");
    return src;
}

// Tiny model for enumeration: one pairing constructor and a hash.
const char* kTiny = "fun pair/2. fun h/1. reduc fst(pair(x,y)) = x.\nprocess 0\n";

std::set<std::string> event_args(const Trace& t) {
    std::set<std::string> out;
    for (const EventLabel& e : t.events())
        for (Term a : e.args) out.insert(a.str());
    return out;
}

}  // namespace

TEST(Explore, PublicOutputReachesKnowledge) {
    Fixture f;
    PPtr p = f.parse("new n; out(c, n)");
    bool seen = false;
    explore(f.m, p, small(), [&](const Trace& t) {
        for (const TraceStep& s : t.steps)
            if (s.kind == StepKind::Know && s.know.is_nonce() && s.know.nonce_sort() == NonceSort::Protocol)
                seen = true;
        return true;
    });
    EXPECT_TRUE(seen);
}

TEST(Explore, EnumerationCoversEveryRecipeValue) {
    ParsedFile pf = parse_statverif(kTiny);
    PPtr p = parse_process("in(c, x); event A(x)", Dialect::Sapic, pf.model);
    ExploreOptions opt;
    opt.inputs = InputMode::Enumerate;
    opt.partial_order = false;
    std::multiset<std::string> got;
    explore(pf.model, p, small(12, 2), [&](const Trace& t) {
        for (auto& s : event_args(t)) got.insert(s);
        return true;
    }, opt);

    // Independent count: atoms are the published channel and one adversary
    // nonce; each layer applies h and pair to everything built so far.
    std::set<std::string> values{"c", "N"};
    for (int d = 0; d < 2; ++d) {
        std::set<std::string> next = values;
        for (auto& a : values) {
            next.insert("h(" + a + ")");
            for (auto& b : values) next.insert("pair(" + a + "," + b + ")");
        }
        values = next;
    }
    EXPECT_EQ(got.size(), values.size());
    EXPECT_EQ(std::set<std::string>(got.begin(), got.end()).size(), got.size());
}

TEST(Explore, DoubleLockDeadlocks) {
    Fixture f;
    PPtr p = f.parse("lock m; lock m; event After");
    std::size_t leaves = 0;
    explore(f.m, p, small(), [&](const Trace& t) {
        ++leaves;
        EXPECT_FALSE(t.truncated);
        EXPECT_TRUE(t.events().empty());
        return true;
    });
    EXPECT_EQ(leaves, 1u);
    EXPECT_TRUE(check(f.m, p, small(), PropertySpec::absence(Symbol("After"))).holds);
}

TEST(Explore, VisitorCanStop) {
    Fixture f;
    PPtr p = f.parse("!(in(c, x); event A(x))");
    ExploreOptions opt;
    opt.inputs = InputMode::Enumerate;
    int calls = 0;
    explore(f.m, p, small(), [&](const Trace&) { return ++calls < 3; }, opt);
    EXPECT_EQ(calls, 3);
}

TEST(Explore, StepBoundTruncates) {
    Fixture f;
    PPtr p = f.parse("!(in(c, x); out(c, x))");
    bool truncated = false;
    explore(f.m, p, small(1), [&](const Trace& t) {
        truncated = truncated || t.truncated;
        return true;
    });
    EXPECT_TRUE(truncated);
    Verdict v = check(f.m, p, small(0), PropertySpec::absence(Symbol("A")));
    EXPECT_TRUE(v.holds);
}

TEST(Check, ToyLeakViolatesExclusivity) {
    Fixture f;
    PPtr p = f.parse("new n; event Mark(n, n); out(c, n)");
    PropertySpec prop = PropertySpec::never_both_derivable(Symbol("Mark"));
    Verdict v = check(f.m, p, small(), prop);
    ASSERT_FALSE(v.holds);
    ASSERT_TRUE(v.witness);
    Trace replay = run_trace(f.m, p, v.script);
    EXPECT_TRUE(prop.violated_by(f.m, replay));
    EXPECT_EQ(replay.events(), v.witness->events());
}

TEST(Check, SecretKeptWhenNeverSent) {
    Fixture f;
    PPtr p = f.parse("new n; event Mark(n, n); out(c, ek(n))");
    EXPECT_TRUE(check(f.m, p, small(), PropertySpec::never_both_derivable(Symbol("Mark"))).holds);
}

TEST(Check, NoEventMeansAbsence) {
    Fixture f;
    PPtr p = f.parse("in(c, x); out(c, pair(x, x))");
    EXPECT_TRUE(check(f.m, p, small(), PropertySpec::absence(Symbol("NotSecret"))).holds);
}

TEST(Check, LazyInputFindsGuardedEvent) {
    Fixture f;
    // The adversary has to send a pair whose first component is a.
    PPtr p = f.parse("in(c, x); if fst(x) = a then event Bad");
    Verdict v = check(f.m, p, small(), PropertySpec::absence(Symbol("Bad")));
    ASSERT_FALSE(v.holds);
    EXPECT_TRUE(PropertySpec::absence(Symbol("Bad")).violated_by(f.m, run_trace(f.m, p, v.script)));
}

TEST(Check, LazyInputRespectsFreshness) {
    Fixture f;
    PPtr p = f.parse("new k; in(c, x); if x = k then event Bad");
    EXPECT_TRUE(check(f.m, p, small(), PropertySpec::absence(Symbol("Bad"))).holds);
}

TEST(Check, LockOrderingIsExplored) {
    Fixture f;
    PPtr p = f.parse(
        "new s; insert s, a; ((lock s; lookup s as x in insert s, pair(x, x); unlock s) || "
        "(lock s; lookup s as y in event E(y); unlock s))");
    auto no_pair = PropertySpec::custom("no E(pair)", [&](const SymbolicModel&, const Trace& t) {
        for (const EventLabel& e : t.events())
            if (!e.args.empty() && e.args[0].is_app()) return false;
        return true;
    });
    auto no_plain = PropertySpec::custom("no E(a)", [&](const SymbolicModel&, const Trace& t) {
        for (const EventLabel& e : t.events())
            if (!e.args.empty() && e.args[0].is_nonce()) return false;
        return true;
    });
    EXPECT_FALSE(check(f.m, p, small(), no_pair).holds);
    EXPECT_FALSE(check(f.m, p, small(), no_plain).holds);
}

TEST(Check, Deterministic) {
    ParsedFile pf = load("left_right_mutant.sapic");
    PropertySpec prop = PropertySpec::never_both_derivable(Symbol("Exclusive"));
    Verdict a = check(pf.model, pf.process, Bounds{}, prop);
    Verdict b = check(pf.model, pf.process, Bounds{}, prop);
    ASSERT_FALSE(a.holds);
    EXPECT_EQ(a.script, b.script);
    EXPECT_EQ(a.stats.nodes, b.stats.nodes);
    EXPECT_EQ(a.stats.refinements, b.stats.refinements);
}

TEST(Check, MonotoneInStepBound) {
    ParsedFile pf = load("left_right_mutant.sv");
    PPtr p = sapic_of(pf);
    PropertySpec prop = PropertySpec::never_both_derivable(Symbol("Exclusive"));
    bool seen = false;
    for (int s = 0; s <= 16; s += 2) {
        Bounds b;
        b.max_steps = s;
        bool violated = !check(pf.model, p, b, prop).holds;
        if (seen) EXPECT_TRUE(violated) << s;
        seen = seen || violated;
    }
    EXPECT_TRUE(seen);
}

TEST(LeftRight, DeviceKeepsOneSide) {
    for (const char* f : {"left_right.sv", "left_right.sapic"}) {
        ParsedFile pf = load(f);
        Verdict v = check(pf.model, sapic_of(pf), Bounds{}, PropertySpec::never_both_derivable(Symbol("Exclusive")));
        EXPECT_TRUE(v.holds) << f;
        EXPECT_EQ(v.stats.rejected_witnesses, 0u) << f;
    }
}

TEST(LeftRight, MutantLeaksBothSides) {
    PropertySpec prop = PropertySpec::never_both_derivable(Symbol("Exclusive"));
    for (const char* f : {"left_right_mutant.sv", "left_right_mutant.sapic"}) {
        ParsedFile pf = load(f);
        PPtr p = sapic_of(pf);
        Verdict v = check(pf.model, p, Bounds{}, prop);
        ASSERT_FALSE(v.holds) << f;
        EXPECT_TRUE(prop.violated_by(pf.model, run_trace(pf.model, p, v.script))) << f;
    }
}

TEST(Secrecy, EchoedSecretIsFound) {
    Fixture f;
    ensure_equal(f.m);
    PPtr p = parse_process("out(c, m)", Dialect::StatVerif, f.m);
    Verdict v = check_secrecy_statverif(f.m, p, Term::name(Symbol("m")), small());
    EXPECT_FALSE(v.holds);
}

TEST(Secrecy, UnusedRestrictionStaysSecret) {
    Fixture f;
    PPtr p = parse_process("new n; 0", Dialect::StatVerif, f.m);
    EXPECT_TRUE(check_secrecy_statverif(f.m, p, Term::name(Symbol("n")), small()).holds);
}

TEST(Secrecy, MutantDeviceLeaksThePair) {
    ParsedFile pf = parse_statverif(single_user(testcorpus::read("left_right_mutant.sv")));
    Term secret = parse_term("pair(sl, sr)", pf.model);
    Verdict v = check_secrecy_statverif(pf.model, pf.process, secret, Bounds{});
    EXPECT_FALSE(v.holds);
}

TEST(Secrecy, CorrectDeviceKeepsThePair) {
    ParsedFile pf = parse_statverif(single_user(testcorpus::read("left_right.sv")));
    Term secret = parse_term("pair(sl, sr)", pf.model);
    EXPECT_TRUE(check_secrecy_statverif(pf.model, pf.process, secret, Bounds{}).holds);
}

TEST(Secrecy, ReplicatedSecretIsRejected) {
    ParsedFile pf = load("left_right.sv");
    Term secret = parse_term("pair(sl, sr)", pf.model);
    EXPECT_THROW(check_secrecy_statverif(pf.model, pf.process, secret, Bounds{}), UsageError);
}

// Reductions must not change verdicts. Random lock-disciplined processes
// are encoded and checked with every combination of reductions, using
// enumerated inputs so that custom predicates see concrete values.
TEST(ExploreProperty, ReductionsPreserveVerdicts) {
    std::mt19937 rng(11);
    SymbolicModel m = SymbolicModel::pkenc_sig(true);
    Term a = Term::name(Symbol("a"));
    std::vector<PropertySpec> props{
        PropertySpec::absence(Symbol("E")),
        PropertySpec::custom("no E(a)", [](const SymbolicModel&, const Trace& t) {
            for (const EventLabel& e : t.events())
                if (e.args.size() == 1 && e.args[0].is_nonce() && e.args[0].str().find('a') != std::string::npos)
                    return false;
            return true;
        }),
        PropertySpec::custom("no E(pair)", [](const SymbolicModel&, const Trace& t) {
            for (const EventLabel& e : t.events())
                if (e.args.size() == 1 && e.args[0].is_app()) return false;
            return true;
        }),
    };
    int checked = 0;
    for (int i = 0; i < 150; ++i) {
        testgen::SvGen g{rng};
        PPtr p;
        try {
            p = encode_process(g.top(4), false);
        } catch (const UsageError&) {
            continue;
        }
        Bounds b = small(30, 1);
        for (const PropertySpec& prop : props) {
            std::vector<bool> verdicts;
            for (int mode = 0; mode < 4; ++mode) {
                ExploreOptions opt;
                opt.inputs = InputMode::Enumerate;
                opt.max_enumerated = 50;
                opt.partial_order = mode & 1;
                opt.merge_states = mode & 2;
                verdicts.push_back(check(m, p, b, prop, opt).holds);
            }
            EXPECT_TRUE(std::all_of(verdicts.begin(), verdicts.end(), [&](bool v) { return v == verdicts[0]; }))
                << prop.str() << " on sample " << i;
        }
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(ExploreProperty, LazyAgreesWithEnumeration) {
    std::mt19937 rng(5);
    SymbolicModel m = SymbolicModel::pkenc_sig(true);
    PropertySpec prop = PropertySpec::absence(Symbol("E"));
    int violated = 0;
    for (int i = 0; i < 150; ++i) {
        testgen::SvGen g{rng};
        PPtr p;
        try {
            p = encode_process(g.top(4), false);
        } catch (const UsageError&) {
            continue;
        }
        Bounds b = small(30, 1);
        ExploreOptions en;
        en.inputs = InputMode::Enumerate;
        bool lazy = check(m, p, b, prop).holds;
        EXPECT_EQ(lazy, check(m, p, b, prop, en).holds) << "sample " << i;
        violated += !lazy;
    }
    EXPECT_GT(violated, 10);
}

TEST(ExploreProperty, ScriptedRunsAppearInExploration) {
    Fixture f;
    PPtr p = f.parse("new s; insert s, a; (!(lock s; lookup s as x in insert s, pair(x, b); event E(x); unlock s)) || "
                     "(in(c, y); event F(y))");
    ExploreOptions opt;
    opt.partial_order = false;
    opt.inputs = InputMode::Enumerate;
    std::vector<std::vector<EventLabel>> runs;
    Bounds b = small(14, 1);
    explore(f.m, p, b, [&](const Trace& t) {
        runs.push_back(t.events());
        return true;
    }, opt);
    std::mt19937 rng(3);
    for (int i = 0; i < 60; ++i) {
        SapicConfig cfg = initial_config(p);
        std::vector<Action> script;
        for (int k = 0; k < 14; ++k) {
            auto acts = enabled_actions(f.m, cfg);
            std::erase_if(acts, [&](const Action& a) {
                if (a.kind != Action::Kind::Schedule || cfg.procs[a.proc].node->kind != PKind::Repl) return false;
                auto it = cfg.unfolds.find(cfg.procs[a.proc].node->uid);
                return it != cfg.unfolds.end() && it->second >= 2;
            });
            if (acts.empty()) break;
            Action a = acts[std::uniform_int_distribution<std::size_t>(0, acts.size() - 1)(rng)];
            if (a.kind == Action::Kind::AdvInput) a.payload = handle(0);
            script.push_back(a);
            cfg = step(f.m, cfg, a).first;
        }
        std::vector<EventLabel> ev = run_trace(f.m, p, script).events();
        bool found = std::any_of(runs.begin(), runs.end(), [&](const std::vector<EventLabel>& r) {
            return r.size() >= ev.size() && std::equal(ev.begin(), ev.end(), r.begin());
        });
        EXPECT_TRUE(found) << "script " << i;
    }
}

TEST(Diff, EmptyProcessIsTriviallyMatched) {
    Fixture f;
    PPtr p = parse_process("0", Dialect::StatVerif, f.m);
    DiffReport r = differential_statverif(f.m, p);
    EXPECT_TRUE(r.empty());
    EXPECT_EQ(r.statverif_configs, 1u);
}

TEST(Diff, StatelessProcessesMatch) {
    for (const char* f : {"rows/event.sv", "rows/in.sv", "rows/let.sv", "rows/out.sv", "rows/par.sv", "rows/repl.sv",
                          "diff/let_else.sv", "diff/unguarded.sv"}) {
        ParsedFile pf = load(f);
        DiffReport r = differential_statverif(pf.model, pf.process);
        EXPECT_TRUE(r.empty()) << f << "\n" << r.str();
        EXPECT_GT(r.forward_edges + r.backward_edges + (r.statverif_configs == 1), 0u);
    }
}

TEST(Diff, OnlyGapIsLookupOfUninitializedCell) {
    for (const char* f : {"rows/assign_b1.sv", "rows/read_b1.sv", "diff/counter.sv"}) {
        ParsedFile pf = load(f);
        DiffReport r = differential_statverif(pf.model, pf.process);
        ASSERT_FALSE(r.empty()) << f;
        for (const DiffEdge& e : r.unmatched) {
            EXPECT_EQ(e.direction, "backward") << f;
            EXPECT_NE(e.reason.find("uninitialized cell"), std::string::npos) << f << ": " << e.reason;
        }
    }
}

TEST(Diff, DroppedUnlockIsReported) {
    ParsedFile pf = load("diff/unguarded.sv");
    DiffOptions opt;
    opt.encode.drop_unlock = true;
    DiffReport r = differential_statverif(pf.model, pf.process, opt);
    EXPECT_FALSE(r.empty());
    bool other = false;
    for (const DiffEdge& e : r.unmatched) other = other || e.reason.find("uninitialized cell") == std::string::npos;
    EXPECT_TRUE(other);
}

TEST(Diff, ReportText) {
    ParsedFile pf = load("rows/read_b1.sv");
    std::string s = differential_statverif(pf.model, pf.process).str();
    EXPECT_TRUE(std::regex_search(s, std::regex("unmatched: 1\n  backward config \\d+ ")));
}
