#include <gtest/gtest.h>

#include <random>
#include <set>

#include "corpus.hpp"
#include "statepi/checks.hpp"
#include "statepi/parser.hpp"
#include "statepi/printer.hpp"

using namespace spi;

namespace {

std::vector<std::string> tags(const std::vector<Diagnostic>& ds) {
    std::vector<std::string> out;
    for (auto& d : ds) out.push_back(d.tag);
    return out;
}

bool has_tag(const std::vector<Diagnostic>& ds, const std::string& t) {
    for (auto& d : ds)
        if (d.tag == t) return true;
    return false;
}

ParsedFile load(const std::string& rel) {
    auto d = dialect_for_path(rel);
    return parse_source(testcorpus::read(rel), *d);
}

}  // namespace

TEST(Parse, InsertQuotedConstant) {
    SymbolicModel m;
    PPtr p = parse_process("insert s,'init'; 0", Dialect::Sapic, m);
    ASSERT_EQ(p->kind, PKind::Insert);
    EXPECT_EQ(p->t1, Term::name(Symbol("s")));
    EXPECT_EQ(p->t2, Term::constant(Symbol("init")));
    ASSERT_NE(m.find(Symbol("init")), nullptr);
    EXPECT_TRUE(m.find(Symbol("init"))->quoted);
    EXPECT_EQ(p->p->kind, PKind::Nil);
}

TEST(Parse, Nil) {
    SymbolicModel m;
    EXPECT_EQ(parse_process("0", Dialect::Sapic, m)->kind, PKind::Nil);
    EXPECT_EQ(parse_process("0", Dialect::StatVerif, m)->kind, PKind::Nil);
}

TEST(Parse, MsrOneFactEachSide) {
    SymbolicModel m;
    m.add_constructor(Symbol("fun"), 2);
    PPtr p = parse_process("[Iter(x)]-[]->[Iter(fun(x,x))]", Dialect::Sapic, m);
    ASSERT_EQ(p->kind, PKind::Msr);
    ASSERT_EQ(p->lhs.size(), 1u);
    ASSERT_EQ(p->rhs.size(), 1u);
    EXPECT_FALSE(p->lhs[0].persistent);
    EXPECT_FALSE(p->rhs[0].persistent);
    EXPECT_TRUE(p->events.empty());
    Term x = Term::var(Symbol("x"));
    EXPECT_EQ(p->lhs[0].args[0], x);
    EXPECT_EQ(p->rhs[0].args[0], Term::app(Symbol("fun"), {x, x}));
    EXPECT_EQ(p->bound_vars, std::vector<Symbol>{Symbol("x")});
}

TEST(Parse, MsrPersistentAndLabels) {
    SymbolicModel m;
    PPtr p = parse_process("[!Key(k), Ctr(n)] -[Use(k), Tick]-> [Ctr(k)]", Dialect::Sapic, m);
    ASSERT_EQ(p->kind, PKind::Msr);
    EXPECT_TRUE(p->lhs[0].persistent);
    EXPECT_FALSE(p->lhs[1].persistent);
    ASSERT_EQ(p->events.size(), 2u);
    EXPECT_TRUE(p->events[1].args.empty());
}

TEST(Parse, StatVerifInit) {
    SymbolicModel m;
    PPtr p = parse_process("[s |-> init]", Dialect::StatVerif, m);
    ASSERT_EQ(p->kind, PKind::SvInit);
    EXPECT_EQ(p->t1, Term::name(Symbol("s")));
    EXPECT_EQ(p->t2, Term::name(Symbol("init")));
}

TEST(Parse, StatVerifLockInRead) {
    SymbolicModel m;
    PPtr p = parse_process("lock; in(c,x); read s as y; out(c, y)", Dialect::StatVerif, m);
    ASSERT_EQ(p->kind, PKind::SvLock);
    ASSERT_EQ(p->p->kind, PKind::In);
    EXPECT_EQ(p->p->t1, Term::name(Symbol("c")));
    EXPECT_EQ(p->p->bound, Symbol("x"));
    ASSERT_EQ(p->p->p->kind, PKind::SvRead);
    EXPECT_EQ(p->p->p->bound, Symbol("y"));
    // y is bound by the read
    EXPECT_EQ(p->p->p->p->t2, Term::var(Symbol("y")));
}

TEST(Parse, StatVerifAssignUnlock) {
    SymbolicModel m;
    PPtr p = parse_process("in(c, x); s := x; unlock", Dialect::StatVerif, m);
    PPtr a = p->p;
    ASSERT_EQ(a->kind, PKind::SvAssign);
    EXPECT_EQ(a->t1, Term::name(Symbol("s")));
    EXPECT_EQ(a->t2, Term::var(Symbol("x")));
    ASSERT_EQ(a->p->kind, PKind::SvUnlock);
    EXPECT_EQ(a->p->p->kind, PKind::Nil);
}

TEST(Parse, ElseBindsInnermost) {
    SymbolicModel m;
    PPtr p = parse_process("if a = b then if a = c then out(a) else out(b)", Dialect::Sapic, m);
    ASSERT_EQ(p->kind, PKind::Let);
    EXPECT_TRUE(p->cond);
    EXPECT_FALSE(p->has_else);
    EXPECT_TRUE(p->p->has_else);
}

TEST(Parse, ContinuationTakesParallel) {
    SymbolicModel m;
    PPtr p = parse_process("new n; out(n) | out(n)", Dialect::Sapic, m);
    ASSERT_EQ(p->kind, PKind::New);
    EXPECT_EQ(p->p->kind, PKind::Par);
    PPtr q = parse_process("!out(a) || out(b)", Dialect::Sapic, m);
    ASSERT_EQ(q->kind, PKind::Par);
    EXPECT_EQ(q->p->kind, PKind::Repl);
}

TEST(Parse, ErrorsCarryPositions) {
    SymbolicModel m;
    m.add_constructor(Symbol("pair"), 2);
    try {
        parse_process("out(c,\n  pair(a))", Dialect::StatVerif, m);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.pos.line, 2);
        EXPECT_NE(std::string(e.what()).find("arity"), std::string::npos);
    }
    EXPECT_THROW(parse_process("out(c, h(a))", Dialect::StatVerif, m), ParseError);
    EXPECT_THROW(parse_process("out(c, a", Dialect::StatVerif, m), ParseError);
    EXPECT_THROW(parse_process("lock s", Dialect::StatVerif, m), ParseError);
}

TEST(Parse, RejectsUnsupportedRule) {
    EXPECT_THROW(parse_statverif("fun h/1. fun g/1. reduc f(h(x)) = g(h(h(x))). process 0"), ParseError);
    EXPECT_THROW(parse_statverif("reduc f(x) = y. process 0"), ParseError);
    EXPECT_NO_THROW(parse_statverif("fun h/1. fun g/1. reduc f(h(x)) = g(x). process 0"));
}

TEST(Parse, SapicModelFromFunctionsAndEquations) {
    ParsedFile pf = load("left_right.sapic");
    EXPECT_EQ(pf.theory, "LeftRightCase");
    EXPECT_TRUE(pf.model.is_constructor(Symbol("enc")));
    EXPECT_TRUE(pf.model.is_destructor(Symbol("dec")));
    // declared without an equation: nothing marks it as a destructor
    EXPECT_TRUE(pf.model.is_constructor(Symbol("ekofdk")));
    EXPECT_TRUE(pf.model.is_destructor(Symbol("equal")));
    EXPECT_TRUE(pf.model.subterm_convergent());
    EXPECT_EQ(pf.queries.size(), 1u);
    EXPECT_EQ(pf.process->kind, PKind::Repl);
}

TEST(Parse, StatVerifModelFromReduc) {
    ParsedFile pf = load("left_right.sv");
    EXPECT_TRUE(pf.model.is_destructor(Symbol("ekofdk")));
    EXPECT_EQ(pf.model.find(Symbol("vkof"))->arity, 1u);
    EXPECT_EQ(pf.queries.size(), 1u);
    EXPECT_EQ(pf.process->kind, PKind::New);
}

TEST(Check, CorpusScriptsAreClean) {
    for (const char* f : {"left_right.sv", "left_right.sapic", "left_right_mutant.sv", "left_right_mutant.sapic"}) {
        ParsedFile pf = load(f);
        auto ds = check_restrictions(pf.process, pf.dialect);
        EXPECT_TRUE(ds.empty()) << f << ": " << (ds.empty() ? "" : ds[0].str());
    }
}

TEST(Check, SeededFixturesAreRejected) {
    struct Case {
        const char* file;
        const char* tag;
    } cases[] = {{"fixtures/pattern_input.sapic", "in-pattern"},
                 {"fixtures/msr_nested.sapic", "msr-nested"},
                 {"fixtures/double_init.sv", "sv-init-dup"},
                 {"fixtures/par_under_lock.sv", "sv-lock-par"}};
    for (auto& c : cases) {
        ParsedFile pf = load(c.file);
        auto ds = check_restrictions(pf.process, pf.dialect);
        EXPECT_TRUE(has_tag(ds, c.tag)) << c.file;
    }
}

TEST(Check, MsrFreeVariableOnRight) {
    SymbolicModel m;
    PPtr p = parse_process("[A(x)] --> [B(y)]", Dialect::Sapic, m);
    EXPECT_TRUE(has_tag(check_restrictions(p, Dialect::Sapic), "msr-fv"));
    PPtr q = parse_process("in(y); [A(x)] --> [B(x, y)]", Dialect::Sapic, m);
    EXPECT_TRUE(check_restrictions(q, Dialect::Sapic).empty());
}

TEST(Check, InitScopeAndDialect) {
    SymbolicModel m;
    PPtr p = parse_process("new s; out(c, a); [s |-> a]", Dialect::StatVerif, m);
    EXPECT_EQ(tags(check_restrictions(p, Dialect::StatVerif)), std::vector<std::string>{"sv-init-scope"});
    PPtr q = parse_process("new s; !([s |-> a] | out(c, s))", Dialect::StatVerif, m);
    EXPECT_TRUE(check_restrictions(q, Dialect::StatVerif).empty());
    PPtr r = parse_process("insert a, b", Dialect::Sapic, m);
    EXPECT_TRUE(has_tag(check_restrictions(r, Dialect::StatVerif), "dialect"));
}

TEST(Check, LockRegionEndsAtUnlock) {
    SymbolicModel m;
    PPtr ok = parse_process("new s; [s |-> a] | lock; read s as x; unlock; (out(c, x) | out(c, a))",
                            Dialect::StatVerif, m);
    EXPECT_TRUE(check_restrictions(ok, Dialect::StatVerif).empty());
}

TEST(Names, FreeNamesAndVars) {
    SymbolicModel m;
    auto fn = free_names(parse_process("out(c, n)", Dialect::StatVerif, m));
    EXPECT_EQ(std::set<Symbol>(fn.begin(), fn.end()), (std::set<Symbol>{Symbol("c"), Symbol("n")}));
    fn = free_names(parse_process("new n; out(c, n)", Dialect::StatVerif, m));
    EXPECT_EQ(fn, std::vector<Symbol>{Symbol("c")});
    EXPECT_TRUE(free_vars(load("left_right.sapic").process).empty());
}

TEST(Names, AlphaRename) {
    SymbolicModel m;
    PPtr p = parse_process("new n; (out(c, n) | new n; out(c, n))", Dialect::StatVerif, m);
    PPtr r = alpha_rename(p);
    EXPECT_EQ(r->bound, Symbol("n"));
    PPtr inner = r->p->q;
    ASSERT_EQ(inner->kind, PKind::New);
    EXPECT_NE(inner->bound, Symbol("n"));
    EXPECT_EQ(inner->p->t2, Term::name(inner->bound));
    EXPECT_EQ(free_names(r), free_names(p));
    // idempotent
    EXPECT_TRUE(same_process(alpha_rename(r), r));
    // binders below ! are left alone
    PPtr q = parse_process("new n; !new n; out(c, n)", Dialect::StatVerif, m);
    EXPECT_EQ(alpha_rename(q)->p->p->bound, Symbol("n"));
}

TEST(Print, FragmentsInBothDialects) {
    SymbolicModel m;
    m.add_constructor(Symbol("pair"), 2);
    PPtr p = parse_process("insert s,'init'; lookup s as y in out(pair(y, y)) else 0", Dialect::Sapic, m);
    EXPECT_EQ(print_process(m, p, Dialect::Sapic), "insert s,'init'; lookup s as y in out(pair(y, y)) else 0");
    SymbolicModel sv;
    PPtr q = parse_process("[s |-> init] | lock; s := a; unlock", Dialect::StatVerif, sv);
    EXPECT_EQ(print_process(sv, q, Dialect::StatVerif), "[s |-> init] | (lock; s := a; unlock)");
}

TEST(Print, ThenBranchKeepsItsShape) {
    SymbolicModel m;
    PPtr inner = parse_process("if a = b then out(a)", Dialect::Sapic, m);
    PPtr outer = make_if(Term::name(Symbol("c")), Term::name(Symbol("d")), inner, make_nil(), true);
    std::string s = print_process(m, outer, Dialect::Sapic);
    EXPECT_TRUE(same_process(parse_process(s, Dialect::Sapic, m), outer)) << s;
}

TEST(Print, RoundTripOnCorpus) {
    for (auto& path : testcorpus::sources()) {
        auto d = *dialect_for_path(path.string());
        ParsedFile a = parse_source(testcorpus::read(path), d);
        std::string text = print_file(a.model, a.process, d);
        ParsedFile b;
        ASSERT_NO_THROW(b = parse_source(text, d)) << path << "\n" << text;
        EXPECT_TRUE(same_process(a.process, b.process)) << path << "\n" << text;
        EXPECT_EQ(print_file(b.model, b.process, d), text) << path;
        EXPECT_EQ(a.model.rules().size(), b.model.rules().size()) << path;
    }
}

namespace {

// Random processes over a small vocabulary; variables are always bound.
struct ProcGen {
    std::mt19937& rng;
    Dialect d;
    std::vector<Symbol> vars;

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

    Term term() {
        int k = pick(4);
        if (k == 0 && !vars.empty()) return Term::var(vars[pick(static_cast<int>(vars.size()))]);
        if (k == 1) return Term::app(Symbol("pair"), {term(), term()});
        if (k == 2) return Term::constant(Symbol("k0"));
        return Term::name(Symbol(pick(2) ? "a" : "b"));
    }

    Symbol bind() {
        Symbol x("x" + std::to_string(vars.size()));
        vars.push_back(x);
        return x;
    }

    PPtr proc(int depth) {
        if (depth == 0) return make_nil();
        std::size_t mark = vars.size();
        PPtr out;
        int k = pick(d == Dialect::Sapic ? 13 : 12);
        switch (k) {
            case 0: out = make_nil(); break;
            case 1: out = make_par(proc(depth - 1), proc(depth - 1)); break;
            case 2: out = make_repl(proc(depth - 1)); break;
            case 3: out = make_new(Symbol("n"), proc(depth - 1)); break;
            case 4: out = make_out(pick(2) ? Term() : term(), term(), proc(depth - 1)); break;
            case 5: {
                Term ch = pick(2) ? Term() : term();
                Symbol x = bind();
                out = make_in(ch, x, proc(depth - 1));
                break;
            }
            case 6: {
                Term t = Term::app(Symbol("fst"), {term()});
                PPtr q = proc(depth - 1);
                bool e = pick(2);
                if (!e) q = make_nil();
                Symbol x = bind();
                out = make_let(x, t, proc(depth - 1), q, e);
                break;
            }
            case 7: {
                PPtr q = proc(depth - 1);
                bool e = pick(2);
                if (!e) q = make_nil();
                out = make_if(term(), term(), proc(depth - 1), q, e);
                break;
            }
            case 8: out = make_event({Symbol("E"), pick(2) ? std::vector<Term>{} : std::vector<Term>{term()}},
                                     proc(depth - 1));
                break;
            default:
                if (d == Dialect::StatVerif) {
                    switch (k) {
                        case 9: out = make_sv_init(Term::name(Symbol("s")), term()); break;
                        case 10: out = make_sv_assign(Term::name(Symbol("s")), term(), proc(depth - 1)); break;
                        default:
                            if (pick(2)) {
                                Symbol x = bind();
                                out = make_sv_read(Term::name(Symbol("s")), x, proc(depth - 1));
                            } else {
                                out = make_sv_lock(make_sv_unlock(proc(depth - 1)));
                            }
                    }
                } else {
                    switch (k) {
                        case 9: out = make_insert(term(), term(), proc(depth - 1)); break;
                        case 10: out = make_delete(term(), pick(2) ? make_lock(term(), proc(depth - 1))
                                                                   : make_unlock(term(), proc(depth - 1)));
                            break;
                        case 11: {
                            PPtr q = proc(depth - 1);
                            bool e = pick(2);
                            if (!e) q = make_nil();
                if (!e) q = make_nil();
                            Term key = term();
                            Symbol x = bind();
                            out = make_lookup(key, x, proc(depth - 1), q, e);
                            break;
                        }
                        default: {
                            // unbound identifiers on a left side are pattern variables, so no names here
                            Term t = vars.empty() ? Term::constant(Symbol("k0"))
                                                  : Term::app(Symbol("pair"), {Term::var(vars.back()),
                                                                               Term::constant(Symbol("k0"))});
                            out = make_msr({Fact{Symbol("F"), false, {Term::var(Symbol("m"))}},
                                            Fact{Symbol("G"), true, {t}}},
                                           {EventLabel{Symbol("E"), {Term::var(Symbol("m"))}}},
                                           {Fact{Symbol("H"), false, {Term::var(Symbol("m")), t}}},
                                           proc(depth - 1));
                        }
                    }
                }
        }
        vars.resize(mark);
        return out;
    }
};

}  // namespace

TEST(Print, RoundTripRandomProcesses) {
    std::mt19937 rng(7);
    for (Dialect d : {Dialect::Sapic, Dialect::StatVerif}) {
        SymbolicModel m;
        m.add_constructor(Symbol("pair"), 2);
        m.add_constructor(Symbol("k0"), 0);
        m.add_destructor(Symbol("fst"), 1);
        for (int i = 0; i < 400; ++i) {
            ProcGen g{rng, d, {}};
            PPtr p = g.proc(5);
            std::string s = print_process(m, p, d);
            PPtr q;
            ASSERT_NO_THROW(q = parse_process(s, d, m)) << s;
            EXPECT_TRUE(same_process(p, q)) << s << "\n" << print_process(m, q, d);
        }
    }
}
