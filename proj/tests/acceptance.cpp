// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 1 when
// any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "corpus.hpp"
#include "gen.hpp"
#include "oracles.hpp"
#include "statepi/cli.hpp"
#include "statepi/computational.hpp"
#include "statepi/deduction.hpp"
#include "statepi/parser.hpp"
#include "statepi/sapic.hpp"

using namespace spi;
namespace fs = std::filesystem;

namespace {

struct Result {
    bool pass;
    std::string detail;
};

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "spi");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string corpus(const std::string& rel) { return (testcorpus::dir() / rel).string(); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2fs", s);
    return buf;
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / "spi_acceptance";
    fs::create_directories(d);
    return d / name;
}

ParsedFile load(const std::string& rel) {
    std::string path = corpus(rel);
    return parse_source(testcorpus::read(path), *dialect_for_path(path));
}

// 1. Left-or-right secrecy holds on the StatVerif script and the SAPIC model.
Result left_right() {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    for (const char* f : {"left_right.sv", "left_right.sapic"}) {
        CliRun r = cli({"verify", corpus(f), "--prop", "exclusive:Exclusive", "--max-steps", "40", "--max-repl", "2",
                        "--recipe-depth", "3"});
        bool holds = r.code == kExitOk && r.out.rfind("{\"verdict\":\"holds\"", 0) == 0;
        ok = ok && holds;
        detail += std::string(f) + " " + (holds ? "holds" : "exit " + std::to_string(r.code)) + "; ";
    }
    double s = seconds_since(t0);
    ok = ok && s < 60.0;
    return {ok, detail + "total " + fmt_seconds(s)};
}

// 2. The mutant device is caught, and a hand-written attack replays.
Result mutant() {
    bool ok = true;
    std::string detail;
    PropertySpec prop = PropertySpec::never_both_derivable(Symbol("Exclusive"));
    for (const char* f : {"left_right_mutant.sv", "left_right_mutant.sapic"}) {
        fs::path w = scratch(std::string(f) + ".witness");
        fs::remove(w);
        CliRun r = cli({"verify", corpus(f), "--witness", w.string()});
        ParsedFile pf = load(f);
        PPtr p0 = pf.dialect == Dialect::StatVerif ? encode_process(pf.process, false) : pf.process;
        bool replays = false;
        if (r.code == kExitViolated && fs::exists(w)) {
            auto script = parse_script(pf.model, testcorpus::read(w));
            replays = !script.empty() && prop.violated_by(pf.model, run_trace(pf.model, p0, script));
        }
        ok = ok && replays;
        detail += std::string(f) + (replays ? " violated, witness replays; " : " not caught; ");
    }

    // Unfold a session, let one user run, then feed its ciphertext to the
    // second device branch, which prints both halves.
    ParsedFile pf = load("left_right_mutant.sapic");
    std::vector<Action> attack = {
        Action::schedule(0), Action::schedule(1), Action::schedule(1), Action::schedule(1),
        Action::schedule(4), Action::schedule(5), Action::schedule(5), Action::schedule(5),
        Action::schedule(5), Action::output(5, {}), Action::schedule(3), Action::input(3, {}, handle(0)),
        Action::schedule(3), Action::schedule(3), Action::schedule(3), Action::schedule(3),
        Action::output(3, {}), Action::output(3, {}),
    };
    bool hand = false;
    try {
        hand = prop.violated_by(pf.model, run_trace(pf.model, pf.process, attack));
    } catch (const UsageError& e) {
        detail += std::string("attack script rejected: ") + e.what() + "; ";
    }
    ok = ok && hand;
    detail += hand ? "hand-written attack violates" : "hand-written attack does not violate";
    return {ok, detail};
}

// 3. derivable against the brute-force closure.
Result deduction_oracle() {
    auto t0 = std::chrono::steady_clock::now();
    SymbolicModel m = SymbolicModel::pkenc_sig();
    NonceSource src;
    std::vector<Term> nonces;
    for (int i = 0; i < 3; ++i) nonces.push_back(src.fresh(NonceSort::Protocol));
    Term adv = src.fresh(NonceSort::Adversary);
    nonces.push_back(adv);
    std::mt19937_64 rng(31337);
    testgen::MessageGen g(rng, nonces);
    const int total = 1000;
    int agree = 0, positive = 0;
    for (int i = 0; i < total; ++i) {
        std::vector<Term> k;
        std::size_t count = g.pick(5) + 1;
        for (std::size_t j = 0; j < count; ++j) k.push_back(g.message(static_cast<int>(g.pick(4)) + 1));
        Term target;
        if (g.pick(3) == 0) {
            target = g.message(static_cast<int>(g.pick(4)) + 1);
        } else {
            std::vector<Term> subs;
            for (Term t : k) collect_subterms(t, subs);
            target = subs[g.pick(subs.size())];
        }
        bool got = derivable(m, Knowledge{k, {}}, target).has_value();
        bool want = oracle::derivable_bruteforce(m, k, target, {adv});
        agree += got == want;
        positive += want;
    }
    double s = seconds_since(t0);
    bool ok = agree == total && s < 30.0;
    return {ok, std::to_string(agree) + "/" + std::to_string(total) + " agree (" + std::to_string(positive) +
                    " derivable), " + fmt_seconds(s)};
}

// 4. f_match against substitution enumeration.
Result fmatch_oracle() {
    SymbolicModel m = SymbolicModel::pkenc_sig(true);
    std::mt19937 rng(4242);
    std::vector<Term> values{Term::nonce(1, NonceSort::Protocol), Term::nonce(2, NonceSort::Protocol),
                             Term::constant(Symbol("empty"))};
    testgen::FactGen g{rng, values};
    std::vector<std::pair<std::vector<Fact>, std::vector<Fact>>> cases;

    // Duplicate linear facts: two copies are needed to match twice.
    Term x = Term::var(Symbol("x"));
    Term a = values[0], b = values[1];
    Fact fx{Symbol("F"), false, {x}}, fa{Symbol("F"), false, {a}}, fb{Symbol("F"), false, {b}};
    cases.push_back({{fx, fx}, {fa, fb}});
    cases.push_back({{fx, fx}, {fa, fa}});
    cases.push_back({{fx, fx}, {fa}});
    cases.push_back({{fx, fx}, {fb, fa, fa}});
    for (int i = 0; i < 1000; ++i) cases.push_back(g.instance());

    int agree = 0, sound = 0, matched = 0;
    for (auto& [lhs, ms] : cases) {
        auto r = f_match(m, lhs, ms);
        bool want = oracle::match_bruteforce(lhs, ms);
        agree += r.has_value() == want;
        if (!r) continue;
        ++matched;
        auto ground = [&](const Fact& f) {
            Fact out = f;
            for (Term& t : out.args)
                if (t.is_var()) t = r->tau.at(t);
            return out;
        };
        sound += oracle::satisfies(lhs, ms, ground);
    }
    int total = static_cast<int>(cases.size());
    bool ok = agree == total && sound == matched;
    return {ok, std::to_string(agree) + "/" + std::to_string(total) + " agree, " + std::to_string(sound) + "/" +
                    std::to_string(matched) + " matches satisfy inclusion and presence"};
}

// 5. Both simulation directions on the corpus; the dropped-unlock encoder
// must be noticed.
Result simulation() {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<fs::path> files;
    for (const char* d : {"rows", "diff"})
        for (auto& e : fs::directory_iterator(testcorpus::dir() / d)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    files.push_back(testcorpus::dir() / "left_right.sv");

    std::size_t clean = 0;
    std::string gaps;
    for (const fs::path& f : files) {
        ParsedFile pf = parse_statverif(testcorpus::read(f));
        DiffReport r = differential_statverif(pf.model, pf.process);
        if (r.empty()) {
            ++clean;
        } else {
            gaps += " " + f.stem().string() + "=" + std::to_string(r.unmatched.size());
        }
    }
    ParsedFile pf = parse_statverif(testcorpus::read(testcorpus::dir() / "diff" / "unguarded.sv"));
    DiffOptions mut;
    mut.encode.drop_unlock = true;
    bool mutant_seen = !differential_statverif(pf.model, pf.process, mut).empty();

    bool ok = clean == files.size() && mutant_seen;
    std::string detail = std::to_string(clean) + "/" + std::to_string(files.size()) + " files matched";
    if (!gaps.empty()) detail += "; unmatched:" + gaps;
    detail += mutant_seen ? "; mutant reported" : "; mutant not reported";
    return {ok, detail + ", " + fmt_seconds(seconds_since(t0))};
}

// 6. Golden encodings of the translation rows.
Result golden() {
    int total = 0, same = 0;
    std::string bad;
    for (auto& e : fs::directory_iterator(testcorpus::dir() / "rows")) {
        ++total;
        std::string want = testcorpus::read(testcorpus::dir() / "golden" / (e.path().stem().string() + ".sapic"));
        CliRun r = cli({"encode", "--process-only", e.path().string()});
        if (r.code == kExitOk && r.out == want)
            ++same;
        else
            bad += " " + e.path().stem().string();
    }
    return {total > 0 && same == total,
            std::to_string(same) + "/" + std::to_string(total) + " rows match" + (bad.empty() ? "" : ":" + bad)};
}

// 7. Symbolic and computational runs raise the same events.
Result agreement() {
    auto t0 = std::chrono::steady_clock::now();
    ParsedFile pf = load("left_right.sapic");
    std::mt19937 rng(77);
    int same = 0, events = 0;
    const int runs = 100;
    for (int i = 0; i < runs; ++i) {
        auto script = testgen::random_script(rng, pf.model, pf.process, 60);
        Trace sym = run_trace(pf.model, pf.process, script);
        CompTrace comp = exec_computational(pf.model, pf.process, script, 64, 1000 + i);
        std::vector<EventLabel> ev = sym.events();
        bool eq = ev.size() == comp.events.size();
        for (std::size_t j = 0; eq && j < ev.size(); ++j) {
            eq = ev[j].sym == comp.events[j].sym && ev[j].args.size() == comp.events[j].args.size();
            for (std::size_t k = 0; eq && k < ev[j].args.size(); ++k)
                eq = encode_with(comp, ev[j].args[k]) == comp.events[j].args[k];
        }
        same += eq;
        events += static_cast<int>(ev.size());
    }
    double s = seconds_since(t0);
    bool ok = same == runs && events > 0 && s < 60.0;
    return {ok, std::to_string(same) + "/" + std::to_string(runs) + " runs identical (" + std::to_string(events) +
                    " events), " + fmt_seconds(s)};
}

// 8. Each restriction fixture is rejected with its rule tag.
Result restrictions() {
    const std::pair<const char*, const char*> fixtures[] = {
        {"fixtures/pattern_input.sapic", "in-pattern"},
        {"fixtures/msr_nested.sapic", "msr-nested"},
        {"fixtures/double_init.sv", "sv-init-dup"},
        {"fixtures/par_under_lock.sv", "sv-lock-par"},
    };
    int ok = 0;
    std::string bad;
    for (auto [f, tag] : fixtures) {
        CliRun r = cli({"check", corpus(f)});
        if (r.code == kExitViolated && r.out.find(std::string("\"tag\":\"") + tag + "\"") != std::string::npos)
            ++ok;
        else
            bad += std::string(" ") + f;
    }
    return {ok == 4, std::to_string(ok) + "/4 fixtures rejected" + (bad.empty() ? "" : ":" + bad)};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Result()>> criteria[] = {
        {"left-or-right secrecy holds within bounds", left_right},
        {"mutant device violates with a concrete witness", mutant},
        {"derivable agrees with brute-force closure", deduction_oracle},
        {"f_match agrees with substitution enumeration", fmatch_oracle},
        {"encoding simulation has no unmatched transitions", simulation},
        {"encode output equals golden files", golden},
        {"symbolic and computational events agree", agreement},
        {"restriction fixtures are rejected", restrictions},
    };
    int failed = 0, n = 0;
    for (auto& [name, run] : criteria) {
        ++n;
        Result r;
        try {
            r = run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        failed += !r.pass;
        std::cout << (r.pass ? "PASS" : "FAIL") << " " << n << " " << name << ": " << r.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
