#include "statepi/cli.hpp"

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "statepi/checks.hpp"
#include "statepi/computational.hpp"
#include "statepi/deduction.hpp"
#include "statepi/parser.hpp"
#include "statepi/printer.hpp"

namespace spi {

namespace {

inline constexpr std::uint64_t kAdvNonceFloor = std::uint64_t{1} << 40;

// Recursive descent over the recipe syntax printed by Term::str.
class RecipeReader {
public:
    RecipeReader(const SymbolicModel& m, const std::string& s) : m_(m), s_(s) {}

    Action action() {
        std::string kind = ident();
        expect('(');
        std::size_t i = number();
        Action a;
        if (kind == "schedule") {
            a = Action::schedule(i);
        } else if (kind == "comm") {
            expect(',');
            a = Action::comm(i, number());
        } else if (kind == "out") {
            expect(',');
            a = Action::output(i, recipe());
        } else if (kind == "in") {
            expect(',');
            Term ch = recipe();
            expect(',');
            a = Action::input(i, ch, recipe());
        } else {
            fail("unknown action '" + kind + "'");
        }
        expect(')');
        skip();
        if (p_ != s_.size()) fail("trailing input");
        return a;
    }

private:
    Term recipe() {
        skip();
        if (peek() == '-') {
            ++p_;
            return {};
        }
        if (peek() == '$') {
            ++p_;
            std::uint64_t id = number();
            if (id < kAdvNonceFloor) fail("adversary nonce ids start at " + std::to_string(kAdvNonceFloor));
            return Term::nonce(id, NonceSort::Adversary);
        }
        std::string name = ident();
        if (auto h = handle_index(Term::var(Symbol(name)))) return handle(*h);
        const FuncSymbol* f = m_.find(Symbol(name));
        if (!f) fail("unknown symbol '" + name + "'");
        std::vector<Term> args;
        skip();
        if (peek() == '(') {
            ++p_;
            skip();
            if (peek() != ')') {
                args.push_back(recipe());
                skip();
                while (peek() == ',') {
                    ++p_;
                    args.push_back(recipe());
                    skip();
                }
            }
            expect(')');
        }
        if (args.size() != f->arity) fail("'" + name + "' expects " + std::to_string(f->arity) + " arguments");
        return Term::app(Symbol(name), std::move(args));
    }

    std::string ident() {
        skip();
        std::size_t b = p_;
        while (p_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[p_])) || s_[p_] == '_')) ++p_;
        if (b == p_) fail("identifier expected");
        return s_.substr(b, p_ - b);
    }

    std::uint64_t number() {
        skip();
        std::size_t b = p_;
        while (p_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p_]))) ++p_;
        if (b == p_) fail("number expected");
        return std::stoull(s_.substr(b, p_ - b));
    }

    void expect(char c) {
        skip();
        if (peek() != c) fail(std::string("'") + c + "' expected");
        ++p_;
    }
    char peek() const { return p_ < s_.size() ? s_[p_] : '\0'; }
    void skip() {
        while (p_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[p_]))) ++p_;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw UsageError("column " + std::to_string(p_ + 1) + ": " + msg + " in '" + s_ + "'");
    }

    const SymbolicModel& m_;
    const std::string& s_;
    std::size_t p_ = 0;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path + "'");
    f << text;
}

const char* dialect_name(Dialect d) { return d == Dialect::Sapic ? "sapic" : "statverif"; }

struct Loaded {
    ParsedFile file;
    Dialect dialect;
};

Loaded load(const RunConfig& rc) {
    std::string text = read_file(rc.input);
    std::optional<Dialect> d = rc.dialect ? rc.dialect : dialect_for_path(rc.input);
    if (!d) throw UsageError("cannot tell the dialect of '" + rc.input + "'; pass --dialect");
    Loaded l{parse_source(text, *d), *d};
    if (rc.rules == "sapic") l.file.model.set_sapic_mode(true);
    if (rc.rules == "statverif") l.file.model.set_sapic_mode(false);
    if (rc.strict_grammar) l.file.model.set_strict_grammar(true);
    return l;
}

std::string script_text(const std::vector<Action>& script) {
    std::string s;
    for (const Action& a : script) s += a.str() + "\n";
    return s;
}

int cmd_check(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    std::vector<Diagnostic> diags;
    std::string text = read_file(rc.input);
    std::optional<Dialect> d = rc.dialect ? rc.dialect : dialect_for_path(rc.input);
    if (!d) throw UsageError("cannot tell the dialect of '" + rc.input + "'; pass --dialect");
    try {
        ParsedFile pf = parse_source(text, *d);
        diags = check_restrictions(pf.process, *d);
    } catch (const ParseError& e) {
        diags.push_back({"parse", e.what(), e.pos});
    }
    for (const Diagnostic& g : diags) {
        nlohmann::ordered_json j;
        j["tag"] = g.tag;
        j["line"] = g.pos.line;
        j["col"] = g.pos.col;
        j["message"] = g.message;
        out << j.dump() << "\n";
        err << rc.input << ":" << g.str() << "\n";
    }
    if (diags.empty()) err << rc.input << ": ok (" << dialect_name(*d) << ")\n";
    return diags.empty() ? kExitOk : kExitViolated;
}

int cmd_encode(const RunConfig& rc, std::ostream& out, std::ostream&) {
    Loaded l = load(rc);
    if (l.dialect == Dialect::Sapic) throw UsageError("'" + rc.input + "' is already in the SAPIC dialect");
    EncodeOptions eo;
    eo.drop_unlock = rc.drop_unlock;
    PPtr enc = encode_process(l.file.process, false, eo);
    if (rc.process_only)
        out << print_process(l.file.model, enc, Dialect::Sapic) << "\n";
    else
        out << print_file(l.file.model, enc, Dialect::Sapic, l.file.theory.empty() ? "Encoded" : l.file.theory);
    return kExitOk;
}

int cmd_verify(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    Loaded l = load(rc);
    SymbolicModel& m = l.file.model;
    ExploreOptions opt;
    opt.engine.greedy_match = rc.greedy_match;

    auto colon = rc.property.find(':');
    if (colon == std::string::npos || colon + 1 == rc.property.size())
        throw UsageError("property must be absence:<event>, exclusive:<event> or secret:<term>");
    std::string kind = rc.property.substr(0, colon);
    std::string arg = rc.property.substr(colon + 1);

    Verdict v;
    PPtr p0 = l.file.process;
    if (kind == "secret") {
        if (l.dialect != Dialect::StatVerif) throw UsageError("secret:<term> applies to StatVerif input");
        Term secret = parse_term(arg, m);
        v = check_secrecy_statverif(m, p0, secret, rc.bounds, opt);
    } else {
        PropertySpec prop = kind == "absence"     ? PropertySpec::absence(Symbol(arg))
                            : kind == "exclusive" ? PropertySpec::never_both_derivable(Symbol(arg))
                                                  : throw UsageError("unknown property kind '" + kind + "'");
        if (l.dialect == Dialect::StatVerif) p0 = encode_process(p0, false);
        v = check(m, p0, rc.bounds, prop, opt);
    }

    nlohmann::ordered_json j;
    j["verdict"] = v.holds ? "holds" : "violated";
    j["property"] = rc.property;
    j["nodes"] = v.stats.nodes;
    j["leaves"] = v.stats.leaves;
    j["truncated"] = v.stats.truncated;
    j["witness_steps"] = v.script.size();
    out << j.dump() << "\n";
    if (v.witness) out << trace_json(m, *v.witness, Dialect::Sapic);

    err << rc.input << ": " << (v.holds ? "holds within bounds" : "violated") << " (" << v.stats.nodes << " nodes, "
        << v.stats.leaves << " runs)\n";
    if (v.stats.truncated > 0)
        err << "warning: truncated: " << v.stats.truncated << " runs hit max-steps; the verdict covers the explored prefix only\n";
    if (!v.holds) err << "witness:\n" << script_text(v.script);

    if (!rc.witness_out.empty() && !v.holds) write_file(rc.witness_out, script_text(v.script));
    if (!rc.trace_out.empty() && v.witness) write_file(rc.trace_out, trace_json(m, *v.witness, Dialect::Sapic));
    return v.holds ? kExitOk : kExitViolated;
}

int cmd_diff(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    Loaded l = load(rc);
    if (l.dialect != Dialect::StatVerif) throw UsageError("diff expects StatVerif input");
    DiffOptions o;
    o.max_configs = rc.max_configs;
    o.max_repl_unfold = rc.bounds.max_repl_unfold;
    o.encode.drop_unlock = rc.drop_unlock;
    DiffReport r = differential_statverif(l.file.model, l.file.process, o);
    for (const DiffEdge& e : r.unmatched) {
        nlohmann::ordered_json j;
        j["direction"] = e.direction;
        j["config"] = e.config;
        j["action"] = e.action;
        j["label"] = e.label;
        j["reason"] = e.reason;
        out << j.dump() << "\n";
    }
    err << r.str();
    return r.empty() ? kExitOk : kExitViolated;
}

int cmd_exec(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    if (rc.k < 1) throw UsageError("--k must be positive");
    Loaded l = load(rc);
    PPtr p0 = l.dialect == Dialect::StatVerif ? encode_process(l.file.process, false) : l.file.process;
    std::vector<Action> script = rc.script.empty() ? std::vector<Action>{} : parse_script(l.file.model, read_file(rc.script));
    EngineOptions eo;
    eo.greedy_match = rc.greedy_match;
    CompTrace t = exec_computational(l.file.model, p0, script, rc.k, rc.seed, eo);
    for (const CompEvent& e : t.events) {
        nlohmann::ordered_json j;
        j["event"] = e.sym.str();
        auto& args = j["args"] = nlohmann::ordered_json::array();
        for (const Bitstring& b : e.args) args.push_back(hex(b));
        out << j.dump() << "\n";
    }
    err << rc.input << ": " << script.size() << " actions, " << t.events.size() << " events, " << t.knowledge.size()
        << " messages known\n";
    return kExitOk;
}

}  // namespace

Action parse_action(const SymbolicModel& m, const std::string& line) { return RecipeReader(m, line).action(); }

std::vector<Action> parse_script(const SymbolicModel& m, const std::string& text) {
    std::vector<Action> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        auto e = line.find_last_not_of(" \t\r");
        out.push_back(parse_action(m, line.substr(b, e - b + 1)));
    }
    return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig rc;
    CLI::App app{"Bounded analysis of stateful applied pi processes", "spi"};
    app.require_subcommand(1);

    std::string dialect;
    auto input = [&](CLI::App* s) {
        s->add_option("input", rc.input, "Process file (.sapic or .sv)")->required();
        s->add_option("--dialect", dialect, "Override the dialect chosen from the extension")
            ->check(CLI::IsMember({"sapic", "statverif"}));
        s->add_flag("--strict-grammar", rc.strict_grammar, "Constructors outside the message grammar yield bottom");
        s->add_option("--rules", rc.rules, "Destructor rule set (default: per dialect)")
            ->check(CLI::IsMember({"sapic", "statverif"}));
    };
    auto bounds = [&](CLI::App* s) {
        s->add_option("--max-steps", rc.bounds.max_steps, "Scheduling decisions per run")->check(CLI::NonNegativeNumber);
        s->add_option("--max-repl", rc.bounds.max_repl_unfold, "Copies per replication site")->check(CLI::NonNegativeNumber);
        s->add_option("--recipe-depth", rc.bounds.max_recipe_depth, "Constructor layers in adversary inputs")
            ->check(CLI::NonNegativeNumber);
        s->add_option("--adv-nonces", rc.bounds.max_new_adv_nonces, "Fresh adversary nonces per run")
            ->check(CLI::NonNegativeNumber);
    };

    auto* check = app.add_subcommand("check", "Parse and report restriction violations");
    input(check);
    auto* encode = app.add_subcommand("encode", "Translate a StatVerif process to SAPIC");
    input(encode);
    encode->add_flag("--process-only", rc.process_only, "Print only the main process");
    encode->add_flag("--drop-unlock", rc.drop_unlock, "Seeded encoder fault, for testing");
    auto* verify = app.add_subcommand("verify", "Bounded search for a property violation");
    input(verify);
    bounds(verify);
    verify->add_option("--prop", rc.property, "absence:<event>, exclusive:<event> or secret:<term>");
    verify->add_option("--witness", rc.witness_out, "Write the counterexample script here");
    verify->add_option("--trace-out", rc.trace_out, "Write the counterexample trace as JSON lines");
    verify->add_flag("--greedy-match", rc.greedy_match, "First-fit msr matching");
    auto* diff = app.add_subcommand("diff", "Compare StatVerif runs with runs of the encoding");
    input(diff);
    diff->add_option("--max-repl", rc.bounds.max_repl_unfold, "Copies per replication site")->check(CLI::NonNegativeNumber);
    diff->add_option("--max-configs", rc.max_configs, "StatVerif configurations to explore");
    diff->add_flag("--drop-unlock", rc.drop_unlock, "Seeded encoder fault, for testing");
    auto* exec = app.add_subcommand("exec", "Run an action script on byte strings");
    input(exec);
    exec->add_option("--script", rc.script, "Action script, one action per line");
    exec->add_option("--k", rc.k, "Security parameter in bits")->check(CLI::PositiveNumber);
    exec->add_option("--seed", rc.seed, "Seed for nonce draws");
    exec->add_flag("--greedy-match", rc.greedy_match, "First-fit msr matching");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (!dialect.empty()) rc.dialect = dialect == "sapic" ? Dialect::Sapic : Dialect::StatVerif;
    rc.subcommand = app.get_subcommands().front()->get_name();

    try {
        if (rc.subcommand == "check") return cmd_check(rc, out, err);
        if (rc.subcommand == "encode") return cmd_encode(rc, out, err);
        if (rc.subcommand == "verify") return cmd_verify(rc, out, err);
        if (rc.subcommand == "diff") return cmd_diff(rc, out, err);
        return cmd_exec(rc, out, err);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << rc.input << ":" << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace spi
