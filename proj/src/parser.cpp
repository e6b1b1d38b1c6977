#include "statepi/parser.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace spi {

namespace {

enum class Tk : std::uint8_t { Ident, Quoted, Number, Punct, String, End };

struct Tok {
    Tk kind = Tk::End;
    std::string text;
    SrcPos pos;
};

std::vector<Tok> lex(std::string_view s) {
    std::vector<Tok> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto adv = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < s.size(); ++k, ++i) {
            if (s[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    auto starts = [&](std::string_view p) { return s.substr(i, p.size()) == p; };
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            adv(1);
            continue;
        }
        if (starts("//")) {
            while (i < s.size() && s[i] != '\n') adv(1);
            continue;
        }
        if (starts("/*") || starts("(*")) {
            std::string_view close = starts("/*") ? "*/" : "*)";
            SrcPos p{line, col};
            adv(2);
            while (i < s.size() && !starts(close)) adv(1);
            if (i >= s.size()) throw ParseError("unterminated comment", p);
            adv(2);
            continue;
        }
        Tok t;
        t.pos = {line, col};
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            t.kind = Tk::Ident;
            t.text = std::string(s.substr(i, j - i));
            adv(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            t.kind = Tk::Number;
            t.text = std::string(s.substr(i, j - i));
            adv(j - i);
        } else if (c == '\'') {
            std::size_t j = i + 1;
            while (j < s.size() && s[j] != '\'' && s[j] != '\n') ++j;
            if (j >= s.size() || s[j] != '\'') throw ParseError("unterminated quoted constant", t.pos);
            t.kind = Tk::Quoted;
            t.text = std::string(s.substr(i + 1, j - i - 1));
            if (t.text.empty()) throw ParseError("empty quoted constant", t.pos);
            adv(j - i + 1);
        } else if (c == '"') {
            std::size_t j = i + 1;
            while (j < s.size() && s[j] != '"') ++j;
            t.kind = Tk::String;
            t.text = std::string(s.substr(i + 1, j - i - 1));
            adv(j - i + 1);
        } else {
            static const char* multi[] = {"|->", "-->", "==>", "||", ":=", "->", "<=>"};
            t.kind = Tk::Punct;
            for (const char* m : multi) {
                if (starts(m)) {
                    t.text = m;
                    break;
                }
            }
            if (t.text.empty()) t.text = std::string(1, c);
            adv(t.text.size());
        }
        out.push_back(std::move(t));
    }
    Tok end;
    end.kind = Tk::End;
    end.pos = {line, col};
    out.push_back(end);
    return out;
}

enum class Ctx : std::uint8_t { Normal, MsrLhs, MsrRhs, Rule, Ground };

class Parser {
public:
    Parser(std::vector<Tok> toks, Dialect d, SymbolicModel& m) : toks_(std::move(toks)), d_(d), m_(m) {}

    ParsedFile file() {
        ParsedFile pf;
        pf.dialect = d_;
        if (d_ == Dialect::Sapic) sapic_top(pf);
        else statverif_top(pf);
        if (!pf.process) throw ParseError("no main process", peek().pos);
        return pf;
    }

    PPtr bare_process() {
        PPtr p = process();
        if (peek().kind != Tk::End) fail("unexpected '" + peek().text + "' after process");
        return p;
    }

    Term bare_term() {
        ctx_ = Ctx::Ground;
        Term t = term();
        if (peek().kind != Tk::End) fail("unexpected '" + peek().text + "' after term");
        return t;
    }

private:
    // ---- token helpers
    const Tok& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    bool is(std::string_view p, std::size_t k = 0) const {
        const Tok& t = peek(k);
        return (t.kind == Tk::Punct || t.kind == Tk::Ident || t.kind == Tk::Number) && t.text == p;
    }
    bool accept(std::string_view p) {
        if (!is(p)) return false;
        ++pos_;
        return true;
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().pos); }
    void expect(std::string_view p) {
        if (!accept(p)) fail("expected '" + std::string(p) + "' but found '" + describe(peek()) + "'");
    }
    static std::string describe(const Tok& t) { return t.kind == Tk::End ? "end of input" : t.text; }
    std::string ident() {
        if (peek().kind != Tk::Ident) fail("expected identifier but found '" + describe(peek()) + "'");
        return toks_[pos_++].text;
    }
    std::size_t number() {
        if (peek().kind != Tk::Number) fail("expected number");
        return std::stoul(toks_[pos_++].text);
    }

    bool keyword(std::string_view w) const {
        static const char* kws[] = {"new", "out", "in", "let", "if", "then", "else", "event", "insert",
                                    "delete", "lookup", "as", "lock", "unlock", "read", "process"};
        for (const char* k : kws)
            if (w == k) return true;
        return false;
    }

    // ---- scope
    struct Binding {
        Symbol sym;
        bool is_name;
    };

    std::optional<Term> resolve(Symbol s) const {
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
            if (it->sym == s) return it->is_name ? Term::name(s) : Term::var(s);
        return std::nullopt;
    }

    struct ScopeGuard {
        Parser& p;
        std::size_t n;
        explicit ScopeGuard(Parser& p) : p(p), n(p.scope_.size()) {}
        ~ScopeGuard() { p.scope_.resize(n); }
    };

    // ---- terms
    Term term() {
        const Tok& t = peek();
        if (t.kind == Tk::Quoted) {
            ++pos_;
            Symbol s(t.text);
            if (const FuncSymbol* f = m_.find(s); f && (f->kind != FuncKind::Constructor || f->arity != 0))
                throw ParseError("quoted constant '" + t.text + "' clashes with a function symbol", t.pos);
            m_.add_constructor(s, 0, true);
            return Term::constant(s);
        }
        if (t.kind == Tk::Punct && t.text == "(") {
            ++pos_;
            Term x = term();
            expect(")");
            return x;
        }
        if (t.kind != Tk::Ident) fail("expected term but found '" + describe(t) + "'");
        SrcPos at = t.pos;
        std::string name = ident();
        Symbol s(name);
        if (accept("(")) {
            std::vector<Term> args;
            if (!is(")")) {
                do args.push_back(term());
                while (accept(","));
            }
            expect(")");
            const FuncSymbol* f = m_.find(s);
            if (!f) throw ParseError("unknown function symbol '" + name + "'", at);
            if (f->arity != args.size())
                throw ParseError("arity mismatch for '" + name + "': expected " + std::to_string(f->arity) +
                                     ", got " + std::to_string(args.size()),
                                 at);
            return Term::app(s, std::move(args));
        }
        if (ctx_ == Ctx::Rule) {
            if (const FuncSymbol* f = m_.find(s); f && f->arity == 0 && f->kind == FuncKind::Constructor)
                return Term::constant(s);
            return Term::var(s);
        }
        if (auto b = resolve(s)) return *b;
        if (const FuncSymbol* f = m_.find(s); f && f->arity == 0 && f->kind == FuncKind::Constructor)
            return Term::constant(s);
        // a macro body may use a function name as a name bound at the use site
        if (const FuncSymbol* f = m_.find(s); f && f->arity > 0 && !dry_)
            throw ParseError("function symbol '" + name + "' used without arguments", at);
        switch (ctx_) {
            case Ctx::MsrLhs:
                msr_bound_.push_back(s);
                scope_.push_back({s, false});
                return Term::var(s);
            case Ctx::MsrRhs:
                return Term::var(s);
            default:
                return Term::name(s);
        }
    }

    // ---- processes
    template <class T>
    PPtr at(T&& p, SrcPos pos) {
        std::const_pointer_cast<Process>(p)->pos = pos;
        return p;
    }

    PPtr process() {
        PPtr left = seq();
        while (is("|") || is("||")) {
            SrcPos p = peek().pos;
            ++pos_;
            PPtr right = seq();
            left = at(make_par(left, right), p);
        }
        return left;
    }

    PPtr cont() {
        if (accept(";")) return process();
        return make_nil();
    }

    std::pair<PPtr, bool> else_branch() {
        if (accept("else")) return {process(), true};
        return {make_nil(), false};
    }

    PPtr seq() {
        const Tok& t = peek();
        SrcPos p = t.pos;
        if (t.kind == Tk::Number) {
            if (t.text != "0") fail("unexpected number '" + t.text + "'");
            ++pos_;
            return at(make_nil(), p);
        }
        if (accept("(")) {
            PPtr x = process();
            expect(")");
            return x;
        }
        if (accept("!")) return at(make_repl(seq()), p);
        if (t.kind == Tk::Punct && t.text == "[") {
            if (d_ == Dialect::StatVerif) return sv_init();
            return msr();
        }
        if (t.kind != Tk::Ident) fail("expected process but found '" + describe(t) + "'");
        const std::string& w = t.text;
        if (w == "new") {
            ++pos_;
            Symbol n(ident());
            ScopeGuard g(*this);
            scope_.push_back({n, true});
            expect(";");
            return at(make_new(n, process()), p);
        }
        if (w == "out") {
            ++pos_;
            expect("(");
            Term a = term();
            Term ch, msg = a;
            if (accept(",")) {
                ch = a;
                msg = term();
            }
            expect(")");
            return at(make_out(ch, msg, cont()), p);
        }
        if (w == "in") {
            ++pos_;
            expect("(");
            Term ch;
            std::size_t save = pos_;
            // channel is present when the first argument is followed by a comma
            int depth = 0;
            bool two = false;
            for (std::size_t k = pos_; k < toks_.size() && toks_[k].kind != Tk::End; ++k) {
                const auto& x = toks_[k];
                if (x.kind == Tk::Punct && x.text == "(") ++depth;
                if (x.kind == Tk::Punct && x.text == ")") {
                    if (depth == 0) break;
                    --depth;
                }
                if (depth == 0 && x.kind == Tk::Punct && x.text == ",") {
                    two = true;
                    break;
                }
            }
            pos_ = save;
            if (two) {
                ch = term();
                expect(",");
            }
            ScopeGuard g(*this);
            if (peek().kind == Tk::Ident && is(")", 1)) {
                Symbol x(ident());
                expect(")");
                scope_.push_back({x, false});
                return at(make_in(ch, x, cont()), p);
            }
            // pattern input: accepted here, rejected by check_restrictions
            Ctx saved = ctx_;
            ctx_ = Ctx::MsrLhs;
            std::vector<Symbol> bound_before = std::move(msr_bound_);
            msr_bound_.clear();
            Term pat = term();
            ctx_ = saved;
            msr_bound_ = std::move(bound_before);
            expect(")");
            auto n = std::const_pointer_cast<Process>(make_in(ch, Symbol(), cont()));
            n->t2 = pat;
            return at(PPtr(n), p);
        }
        if (w == "let") {
            ++pos_;
            Symbol x(ident());
            expect("=");
            Term v = term();
            expect("in");
            PPtr then;
            {
                ScopeGuard g(*this);
                scope_.push_back({x, false});
                then = process();
            }
            auto [els, has] = else_branch();
            return at(make_let(x, v, then, els, has), p);
        }
        if (w == "if") {
            ++pos_;
            Term a = term();
            expect("=");
            Term b = term();
            expect("then");
            PPtr then = process();
            auto [els, has] = else_branch();
            return at(make_if(a, b, then, els, has), p);
        }
        if (w == "event") {
            ++pos_;
            EventLabel e{Symbol(ident()), {}};
            if (accept("(")) {
                if (!is(")")) {
                    do e.args.push_back(term());
                    while (accept(","));
                }
                expect(")");
            }
            return at(make_event(std::move(e), cont()), p);
        }
        if (w == "insert") {
            ++pos_;
            Term k = term();
            expect(",");
            Term v = term();
            return at(make_insert(k, v, cont()), p);
        }
        if (w == "delete") {
            ++pos_;
            Term k = term();
            return at(make_delete(k, cont()), p);
        }
        if (w == "lookup") {
            ++pos_;
            Term k = term();
            expect("as");
            Symbol x(ident());
            expect("in");
            PPtr then;
            {
                ScopeGuard g(*this);
                scope_.push_back({x, false});
                then = process();
            }
            auto [els, has] = else_branch();
            return at(make_lookup(k, x, then, els, has), p);
        }
        if (w == "lock" || w == "unlock") {
            ++pos_;
            bool lock = w == "lock";
            if (d_ == Dialect::StatVerif) return at(lock ? make_sv_lock(cont()) : make_sv_unlock(cont()), p);
            Term k = term();
            return at(lock ? make_lock(k, cont()) : make_unlock(k, cont()), p);
        }
        if (w == "read" && d_ == Dialect::StatVerif) {
            ++pos_;
            Term cell = term();
            expect("as");
            Symbol x(ident());
            ScopeGuard g(*this);
            scope_.push_back({x, false});
            return at(make_sv_read(cell, x, cont()), p);
        }
        if (d_ == Dialect::StatVerif && is(":=", 1)) {
            Term cell = term();
            expect(":=");
            Term v = term();
            return at(make_sv_assign(cell, v, cont()), p);
        }
        auto mit = macros_.find(w);
        if (mit != macros_.end()) {
            ++pos_;
            if (++macro_depth_ > 64) fail("macro expansion too deep");
            std::size_t resume = pos_;
            pos_ = mit->second.first;
            PPtr body = process();
            if (pos_ != mit->second.second) fail("macro body did not re-parse to the same extent");
            pos_ = resume;
            --macro_depth_;
            return body;
        }
        if (keyword(w)) fail("unexpected keyword '" + w + "'");
        fail("unknown process or macro '" + w + "'");
    }

    PPtr sv_init() {
        SrcPos p = peek().pos;
        expect("[");
        Term cell = term();
        expect("|->");
        Term v = term();
        expect("]");
        return at(make_sv_init(cell, v), p);
    }

    std::vector<Fact> facts() {
        std::vector<Fact> out;
        expect("[");
        if (!is("]")) {
            do {
                Fact f;
                f.persistent = accept("!");
                f.sym = Symbol(ident());
                expect("(");
                if (!is(")")) {
                    do f.args.push_back(term());
                    while (accept(","));
                }
                expect(")");
                out.push_back(std::move(f));
            } while (accept(","));
        }
        expect("]");
        return out;
    }

    PPtr msr() {
        SrcPos p = peek().pos;
        ScopeGuard g(*this);
        Ctx saved = ctx_;
        msr_bound_.clear();
        ctx_ = Ctx::MsrLhs;
        std::vector<Fact> l = facts();
        ctx_ = Ctx::MsrRhs;
        std::vector<EventLabel> ev;
        if (!accept("-->")) {
            expect("-");
            expect("[");
            if (!is("]")) {
                do {
                    EventLabel e{Symbol(ident()), {}};
                    if (accept("(")) {
                        if (!is(")")) {
                            do e.args.push_back(term());
                            while (accept(","));
                        }
                        expect(")");
                    }
                    ev.push_back(std::move(e));
                } while (accept(","));
            }
            expect("]");
            expect("->");
        }
        std::vector<Fact> r = facts();
        ctx_ = saved;
        std::vector<Symbol> bound = msr_bound_;
        std::sort(bound.begin(), bound.end());
        bound.erase(std::unique(bound.begin(), bound.end()), bound.end());
        return at(make_msr(std::move(l), std::move(ev), std::move(r), cont(), std::move(bound)), p);
    }

    // ---- declarations
    void macro_def() {
        std::string name = ident();
        expect("=");
        std::size_t begin = pos_;
        bool saved = dry_;
        dry_ = true;
        process();  // locate the extent; re-parsed at each use
        dry_ = saved;
        macros_[name] = {begin, pos_};
    }

    DestructorRule rule(bool declare_head) {
        SrcPos at = peek().pos;
        Ctx saved = ctx_;
        ctx_ = Ctx::Rule;
        Symbol head(ident());
        expect("(");
        std::vector<Term> lhs;
        if (!is(")")) {
            do lhs.push_back(term());
            while (accept(","));
        }
        expect(")");
        expect("=");
        Term rhs = term();
        ctx_ = saved;
        if (declare_head && !m_.find(head)) m_.add_destructor(head, lhs.size());
        DestructorRule r{head, std::move(lhs), rhs};
        if (!rule_supported(r))
            throw ParseError("rule " + r.str() + " is outside the supported subterm shape", at);
        return r;
    }

    void add_rule(DestructorRule r, SrcPos at) {
        try {
            m_.add_rule(std::move(r));
        } catch (const UsageError& e) {
            throw ParseError(e.what(), at);
        }
    }

    void skip_until(std::initializer_list<std::string_view> stops) {
        while (peek().kind != Tk::End) {
            for (auto s : stops)
                if (peek().kind == Tk::Ident && peek().text == s) return;
            ++pos_;
        }
    }

    void sapic_top(ParsedFile& pf) {
        std::vector<std::pair<std::string, std::size_t>> decls;
        std::vector<std::pair<Tok, std::size_t>> rule_starts;
        bool model_done = false;
        auto finish_model = [&]() {
            if (model_done) return;
            model_done = true;
            // parse equations again now that heads are known as destructors
            std::vector<std::string> heads;
            for (auto& [tok, start] : rule_starts) heads.push_back(tok.text);
            for (auto& [n, a] : decls) {
                Symbol s(n);
                if (std::find(heads.begin(), heads.end(), n) != heads.end()) {
                    if (!m_.is_destructor(s)) m_.add_destructor(s, a);
                } else if (!m_.find(s)) {
                    m_.add_constructor(s, a);
                } else if (m_.find(s)->arity != a) {
                    throw ParseError("symbol '" + n + "' redeclared", peek().pos);
                }
            }
            std::size_t resume = pos_;
            for (auto& [tok, start] : rule_starts) {
                pos_ = start;
                if (!m_.find(Symbol(tok.text)))
                    throw ParseError("equation head '" + tok.text + "' is not declared", tok.pos);
                add_rule(rule(false), tok.pos);
            }
            pos_ = resume;
            m_.set_sapic_mode(true);
        };
        while (peek().kind != Tk::End) {
            const Tok& t = peek();
            if (t.kind == Tk::Ident && t.text == "theory") {
                ++pos_;
                pf.theory = ident();
                accept("begin");
            } else if (t.kind == Tk::Ident && t.text == "builtins" && is(":", 1)) {
                pos_ += 2;
                while (peek().kind == Tk::Ident && !is(":", 1) && peek().text != "let") {
                    ++pos_;
                    accept(",");
                }
            } else if (t.kind == Tk::Ident && t.text == "functions" && is(":", 1)) {
                pos_ += 2;
                while (peek().kind == Tk::Ident && is("/", 1)) {
                    std::string n = ident();
                    expect("/");
                    decls.emplace_back(n, number());
                    accept(",");  // separators are optional
                }
            } else if (t.kind == Tk::Ident && t.text == "equations" && is(":", 1)) {
                pos_ += 2;
                // record rule positions, skipping over them; parsed in finish_model
                do {
                    if (peek().kind != Tk::Ident) fail("expected equation");
                    rule_starts.push_back({peek(), pos_});
                    int depth = 0;
                    while (peek().kind != Tk::End) {
                        if (is("(")) ++depth;
                        if (is(")")) --depth;
                        ++pos_;
                        if (depth == 0 && is("=")) break;
                    }
                    expect("=");
                    skip_term();
                } while (accept(","));
            } else if (t.kind == Tk::Ident && t.text == "let" && !is_let_binding()) {
                finish_model();
                ++pos_;
                macro_def();
            } else if (t.kind == Tk::Ident &&
                       (t.text == "lemma" || t.text == "restriction" || t.text == "axiom")) {
                std::size_t start = pos_;
                ++pos_;
                skip_until({"lemma", "restriction", "axiom", "end"});
                std::string text;
                for (std::size_t k = start; k < pos_; ++k) text += toks_[k].text + " ";
                pf.queries.push_back(text);
            } else if (t.kind == Tk::Ident && t.text == "end") {
                ++pos_;
                if (peek().kind != Tk::End) fail("text after 'end'");
            } else {
                finish_model();
                if (pf.process) fail("more than one main process");
                if (t.kind == Tk::Ident && t.text == "process") {
                    ++pos_;
                    accept(":");
                }
                pf.process = process();
            }
        }
        finish_model();
    }

    // `let x = t in P` at top level is the main process, not a macro.
    bool is_let_binding() {
        std::size_t save = pos_;
        bool binding = false;
        try {
            ++pos_;
            ident();
            expect("=");
            Ctx saved = ctx_;
            term();
            ctx_ = saved;
            binding = is("in");
        } catch (const ParseError&) {
        }
        pos_ = save;
        return binding;
    }

    void skip_term() {
        if (peek().kind == Tk::Quoted) {
            ++pos_;
            return;
        }
        ident();
        if (accept("(")) {
            int depth = 1;
            while (depth > 0 && peek().kind != Tk::End) {
                if (is("(")) ++depth;
                if (is(")")) --depth;
                ++pos_;
            }
        }
    }

    void statverif_top(ParsedFile& pf) {
        while (peek().kind != Tk::End) {
            const Tok& t = peek();
            if (t.kind != Tk::Ident) fail("unexpected '" + describe(t) + "' at top level");
            if (t.text == "fun") {
                ++pos_;
                std::string n = ident();
                expect("/");
                std::size_t a = number();
                expect(".");
                try {
                    m_.add_constructor(Symbol(n), a);
                } catch (const UsageError& e) {
                    throw ParseError(e.what(), t.pos);
                }
            } else if (t.text == "reduc") {
                ++pos_;
                do {
                    SrcPos at = peek().pos;
                    add_rule(rule(true), at);
                } while (accept(";"));
                expect(".");
            } else if (t.text == "free" || t.text == "query" || t.text == "not" || t.text == "type" ||
                       t.text == "param") {
                std::size_t start = pos_;
                while (peek().kind != Tk::End && !is(".")) ++pos_;
                std::string text;
                for (std::size_t k = start; k < pos_; ++k) text += toks_[k].text;
                if (t.text == "query") pf.queries.push_back(text);
                expect(".");
            } else if (t.text == "let") {
                ++pos_;
                macro_def();
                expect(".");
            } else if (t.text == "process") {
                ++pos_;
                if (pf.process) fail("more than one main process");
                pf.process = process();
                accept(".");
            } else {
                fail("unexpected '" + t.text + "' at top level");
            }
        }
    }

    std::vector<Tok> toks_;
    std::size_t pos_ = 0;
    Dialect d_;
    SymbolicModel& m_;
    Ctx ctx_ = Ctx::Normal;
    std::vector<Binding> scope_;
    std::vector<Symbol> msr_bound_;
    std::map<std::string, std::pair<std::size_t, std::size_t>> macros_;
    int macro_depth_ = 0;
    bool dry_ = false;
};

}  // namespace

bool rule_supported(const DestructorRule& r) {
    if (rule_is_subterm(r)) return true;
    if (!r.rhs.is_app()) return false;
    for (Term a : r.rhs.args()) {
        bool ok = a.is_var() || std::any_of(r.lhs.begin(), r.lhs.end(), [&](Term l) { return occurs_in(a, l); });
        if (!ok) return false;
    }
    return true;
}

ParsedFile parse_sapic(std::string_view text) {
    SymbolicModel m;
    Parser p(lex(text), Dialect::Sapic, m);
    ParsedFile pf = p.file();
    pf.model = m;
    return pf;
}

ParsedFile parse_statverif(std::string_view text) {
    SymbolicModel m;
    Parser p(lex(text), Dialect::StatVerif, m);
    ParsedFile pf = p.file();
    pf.model = m;
    return pf;
}

ParsedFile parse_source(std::string_view text, Dialect d) {
    return d == Dialect::Sapic ? parse_sapic(text) : parse_statverif(text);
}

PPtr parse_process(std::string_view text, Dialect d, SymbolicModel& model) {
    Parser p(lex(text), d, model);
    return p.bare_process();
}

Term parse_term(std::string_view text, SymbolicModel& model) {
    Parser p(lex(text), Dialect::Sapic, model);
    return p.bare_term();
}

std::optional<Dialect> dialect_for_path(std::string_view path) {
    auto ends = [&](std::string_view s) {
        return path.size() >= s.size() && path.substr(path.size() - s.size()) == s;
    };
    if (ends(".sapic") || ends(".spthy")) return Dialect::Sapic;
    if (ends(".sv") || ends(".pv")) return Dialect::StatVerif;
    return std::nullopt;
}

}  // namespace spi
