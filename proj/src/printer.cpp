#include "statepi/printer.hpp"

namespace spi {

namespace {

struct Printer {
    const SymbolicModel& m;
    Dialect d;
    std::string out;

    void term(Term t) {
        if (!t.is_app()) {
            out += t.str();
            return;
        }
        const FuncSymbol* f = m.find(t.symbol());
        if (t.arity() == 0) {
            if (f && f->quoted) {
                out += "'" + t.symbol().str() + "'";
            } else {
                out += t.symbol().str();
                if (d == Dialect::Sapic) out += "()";
            }
            return;
        }
        out += t.symbol().str();
        out += '(';
        args(t.args());
        out += ')';
    }

    void args(std::span<const Term> ts) {
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (i) out += ", ";
            term(ts[i]);
        }
    }

    void label(const EventLabel& e) {
        out += e.sym.str();
        if (!e.args.empty()) {
            out += '(';
            args(e.args);
            out += ')';
        }
    }

    void facts(const std::vector<Fact>& fs) {
        out += '[';
        for (std::size_t i = 0; i < fs.size(); ++i) {
            if (i) out += ", ";
            if (fs[i].persistent) out += '!';
            out += fs[i].sym.str() + "(";
            args(fs[i].args);
            out += ')';
        }
        out += ']';
    }

    // A trailing else-less conditional would capture an `else` printed after it.
    static bool ends_open(const PPtr& p) {
        switch (p->kind) {
            case PKind::Nil:
            case PKind::Par:
            case PKind::Repl:
            case PKind::SvInit: return false;
            case PKind::Let:
            case PKind::Lookup: return !p->has_else || ends_open(p->q);
            default: return ends_open(p->p);
        }
    }

    static bool closed(const PPtr& p) { return p->kind == PKind::Nil || p->kind == PKind::SvInit; }

    void wrapped(const PPtr& p) {
        out += '(';
        proc(p);
        out += ')';
    }

    void cont(const PPtr& p) {
        if (p->kind == PKind::Nil) return;
        out += "; ";
        proc(p);
    }

    void branches(const Process& n) {
        if (n.has_else && ends_open(n.p)) wrapped(n.p);
        else proc(n.p);
        if (n.has_else) {
            out += " else ";
            proc(n.q);
        }
    }

    void proc(const PPtr& p) {
        const Process& n = *p;
        switch (n.kind) {
            case PKind::Nil: out += '0'; break;
            case PKind::Par:
                if (n.p->kind == PKind::Par || closed(n.p)) proc(n.p);
                else wrapped(n.p);
                out += d == Dialect::Sapic ? " || " : " | ";
                if (closed(n.q)) proc(n.q);
                else wrapped(n.q);
                break;
            case PKind::Repl:
                out += '!';
                if (closed(n.p)) proc(n.p);
                else wrapped(n.p);
                break;
            case PKind::New:
                out += "new " + n.bound.str();
                out += "; ";
                proc(n.p);
                break;
            case PKind::Out:
                out += "out(";
                if (n.t1.valid()) {
                    term(n.t1);
                    out += ", ";
                }
                term(n.t2);
                out += ')';
                cont(n.p);
                break;
            case PKind::In:
                out += "in(";
                if (n.t1.valid()) {
                    term(n.t1);
                    out += ", ";
                }
                if (n.t2.valid()) term(n.t2);
                else out += n.bound.str();
                out += ')';
                cont(n.p);
                break;
            case PKind::Let:
                if (n.cond) {
                    out += "if ";
                    term(n.t1.arg(0));
                    out += " = ";
                    term(n.t1.arg(1));
                    out += " then ";
                } else {
                    out += "let " + n.bound.str() + " = ";
                    term(n.t1);
                    out += " in ";
                }
                branches(n);
                break;
            case PKind::Event:
                out += "event ";
                label(n.events.at(0));
                cont(n.p);
                break;
            case PKind::Insert:
                out += "insert ";
                term(n.t1);
                out += ',';
                term(n.t2);
                cont(n.p);
                break;
            case PKind::Delete:
                out += "delete ";
                term(n.t1);
                cont(n.p);
                break;
            case PKind::Lookup:
                out += "lookup ";
                term(n.t1);
                out += " as " + n.bound.str() + " in ";
                branches(n);
                break;
            case PKind::Lock:
            case PKind::Unlock:
                out += n.kind == PKind::Lock ? "lock " : "unlock ";
                term(n.t1);
                cont(n.p);
                break;
            case PKind::Msr:
                facts(n.lhs);
                if (n.events.empty()) {
                    out += " --> ";
                } else {
                    out += " -[";
                    for (std::size_t i = 0; i < n.events.size(); ++i) {
                        if (i) out += ", ";
                        label(n.events[i]);
                    }
                    out += "]-> ";
                }
                facts(n.rhs);
                cont(n.p);
                break;
            case PKind::SvInit:
                out += '[';
                term(n.t1);
                out += " |-> ";
                term(n.t2);
                out += ']';
                break;
            case PKind::SvAssign:
                term(n.t1);
                out += " := ";
                term(n.t2);
                cont(n.p);
                break;
            case PKind::SvRead:
                out += "read ";
                term(n.t1);
                out += " as " + n.bound.str();
                cont(n.p);
                break;
            case PKind::SvLock:
                out += "lock";
                cont(n.p);
                break;
            case PKind::SvUnlock:
                out += "unlock";
                cont(n.p);
                break;
        }
    }
};

std::string rule_text(Printer& pr, const DestructorRule& r) {
    pr.out.clear();
    pr.term(Term::app(r.head, r.lhs));
    pr.out += " = ";
    pr.term(r.rhs);
    return pr.out;
}

}  // namespace

std::string print_term(const SymbolicModel& m, Term t, Dialect d) {
    Printer pr{m, d, {}};
    pr.term(t);
    return pr.out;
}

std::string print_process(const SymbolicModel& m, const PPtr& p, Dialect d) {
    Printer pr{m, d, {}};
    pr.proc(p);
    return pr.out;
}

std::string print_file(const SymbolicModel& m, const PPtr& p, Dialect d, const std::string& theory) {
    Printer pr{m, d, {}};
    std::vector<DestructorRule> rules = m.rules();
    rules.insert(rules.end(), m.filtered_rules().begin(), m.filtered_rules().end());
    std::string s;
    if (d == Dialect::Sapic) {
        s += "theory " + theory + "\nbegin\n\n";
        std::string fs;
        for (const FuncSymbol& f : m.symbols()) {
            if (f.quoted || f.name.str() == "equal") continue;
            if (!fs.empty()) fs += ", ";
            fs += f.name.str() + "/" + std::to_string(f.arity);
        }
        if (!fs.empty()) s += "functions: " + fs + "\n\n";
        std::string eqs;
        for (const DestructorRule& r : rules) {
            if (r.head.str() == "equal") continue;
            if (!eqs.empty()) eqs += ",\n";
            eqs += rule_text(pr, r);
        }
        if (!eqs.empty()) s += "equations:\n" + eqs + "\n\n";
        s += print_process(m, p, d) + "\n\nend\n";
        return s;
    }
    for (const FuncSymbol& f : m.symbols())
        if (f.kind == FuncKind::Constructor && !f.quoted)
            s += "fun " + f.name.str() + "/" + std::to_string(f.arity) + ".\n";
    for (const DestructorRule& r : rules)
        if (r.head.str() != "equal") s += "reduc " + rule_text(pr, r) + ".\n";
    s += "process\n    " + print_process(m, p, d) + "\n";
    return s;
}

}  // namespace spi
