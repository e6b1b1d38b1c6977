#include "statepi/term.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <atomic>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace spi {

// ---------------------------------------------------------------------------
// Symbols

namespace {

struct SymbolTable {
    std::mutex mu;
    std::unordered_map<std::string, std::uint32_t> ids;
    std::deque<std::string> names;  // stable references
    SymbolTable() { names.emplace_back(); }
};

SymbolTable& symbols() {
    static SymbolTable t;
    return t;
}

}  // namespace

Symbol::Symbol(std::string_view text) {
    if (text.empty()) return;
    auto& t = symbols();
    std::lock_guard lk(t.mu);
    auto [it, inserted] = t.ids.try_emplace(std::string(text), 0);
    if (inserted) {
        it->second = static_cast<std::uint32_t>(t.names.size());
        t.names.emplace_back(text);
    }
    id_ = it->second;
}

const std::string& Symbol::str() const {
    auto& t = symbols();
    std::lock_guard lk(t.mu);
    return t.names[id_];
}

// ---------------------------------------------------------------------------
// Term table

struct TermNode {
    TermKind kind{};
    Symbol sym;
    std::vector<Term> args;
    std::uint64_t nonce_id = 0;
    NonceSort nonce_sort = NonceSort::Protocol;
    std::unique_ptr<AdvVarInfo> info;
    std::uint32_t depth = 0;
    std::uint32_t size = 1;
    bool ground = true;
    bool adv = false;
};

class TermTable {
public:
    static constexpr std::size_t kChunkBits = 12;
    static constexpr std::size_t kChunkSize = std::size_t{1} << kChunkBits;
    static constexpr std::size_t kMaxChunks = std::size_t{1} << 16;

    static TermTable& get() {
        static TermTable t;
        return t;
    }

    const TermNode& node(std::uint32_t id) const {
        TermNode* chunk = chunks_[id >> kChunkBits].load(std::memory_order_acquire);
        return chunk[id & (kChunkSize - 1)];
    }

    Term intern(std::vector<std::uint32_t> key, TermNode&& n) {
        std::lock_guard lk(mu_);
        auto it = index_.find(key);
        if (it != index_.end()) return Term(it->second);
        std::uint32_t id = next_++;
        std::size_t c = id >> kChunkBits;
        if (c >= kMaxChunks) throw std::runtime_error("term table exhausted");
        if (!chunks_[c].load(std::memory_order_relaxed)) {
            owned_.push_back(std::make_unique<TermNode[]>(kChunkSize));
            chunks_[c].store(owned_.back().get(), std::memory_order_release);
        }
        chunks_[c].load(std::memory_order_relaxed)[id & (kChunkSize - 1)] = std::move(n);
        index_.emplace(std::move(key), id);
        return Term(id);
    }

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept {
            std::size_t h = 1469598103934665603ull;
            for (auto x : v) h = (h ^ x) * 1099511628211ull;
            return h;
        }
    };

    TermTable() : chunks_(new std::atomic<TermNode*>[kMaxChunks]) {
        for (std::size_t i = 0; i < kMaxChunks; ++i) chunks_[i].store(nullptr);
        // id 0 is the invalid term
        owned_.push_back(std::make_unique<TermNode[]>(kChunkSize));
        chunks_[0].store(owned_.back().get());
    }

    std::mutex mu_;
    std::unique_ptr<std::atomic<TermNode*>[]> chunks_;
    std::vector<std::unique_ptr<TermNode[]>> owned_;
    std::unordered_map<std::vector<std::uint32_t>, std::uint32_t, KeyHash> index_;
    std::uint32_t next_ = 1;
};

namespace {
const TermNode& N(std::uint32_t id) { return TermTable::get().node(id); }
}  // namespace

Term Term::var(Symbol name) {
    TermNode n;
    n.kind = TermKind::Variable;
    n.sym = name;
    n.ground = false;
    return TermTable::get().intern({0, name.id()}, std::move(n));
}

Term Term::name(Symbol name) {
    TermNode n;
    n.kind = TermKind::Name;
    n.sym = name;
    n.ground = false;
    return TermTable::get().intern({1, name.id()}, std::move(n));
}

Term Term::nonce(std::uint64_t id, NonceSort sort, Symbol hint) {
    TermNode n;
    n.kind = TermKind::Nonce;
    n.sym = hint;
    n.nonce_id = id;
    n.nonce_sort = sort;
    return TermTable::get().intern(
        {2, static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32),
         static_cast<std::uint32_t>(sort), hint.id()},
        std::move(n));
}

Term Term::app(Symbol f, std::vector<Term> args) {
    std::vector<std::uint32_t> key;
    key.reserve(args.size() + 2);
    key.push_back(3);
    key.push_back(f.id());
    TermNode n;
    n.kind = TermKind::App;
    n.sym = f;
    std::uint32_t d = 0;
    for (Term a : args) {
        key.push_back(a.id());
        const TermNode& an = N(a.id());
        d = std::max(d, an.depth);
        n.size += an.size;
        n.ground = n.ground && an.ground;
        n.adv = n.adv || an.adv;
    }
    n.depth = args.empty() ? 0 : d + 1;
    n.args = std::move(args);
    return TermTable::get().intern(std::move(key), std::move(n));
}

Term Term::adv_var(AdvVarInfo info) {
    std::sort(info.no_heads.begin(), info.no_heads.end());
    info.no_heads.erase(std::unique(info.no_heads.begin(), info.no_heads.end()), info.no_heads.end());
    std::sort(info.no_nonces.begin(), info.no_nonces.end());
    info.no_nonces.erase(std::unique(info.no_nonces.begin(), info.no_nonces.end()), info.no_nonces.end());
    std::vector<std::uint32_t> key{4, info.id, info.snapshot, info.budget,
                                   static_cast<std::uint32_t>(info.sort), info.alias_ok ? 1u : 0u,
                                   static_cast<std::uint32_t>(info.no_heads.size())};
    key.insert(key.end(), info.no_heads.begin(), info.no_heads.end());
    key.insert(key.end(), info.no_nonces.begin(), info.no_nonces.end());
    TermNode n;
    n.kind = TermKind::AdvVar;
    n.adv = true;
    n.info = std::make_unique<AdvVarInfo>(std::move(info));
    return TermTable::get().intern(std::move(key), std::move(n));
}

TermKind Term::kind() const { return N(id_).kind; }
Symbol Term::symbol() const { return N(id_).sym; }
std::span<const Term> Term::args() const { return N(id_).args; }
std::uint64_t Term::nonce_id() const { return N(id_).nonce_id; }
NonceSort Term::nonce_sort() const { return N(id_).nonce_sort; }
const AdvVarInfo& Term::adv_info() const { return *N(id_).info; }
std::uint32_t Term::depth() const { return N(id_).depth; }
std::uint32_t Term::size() const { return N(id_).size; }
bool Term::ground() const { return N(id_).ground; }
bool Term::has_adv_vars() const { return N(id_).adv; }

namespace {

void print(Term t, std::string& out) {
    switch (t.kind()) {
        case TermKind::Variable:
        case TermKind::Name:
            out += t.symbol().str();
            return;
        case TermKind::Nonce:
            if (t.nonce_sort() == NonceSort::Adversary) {
                out += '$';
                out += std::to_string(t.nonce_id());
            } else {
                out += t.symbol().empty() ? std::string("n") : t.symbol().str();
                out += '~';
                out += std::to_string(t.nonce_id());
            }
            return;
        case TermKind::AdvVar:
            out += "?X";
            out += std::to_string(t.adv_info().id);
            return;
        case TermKind::App: {
            out += t.symbol().str();
            out += '(';
            bool first = true;
            for (Term a : t.args()) {
                if (!first) out += ", ";
                first = false;
                print(a, out);
            }
            out += ')';
            return;
        }
    }
}

}  // namespace

std::string Term::str() const {
    if (!valid()) return "<invalid>";
    std::string s;
    print(*this, s);
    return s;
}

std::uint32_t head_of(Term t) {
    if (t.is_app()) return t.symbol().id();
    if (t.is_nonce()) return kNonceHead;
    return 0;
}

bool occurs_in(Term t, Term u) {
    if (t == u) return true;
    if (!u.is_app() || u.depth() <= t.depth()) return false;
    for (Term a : u.args())
        if (occurs_in(t, a)) return true;
    return false;
}

void collect_subterms(Term t, std::vector<Term>& out) {
    if (std::find(out.begin(), out.end(), t) != out.end()) return;
    for (Term a : t.args()) collect_subterms(a, out);
    out.push_back(t);
}

Term substitute(Term t, const Substitution& sigma) {
    if (sigma.empty()) return t;
    auto it = sigma.find(t);
    if (it != sigma.end()) return it->second;
    if (!t.is_app() || t.arity() == 0) return t;
    std::vector<Term> args;
    args.reserve(t.arity());
    bool changed = false;
    for (Term a : t.args()) {
        Term b = substitute(a, sigma);
        changed = changed || b != a;
        args.push_back(b);
    }
    return changed ? Term::app(t.symbol(), std::move(args)) : t;
}

namespace {
void collect_kind(Term t, TermKind k, std::vector<Symbol>& out) {
    if (t.kind() == k) {
        out.push_back(t.symbol());
        return;
    }
    if (t.ground()) return;
    for (Term a : t.args()) collect_kind(a, k, out);
}
std::vector<Symbol> sorted_unique(std::vector<Symbol> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}
}  // namespace

std::vector<Symbol> term_vars(Term t) {
    std::vector<Symbol> out;
    collect_kind(t, TermKind::Variable, out);
    return sorted_unique(std::move(out));
}

std::vector<Symbol> term_names(Term t) {
    std::vector<Symbol> out;
    collect_kind(t, TermKind::Name, out);
    return sorted_unique(std::move(out));
}

Term NonceSource::fresh(NonceSort sort, Symbol hint) { return Term::nonce(next_++, sort, hint); }

Term fresh_nonce(NonceSource& src, NonceSort sort) { return src.fresh(sort); }

}  // namespace spi
