#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "statepi/sapic.hpp"

namespace spi {

/// Byte string produced by the mock implementation. Wire format:
///   nonce:        'N' followed by ceil(k/8) bytes (unused high bits zero)
///   application:  'A', u16 name length, name, u16 arity, then per argument
///                 a u32 length and the argument bytes
/// Integers are big-endian. Nothing is hidden: this implementation exists to
/// run the computational control flow, not to be secure.
using Bitstring = std::vector<std::uint8_t>;

std::string hex(const Bitstring& b);

/// k uniformly random bits.
Bitstring impl_nonce(std::mt19937_64& rng, int k);

/// Tagged concatenation. Bottom only when the model's strict grammar rejects
/// the application.
std::optional<Bitstring> impl_constructor(const SymbolicModel& m, Symbol f, const std::vector<Bitstring>& args, int k);

/// Decodes the arguments, applies the rules of `d` and re-encodes. Bottom for
/// undecodable input, for applications of unknown or non-constructor
/// symbols, and wherever the symbolic destructor is bottom.
std::optional<Bitstring> impl_destructor(const SymbolicModel& m, Symbol d, const std::vector<Bitstring>& args, int k);

/// Ground term to bytes; `nonce_bytes` supplies the string of each nonce.
/// Throws UsageError for variables, names and adversary variables.
Bitstring encode(Term t, const std::function<Bitstring(Term)>& nonce_bytes);

/// Inverse of encode. std::nullopt when `b` is not exactly one well-formed
/// encoding.
std::optional<Term> decode(const Bitstring& b, int k, const std::function<Term(const Bitstring&)>& nonce_term);

using CompBindings = std::vector<std::pair<Symbol, Bitstring>>;  // sorted by symbol

struct CompClosure {
    PPtr node;
    CompBindings env;
};

struct CompFact {
    Symbol sym;
    bool persistent = false;
    std::vector<Bitstring> args;

    friend bool operator==(const CompFact&, const CompFact&) = default;
};

struct CompEvent {
    Symbol sym;
    std::vector<Bitstring> args;

    friend bool operator==(const CompEvent&, const CompEvent&) = default;
};

/// Configuration of the computational execution: SapicConfig with byte
/// strings in place of terms.
struct CompConfig {
    std::vector<std::pair<Bitstring, Bitstring>> cells;
    std::vector<CompFact> msstate;
    std::vector<CompClosure> procs;
    std::vector<Bitstring> knowledge;
    std::vector<Bitstring> locks;
    std::map<std::uint32_t, std::uint32_t> unfolds;
};

struct CompTrace {
    std::vector<CompEvent> events;
    std::vector<Bitstring> knowledge;
    /// Every nonce drawn, with the symbolic nonce it corresponds to (the
    /// symbolic engine numbers nonces in the same order).
    std::vector<std::pair<Term, Bitstring>> nonces;
};

/// One adversary or scheduling decision with byte payloads. `channel` is
/// empty for the default channel.
struct CompAction {
    Action::Kind kind = Action::Kind::Schedule;
    std::size_t proc = 0;
    std::size_t other = 0;
    std::optional<Bitstring> channel;
    Bitstring payload;
};

class CompExec {
public:
    /// Draws the free-name nonces and publishes them.
    CompExec(const SymbolicModel& m, const PPtr& p0, int k, std::uint64_t seed, EngineOptions opt = {});

    /// Evaluates an adversary recipe over the current knowledge. Adversary
    /// nonces in the recipe are drawn on first use.
    std::optional<Bitstring> recipe_bytes(Term recipe);

    /// Throws NotEnabled when the action has no successor.
    void step(const CompAction& a);
    /// Compiles the channel and payload recipes, then steps.
    void step(const Action& a);

    const CompConfig& config() const { return cfg_; }
    const CompTrace& trace() const { return trace_; }

private:
    std::optional<Bitstring> eval(Term t, const CompBindings& env) const;
    Bitstring must_eval(Term t, const CompBindings& env, const char* what) const;
    Bitstring draw(Term symbolic);

    const SymbolicModel& m_;
    int k_;
    std::mt19937_64 rng_;
    EngineOptions opt_;
    CompConfig cfg_;
    CompTrace trace_;
    NonceSource mirror_;
    std::map<std::uint64_t, Bitstring> adversary_;
};

/// Runs a symbolic action script (recipes as payloads) computationally.
/// Throws UsageError naming the first action that is not enabled.
CompTrace exec_computational(const SymbolicModel& m, const PPtr& p0, const std::vector<Action>& script, int k,
                             std::uint64_t seed, const EngineOptions& opt = {});

/// Symbolic term to bytes using the nonce correspondence of a computational
/// run; std::nullopt when the term mentions a nonce the run never drew.
std::optional<Bitstring> encode_with(const CompTrace& t, Term symbolic);

}  // namespace spi
