#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "statepi/model.hpp"
#include "statepi/process.hpp"

namespace spi {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, SrcPos pos)
        : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " + msg), pos(pos) {}
    SrcPos pos;
};

struct ParsedFile {
    Dialect dialect = Dialect::Sapic;
    std::string theory;
    SymbolicModel model;
    PPtr process;
    /// Raw text of queries/lemmas, kept for reference only.
    std::vector<std::string> queries;
};

/// SAPIC dialect: `theory T begin functions: ... equations: ... let M = P ... P end`.
ParsedFile parse_sapic(std::string_view text);

/// StatVerif dialect: `fun f/n. reduc l = r; ... . let m = P. process P`.
ParsedFile parse_statverif(std::string_view text);

ParsedFile parse_source(std::string_view text, Dialect d);

/// A bare process against an existing model. Quoted constants are declared
/// in `model` on the fly.
PPtr parse_process(std::string_view text, Dialect d, SymbolicModel& model);

/// A ground term; identifiers become names.
Term parse_term(std::string_view text, SymbolicModel& model);

/// .sapic / .spthy select SAPIC, .sv / .pv select StatVerif.
std::optional<Dialect> dialect_for_path(std::string_view path);

/// Rule shapes the deduction engine supports: rhs a variable, a subterm of
/// the lhs, or a constructor over subterms of the lhs.
bool rule_supported(const DestructorRule& r);

}  // namespace spi
