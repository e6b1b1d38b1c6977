#pragma once

#include <string>

#include "statepi/model.hpp"
#include "statepi/process.hpp"

namespace spi {

/// Dialect syntax for a term. Nonces and adversary variables, which only
/// occur in configurations, use Term::str.
std::string print_term(const SymbolicModel& m, Term t, Dialect d);

/// One-line rendering that parses back to the same AST.
std::string print_process(const SymbolicModel& m, const PPtr& p, Dialect d);

/// Complete source file: declarations, rules and the main process.
std::string print_file(const SymbolicModel& m, const PPtr& p, Dialect d, const std::string& theory = "Encoded");

}  // namespace spi
