#pragma once

#include <string>
#include <vector>

#include "statepi/process.hpp"

namespace spi {

struct Diagnostic {
    /// Stable rule tag, e.g. "in-pattern" or "sv-lock-par".
    std::string tag;
    std::string message;
    SrcPos pos;

    std::string str() const;
};

/// Static restrictions of both dialects. Tags:
///   in-pattern       input does not bind a plain variable
///   msr-fv           variable of the right side or label not bound by the left side
///   msr-nested       pattern variable of the left side below a function symbol
///   fact-linearity   fact symbol used both as linear and persistent
///   sv-init-dup      cell initialized more than once
///   sv-init-scope    initialization below something other than new, | or !
///   sv-lock-par      parallel or replication between lock and unlock
///   dialect          construct of the other dialect
///   free-var         process is not closed
std::vector<Diagnostic> check_restrictions(const PPtr& p, Dialect d);

}  // namespace spi
