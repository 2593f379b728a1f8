#pragma once

#include <vector>

#include "hoc/ast.hpp"

namespace hoc {

/// Name resolution only: undeclared variables, unknown message types and
/// functions, constructor arity. The parser rejects sources failing these.
std::vector<Diagnostic> resolve_names(const Protocol& p);
std::vector<Diagnostic> resolve_names(const CompHOProtocol& p);

/// All well-formedness checks; empty iff the protocol is valid.
std::vector<Diagnostic> validate(const Protocol& p);
std::vector<Diagnostic> validate(const CompHOProtocol& p);

}  // namespace hoc
