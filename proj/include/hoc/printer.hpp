#pragma once

#include <string>

#include "hoc/ast.hpp"

namespace hoc {

std::string print_expr(const Expr& e);
std::string print_expr(const ExprPtr& e);
/// Statement text at the given indentation (two spaces per level).
std::string print_stmt(const Stmt& s, int indent = 0);

/// Canonical .apl text; parse(print(x)) is structurally equal to x.
std::string print(const Protocol& p);
std::string print(const CompHOProtocol& p, int indent = 0);

}  // namespace hoc
