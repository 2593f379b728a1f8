#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "hoc/ast.hpp"

namespace hoc {

/// One element of a path: a statement, or an If together with the branch
/// taken (0 = then, 1 = else).
struct PathStep {
  const Stmt* stmt = nullptr;
  int branch = -1;
};

/// A maximal acyclic path through one loop body.
struct CfgPath {
  enum class End { Fallthrough, Break, Continue, Exit };

  std::vector<PathStep> steps;
  std::vector<const Stmt*> stmts;  // non-If statements, in order
  std::vector<std::pair<ExprPtr, bool>> branch_conds;
  End end = End::Fallthrough;
};

class PathExplosion : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enumerates every branch-resolved path of `body`. Nested loops are opaque
/// single steps. Throws PathExplosion beyond `bound` paths.
std::vector<CfgPath> cfg_paths(const Stmt& body, std::size_t bound = 4096);

}  // namespace hoc
