#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hoc/ast.hpp"
#include "hoc/value.hpp"

namespace hoc {

/// Leader-candidate oracle: candidate sets per phase, cycled.
/// `coord(k)` and `is_coord(k, p)` read entry (k - 1) mod size.
struct CoordSchedule {
  std::vector<std::set<int>> phases{{0}};

  const std::set<int>& candidates(std::int64_t phase) const;
  bool is_coord(std::int64_t phase, int p) const;
  int coord(std::int64_t phase) const;  // smallest candidate, -1 if none

  /// "0;1,2;2" -> {{0},{1,2},{2}}. Throws std::invalid_argument.
  static CoordSchedule parse(const std::string& text);
};

/// Evaluation context for side-effect-free expressions.
struct Env {
  const Decls* decls = nullptr;
  const std::vector<Value>* vars = nullptr;  // parallel to decls->vars
  const std::map<std::string, Value>* extra = nullptr;
  int self = 0;
  int n = 1;
  const CoordSchedule* coord = nullptr;
  std::optional<std::int64_t> phase;  // CompHO phase()
  std::optional<std::int64_t> round;  // CompHO round index within the phase
  std::optional<bool> timeout;        // value returned by timeout()
};

/// Throws EvalError when evaluation gets stuck.
Value eval(const Expr& e, const Env& env);
Value eval(const ExprPtr& e, const Env& env);
bool eval_bool(const ExprPtr& e, const Env& env);

/// Initial valuation of `decls`: declared initializers, else type defaults.
std::vector<Value> initial_vars(const Decls& decls, const Env& env);

/// `{}` literals adapt to the declared container kind.
Value coerce(const Value& v, const TypeRef& t);

/// Message value for payload type `t` built from positional fields.
Value make_message(const Decls& d, const std::string& type, std::vector<Value> fields);

}  // namespace hoc
