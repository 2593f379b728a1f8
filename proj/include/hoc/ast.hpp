#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoc/value.hpp"

namespace hoc {

struct SourceLoc {
  int line = 0;
  int col = 0;
};

struct Diagnostic {
  enum class Severity { Error, Warning, Note };
  Severity severity = Severity::Error;
  SourceLoc loc;
  std::string message;

  /// "file:line:col: severity: message"
  std::string format(const std::string& file) const;
};

struct EnumDecl {
  std::string name;
  std::vector<std::string> literals;

  int ordinal_of(const std::string& lit) const;  // -1 when absent
};

struct TypeRef {
  enum class Kind { Int, Bool, Pid, Enum, Msg, Mbox, Map };
  Kind kind = Kind::Int;
  /// Enum or message type name; element message type for Mbox; element type
  /// text for Map.
  std::string name;

  bool operator==(const TypeRef&) const = default;
  std::string to_string() const;
};

struct MsgTypeDecl {
  std::string name;
  std::vector<std::pair<std::string, TypeRef>> fields;

  int index_of(const std::string& field) const;  // -1 when absent
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Side-effect-free expression. Operators and builtin names live in `text`.
struct Expr {
  enum class Kind { Int, Bool, None, EmptySet, Name, Call, Field, Index, Unary, Binary };
  Kind kind = Kind::Int;
  std::int64_t ival = 0;
  std::string text;
  std::vector<ExprPtr> args;
  SourceLoc loc;

  static ExprPtr integer(std::int64_t v);
  static ExprPtr boolean(bool v);
  static ExprPtr none();
  static ExprPtr empty_set();
  static ExprPtr name(std::string n);
  static ExprPtr call(std::string f, std::vector<ExprPtr> args);
  static ExprPtr field(ExprPtr base, std::string f);
  static ExprPtr index(ExprPtr base, ExprPtr idx);
  static ExprPtr unary(std::string op, ExprPtr e);
  static ExprPtr binary(std::string op, ExprPtr l, ExprPtr r);
  static ExprPtr conj(ExprPtr l, ExprPtr r);  // folds `true`
  static ExprPtr negate(ExprPtr e);
};

/// Structural equality, ignoring source positions.
bool same_expr(const Expr& a, const Expr& b);
bool same_expr(const ExprPtr& a, const ExprPtr& b);

/// Names read by an expression (variables and bare identifiers).
void collect_names(const Expr& e, std::set<std::string>& out);
bool mentions_call(const Expr& e, const std::string& fn);
/// Copy of `e` with every Name in `subst` replaced.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& subst);

struct LValue {
  std::string var;
  ExprPtr index;  // null for plain variables

  bool operator==(const LValue& o) const;
};

struct Stmt {
  enum class Kind {
    Seq,
    Assign,        // targets = exprs (parallel)
    ResetTimeout,  // exprs: optional duration
    Send,          // exprs[0] payload, exprs[1] destination or null for '*'
    Recv,          // targets: message var, sender var
    If,            // exprs[0] cond, body[0] then, body[1] else
    While,         // body[0]; label = optional scope label
    Break,
    Continue,
    In,            // targets[0] = in()
    Out,           // exprs
    Havoc,         // targets (rewriter-internal)
    Call,          // label = callee; names = argument names, exprs = values
    Exit,          // return from a sub-protocol (rewriter-internal)
  };
  Kind kind = Kind::Seq;
  std::vector<LValue> targets;
  std::vector<ExprPtr> exprs;
  std::vector<std::string> names;
  std::string label;
  std::vector<Stmt> body;
  int id = -1;
  SourceLoc loc;

  static Stmt seq(std::vector<Stmt> stmts = {});
  static Stmt assign(std::vector<LValue> lhs, std::vector<ExprPtr> rhs);
  static Stmt assign1(std::string var, ExprPtr rhs);
  static Stmt send(ExprPtr payload, ExprPtr dest);
  static Stmt if_(ExprPtr cond, Stmt then_s, Stmt else_s = seq());
  static Stmt while_(Stmt body, std::string label = {});
  static Stmt havoc(std::vector<std::string> vars);
  static Stmt simple(Kind k);

  bool is_empty_seq() const { return kind == Kind::Seq && body.empty(); }
};

/// Structural equality, ignoring ids and positions; Seq nesting is flattened.
bool same_stmt(const Stmt& a, const Stmt& b);

/// Calls f on every statement in pre-order.
template <typename F>
void visit_stmts(const Stmt& s, F&& f) {
  f(s);
  for (const auto& c : s.body) visit_stmts(c, f);
}
template <typename F>
void visit_stmts_mut(Stmt& s, F&& f) {
  f(s);
  for (auto& c : s.body) visit_stmts_mut(c, f);
}

/// Flattens nested Seq nodes and removes empty ones.
Stmt flatten(Stmt s);

struct VarDecl {
  std::string name;
  TypeRef type;
  ExprPtr init;  // null: default initial value
  bool aux = false;
};

/// Declarations shared by both protocol forms.
struct Decls {
  std::vector<std::shared_ptr<const EnumDecl>> enums;
  std::vector<std::shared_ptr<const MsgTypeDecl>> msgs;
  std::vector<VarDecl> vars;

  const VarDecl* var(const std::string& name) const;
  std::shared_ptr<const MsgTypeDecl> msg(const std::string& name) const;
  std::shared_ptr<const EnumDecl> enum_type(const std::string& name) const;
  /// Enum declaring literal `lit`, or null.
  std::shared_ptr<const EnumDecl> enum_of_literal(const std::string& lit) const;
  int var_index(const std::string& name) const;  // -1 when absent
  bool is_message_typed(const std::string& var) const;
};

/// Asynchronous protocol: one sequential body replicated over all processes.
struct Protocol {
  std::string name;
  Decls decls;
  Stmt body;

  /// Vars bound by recv anywhere in the body.
  std::set<std::string> recv_bound_vars() const;
  /// Message-typed, mailbox-typed or recv-bound vars.
  std::set<std::string> message_class_vars() const;
};

struct Round {
  std::string name;
  std::string payload_type;
  Stmt send;
  std::string mbox_param = "mb";
  Stmt update;
};

/// Round-based protocol: init, then `rounds` executed in a loop.
struct CompHOProtocol {
  std::string name;
  Decls decls;
  Stmt init;
  ExprPtr phase_base;  // phase() = r div |rounds| + phase_base
  std::vector<Round> rounds;
  std::vector<CompHOProtocol> subs;
  std::vector<std::string> returns;

  const CompHOProtocol* find_sub(const std::string& name) const;
  std::set<std::string> message_class_vars() const;
};

/// Result of parsing one .apl file.
struct Module {
  std::optional<Protocol> async;
  std::optional<CompHOProtocol> compho;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }
  std::string format(const std::string& file) const;

 private:
  std::vector<Diagnostic> diags_;
};

/// Reserved builtin function names of the expression language.
bool is_builtin(const std::string& name);

/// Type default: 0, false, first enum literal, none, or an empty container.
Value default_value(const TypeRef& t, const Decls& d);

}  // namespace hoc
