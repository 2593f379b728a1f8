#include "hoc/ast.hpp"

#include <algorithm>

namespace hoc {

std::string Diagnostic::format(const std::string& file) const {
  const char* sev = severity == Severity::Error     ? "error"
                    : severity == Severity::Warning ? "warning"
                                                    : "note";
  return file + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + sev +
         ": " + message;
}

int EnumDecl::ordinal_of(const std::string& lit) const {
  auto it = std::find(literals.begin(), literals.end(), lit);
  return it == literals.end() ? -1 : static_cast<int>(it - literals.begin());
}

std::string TypeRef::to_string() const {
  switch (kind) {
    case Kind::Int:
      return "int";
    case Kind::Bool:
      return "bool";
    case Kind::Pid:
      return "pid";
    case Kind::Enum:
    case Kind::Msg:
      return name;
    case Kind::Mbox:
      return "mbox<" + name + ">";
    case Kind::Map:
      return "map<" + name + ">";
  }
  return "?";
}

int MsgTypeDecl::index_of(const std::string& field) const {
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i].first == field) return static_cast<int>(i);
  return -1;
}

namespace {
ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }
}  // namespace

ExprPtr Expr::integer(std::int64_t v) {
  Expr e;
  e.kind = Kind::Int;
  e.ival = v;
  return make(std::move(e));
}

ExprPtr Expr::boolean(bool v) {
  Expr e;
  e.kind = Kind::Bool;
  e.ival = v ? 1 : 0;
  return make(std::move(e));
}

ExprPtr Expr::none() {
  Expr e;
  e.kind = Kind::None;
  return make(std::move(e));
}

ExprPtr Expr::empty_set() {
  Expr e;
  e.kind = Kind::EmptySet;
  return make(std::move(e));
}

ExprPtr Expr::name(std::string n) {
  Expr e;
  e.kind = Kind::Name;
  e.text = std::move(n);
  return make(std::move(e));
}

ExprPtr Expr::call(std::string f, std::vector<ExprPtr> args) {
  Expr e;
  e.kind = Kind::Call;
  e.text = std::move(f);
  e.args = std::move(args);
  return make(std::move(e));
}

ExprPtr Expr::field(ExprPtr base, std::string f) {
  Expr e;
  e.kind = Kind::Field;
  e.text = std::move(f);
  e.args = {std::move(base)};
  return make(std::move(e));
}

ExprPtr Expr::index(ExprPtr base, ExprPtr idx) {
  Expr e;
  e.kind = Kind::Index;
  e.args = {std::move(base), std::move(idx)};
  return make(std::move(e));
}

ExprPtr Expr::unary(std::string op, ExprPtr x) {
  Expr e;
  e.kind = Kind::Unary;
  e.text = std::move(op);
  e.args = {std::move(x)};
  return make(std::move(e));
}

ExprPtr Expr::binary(std::string op, ExprPtr l, ExprPtr r) {
  Expr e;
  e.kind = Kind::Binary;
  e.text = std::move(op);
  e.args = {std::move(l), std::move(r)};
  return make(std::move(e));
}

ExprPtr Expr::conj(ExprPtr l, ExprPtr r) {
  if (!l || (l->kind == Kind::Bool && l->ival)) return r;
  if (!r || (r->kind == Kind::Bool && r->ival)) return l;
  return binary("&&", std::move(l), std::move(r));
}

ExprPtr Expr::negate(ExprPtr x) {
  if (x->kind == Kind::Bool) return boolean(!x->ival);
  if (x->kind == Kind::Unary && x->text == "!") return x->args[0];
  return unary("!", std::move(x));
}

bool same_expr(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.ival != b.ival || a.text != b.text ||
      a.args.size() != b.args.size())
    return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!same_expr(a.args[i], b.args[i])) return false;
  return true;
}

bool same_expr(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return same_expr(*a, *b);
}

void collect_names(const Expr& e, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::Name) out.insert(e.text);
  for (const auto& a : e.args) collect_names(*a, out);
}

bool mentions_call(const Expr& e, const std::string& fn) {
  if (e.kind == Expr::Kind::Call && e.text == fn) return true;
  return std::any_of(e.args.begin(), e.args.end(),
                     [&](const ExprPtr& a) { return mentions_call(*a, fn); });
}

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& subst) {
  if (!e) return e;
  if (e->kind == Expr::Kind::Name) {
    auto it = subst.find(e->text);
    return it == subst.end() ? e : it->second;
  }
  if (e->args.empty()) return e;
  Expr copy = *e;
  bool changed = false;
  for (auto& a : copy.args) {
    auto na = substitute(a, subst);
    changed |= na != a;
    a = na;
  }
  return changed ? make(std::move(copy)) : e;
}

bool LValue::operator==(const LValue& o) const {
  return var == o.var && same_expr(index, o.index);
}

Stmt Stmt::seq(std::vector<Stmt> stmts) {
  Stmt s;
  s.kind = Kind::Seq;
  s.body = std::move(stmts);
  return s;
}

Stmt Stmt::assign(std::vector<LValue> lhs, std::vector<ExprPtr> rhs) {
  Stmt s;
  s.kind = Kind::Assign;
  s.targets = std::move(lhs);
  s.exprs = std::move(rhs);
  return s;
}

Stmt Stmt::assign1(std::string var, ExprPtr rhs) {
  return assign({LValue{std::move(var), nullptr}}, {std::move(rhs)});
}

Stmt Stmt::send(ExprPtr payload, ExprPtr dest) {
  Stmt s;
  s.kind = Kind::Send;
  s.exprs = {std::move(payload), std::move(dest)};
  return s;
}

Stmt Stmt::if_(ExprPtr cond, Stmt then_s, Stmt else_s) {
  Stmt s;
  s.kind = Kind::If;
  s.exprs = {std::move(cond)};
  s.body = {std::move(then_s), std::move(else_s)};
  return s;
}

Stmt Stmt::while_(Stmt body, std::string label) {
  Stmt s;
  s.kind = Kind::While;
  s.body = {std::move(body)};
  s.label = std::move(label);
  return s;
}

Stmt Stmt::havoc(std::vector<std::string> vars) {
  Stmt s;
  s.kind = Kind::Havoc;
  for (auto& v : vars) s.targets.push_back(LValue{std::move(v), nullptr});
  return s;
}

Stmt Stmt::simple(Kind k) {
  Stmt s;
  s.kind = k;
  return s;
}

namespace {
void flatten_into(const Stmt& s, std::vector<const Stmt*>& out) {
  if (s.kind == Stmt::Kind::Seq) {
    for (const auto& c : s.body) flatten_into(c, out);
  } else {
    out.push_back(&s);
  }
}
}  // namespace

bool same_stmt(const Stmt& a, const Stmt& b) {
  std::vector<const Stmt*> fa, fb;
  flatten_into(a, fa);
  flatten_into(b, fb);
  if (fa.size() != fb.size()) return false;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    const Stmt& x = *fa[i];
    const Stmt& y = *fb[i];
    if (x.kind != y.kind || x.label != y.label || x.names != y.names || x.targets != y.targets ||
        x.exprs.size() != y.exprs.size() || x.body.size() != y.body.size())
      return false;
    for (std::size_t j = 0; j < x.exprs.size(); ++j)
      if (!same_expr(x.exprs[j], y.exprs[j])) return false;
    for (std::size_t j = 0; j < x.body.size(); ++j)
      if (!same_stmt(x.body[j], y.body[j])) return false;
  }
  return true;
}

Stmt flatten(Stmt s) {
  for (auto& c : s.body) c = flatten(std::move(c));
  if (s.kind != Stmt::Kind::Seq) return s;
  std::vector<Stmt> out;
  for (auto& c : s.body) {
    if (c.kind == Stmt::Kind::Seq) {
      for (auto& g : c.body) out.push_back(std::move(g));
    } else {
      out.push_back(std::move(c));
    }
  }
  s.body = std::move(out);
  return s;
}

const VarDecl* Decls::var(const std::string& name) const {
  for (const auto& v : vars)
    if (v.name == name) return &v;
  return nullptr;
}

std::shared_ptr<const MsgTypeDecl> Decls::msg(const std::string& name) const {
  for (const auto& m : msgs)
    if (m->name == name) return m;
  return nullptr;
}

std::shared_ptr<const EnumDecl> Decls::enum_type(const std::string& name) const {
  for (const auto& e : enums)
    if (e->name == name) return e;
  return nullptr;
}

std::shared_ptr<const EnumDecl> Decls::enum_of_literal(const std::string& lit) const {
  for (const auto& e : enums)
    if (e->ordinal_of(lit) >= 0) return e;
  return nullptr;
}

int Decls::var_index(const std::string& name) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return static_cast<int>(i);
  return -1;
}

bool Decls::is_message_typed(const std::string& name) const {
  const VarDecl* v = var(name);
  return v && (v->type.kind == TypeRef::Kind::Msg || v->type.kind == TypeRef::Kind::Mbox);
}

std::set<std::string> Protocol::recv_bound_vars() const {
  std::set<std::string> out;
  visit_stmts(body, [&](const Stmt& s) {
    if (s.kind == Stmt::Kind::Recv)
      for (const auto& t : s.targets) out.insert(t.var);
  });
  return out;
}

std::set<std::string> Protocol::message_class_vars() const {
  auto out = recv_bound_vars();
  for (const auto& v : decls.vars)
    if (decls.is_message_typed(v.name)) out.insert(v.name);
  return out;
}

const CompHOProtocol* CompHOProtocol::find_sub(const std::string& n) const {
  for (const auto& s : subs) {
    if (s.name == n) return &s;
    if (const auto* d = s.find_sub(n)) return d;
  }
  return nullptr;
}

std::set<std::string> CompHOProtocol::message_class_vars() const {
  std::set<std::string> out;
  for (const auto& v : decls.vars)
    if (decls.is_message_typed(v.name)) out.insert(v.name);
  return out;
}

namespace {
std::string join_diags(const std::vector<Diagnostic>& d) {
  std::string s;
  for (const auto& x : d) {
    if (!s.empty()) s += "\n";
    s += x.format("<input>");
  }
  return s;
}
}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diags)
    : std::runtime_error(join_diags(diags)), diags_(std::move(diags)) {}

std::string ParseError::format(const std::string& file) const {
  std::string s;
  for (const auto& d : diags_) {
    if (!s.empty()) s += "\n";
    s += d.format(file);
  }
  return s;
}

bool is_builtin(const std::string& name) {
  static const std::set<std::string> names = {
      "me",   "is_coord", "coord",  "phase", "round", "timeout", "size",
      "first", "all_same", "max",   "min",   "count", "argmax",  "has",
      "get",  "add",      "put",    "len"};
  return names.count(name) > 0;
}

Value default_value(const TypeRef& t, const Decls& d) {
  switch (t.kind) {
    case TypeRef::Kind::Int:
    case TypeRef::Kind::Pid:
      return Value::integer(0);
    case TypeRef::Kind::Bool:
      return Value::boolean(false);
    case TypeRef::Kind::Enum: {
      auto e = d.enum_type(t.name);
      return e ? Value::enumeration(e, 0) : Value::none();
    }
    case TypeRef::Kind::Msg:
      return Value::none();
    case TypeRef::Kind::Mbox:
      return Value::mailbox();
    case TypeRef::Kind::Map:
      return Value::map();
  }
  return Value::none();
}

}  // namespace hoc
