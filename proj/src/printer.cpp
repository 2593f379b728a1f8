#include "hoc/printer.hpp"

#include <sstream>

namespace hoc {

namespace {

int prec(const Expr& e) {
  if (e.kind != Expr::Kind::Binary) return 10;
  const std::string& op = e.text;
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "==" || op == "!=") return 3;
  if (op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
  if (op == "+" || op == "-") return 5;
  return 6;
}

std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent) * 2, ' '); }

std::string lvalue(const LValue& lv) {
  return lv.index ? lv.var + "[" + print_expr(lv.index) + "]" : lv.var;
}

std::string join_exprs(const std::vector<ExprPtr>& es) {
  std::string s;
  for (std::size_t i = 0; i < es.size(); ++i) {
    if (i) s += ", ";
    s += print_expr(es[i]);
  }
  return s;
}

void block(std::ostringstream& os, const Stmt& s, int indent) {
  os << "{\n" << print_stmt(s, indent + 1) << pad(indent) << "}";
}

void decls(std::ostringstream& os, const Decls& d, int indent, const Decls* parent) {
  for (const auto& e : d.enums) {
    if (parent && parent->enum_type(e->name) == e) continue;
    os << pad(indent) << "enum " << e->name << " { ";
    for (std::size_t i = 0; i < e->literals.size(); ++i)
      os << (i ? ", " : "") << e->literals[i];
    os << " }\n";
  }
  for (const auto& m : d.msgs) {
    if (parent && parent->msg(m->name) == m) continue;
    os << pad(indent) << "msg " << m->name << " { ";
    for (std::size_t i = 0; i < m->fields.size(); ++i)
      os << (i ? ", " : "") << m->fields[i].first << ": " << m->fields[i].second.to_string();
    os << " }\n";
  }
  for (const auto& v : d.vars) {
    os << pad(indent) << (v.aux ? "aux var " : "var ") << v.name << ": " << v.type.to_string();
    if (v.init) os << " = " << print_expr(v.init);
    os << ";\n";
  }
}

std::string compho(const CompHOProtocol& p, int indent, const Decls* parent) {
  std::ostringstream os;
  os << pad(indent) << "compho " << p.name << " {\n";
  decls(os, p.decls, indent + 1, parent);
  if (p.phase_base) os << pad(indent + 1) << "phase_base = " << print_expr(p.phase_base) << ";\n";
  if (!p.returns.empty()) {
    os << pad(indent + 1) << "returns (";
    for (std::size_t i = 0; i < p.returns.size(); ++i) os << (i ? ", " : "") << p.returns[i];
    os << ");\n";
  }
  os << pad(indent + 1) << "init ";
  block(os, p.init, indent + 1);
  os << "\n" << pad(indent + 1) << "phase {\n";
  for (const auto& r : p.rounds) {
    os << pad(indent + 2) << "round " << r.name << ": " << r.payload_type << " {\n";
    os << pad(indent + 3) << "send ";
    block(os, r.send, indent + 3);
    os << "\n" << pad(indent + 3) << "update(" << r.mbox_param << ") ";
    block(os, r.update, indent + 3);
    os << "\n" << pad(indent + 2) << "}\n";
  }
  os << pad(indent + 1) << "}\n";
  for (const auto& s : p.subs) os << compho(s, indent + 1, &p.decls);
  os << pad(indent) << "}\n";
  return os.str();
}

}  // namespace

std::string print_expr(const ExprPtr& e) { return e ? print_expr(*e) : std::string("*"); }

std::string print_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Int:
      return e.ival < 0 ? "(-" + std::to_string(-e.ival) + ")" : std::to_string(e.ival);
    case Expr::Kind::Bool:
      return e.ival ? "true" : "false";
    case Expr::Kind::None:
      return "none";
    case Expr::Kind::EmptySet:
      return "{}";
    case Expr::Kind::Name:
      return e.text;
    case Expr::Kind::Call:
      return e.text + "(" + join_exprs(e.args) + ")";
    case Expr::Kind::Field:
    case Expr::Kind::Index: {
      const Expr& b = *e.args[0];
      std::string base = (b.kind == Expr::Kind::Binary || b.kind == Expr::Kind::Unary)
                             ? "(" + print_expr(b) + ")"
                             : print_expr(b);
      if (e.kind == Expr::Kind::Field) return base + "." + e.text;
      return base + "[" + print_expr(e.args[1]) + "]";
    }
    case Expr::Kind::Unary: {
      const Expr& x = *e.args[0];
      std::string inner = x.kind == Expr::Kind::Binary ? "(" + print_expr(x) + ")" : print_expr(x);
      return e.text + inner;
    }
    case Expr::Kind::Binary: {
      int p = prec(e);
      const Expr& l = *e.args[0];
      const Expr& r = *e.args[1];
      std::string ls = prec(l) < p ? "(" + print_expr(l) + ")" : print_expr(l);
      std::string rs = prec(r) <= p ? "(" + print_expr(r) + ")" : print_expr(r);
      return ls + " " + e.text + " " + rs;
    }
  }
  return "?";
}

std::string print_stmt(const Stmt& s, int indent) {
  std::ostringstream os;
  switch (s.kind) {
    case Stmt::Kind::Seq:
      for (const auto& c : s.body) os << print_stmt(c, indent);
      return os.str();
    case Stmt::Kind::Assign: {
      os << pad(indent);
      for (std::size_t i = 0; i < s.targets.size(); ++i)
        os << (i ? ", " : "") << lvalue(s.targets[i]);
      os << " = " << join_exprs(s.exprs) << ";\n";
      break;
    }
    case Stmt::Kind::ResetTimeout:
      os << pad(indent) << "reset_timeout(" << join_exprs(s.exprs) << ");\n";
      break;
    case Stmt::Kind::Send:
      os << pad(indent) << "send " << print_expr(s.exprs[0]) << " to "
         << print_expr(s.exprs[1]) << ";\n";
      break;
    case Stmt::Kind::Recv:
    case Stmt::Kind::In: {
      os << pad(indent);
      for (std::size_t i = 0; i < s.targets.size(); ++i)
        os << (i ? ", " : "") << lvalue(s.targets[i]);
      os << (s.kind == Stmt::Kind::Recv ? " = recv();\n" : " = in();\n");
      break;
    }
    case Stmt::Kind::If: {
      os << pad(indent) << "if " << print_expr(s.exprs[0]) << " ";
      block(os, s.body[0], indent);
      const Stmt& e = s.body[1];
      if (!e.is_empty_seq()) {
        os << " else ";
        block(os, e, indent);
      }
      os << "\n";
      break;
    }
    case Stmt::Kind::While:
      os << pad(indent) << "while true ";
      if (!s.label.empty()) os << "as " << s.label << " ";
      block(os, s.body[0], indent);
      os << "\n";
      break;
    case Stmt::Kind::Break:
      os << pad(indent) << "break;\n";
      break;
    case Stmt::Kind::Continue:
      os << pad(indent) << "continue;\n";
      break;
    case Stmt::Kind::Exit:
      os << pad(indent) << "exit;\n";
      break;
    case Stmt::Kind::Out:
      os << pad(indent) << "out(" << join_exprs(s.exprs) << ");\n";
      break;
    case Stmt::Kind::Havoc: {
      os << pad(indent) << "havoc(";
      for (std::size_t i = 0; i < s.targets.size(); ++i)
        os << (i ? ", " : "") << s.targets[i].var;
      os << ");\n";
      break;
    }
    case Stmt::Kind::Call: {
      os << pad(indent) << "call " << s.label << "(";
      for (std::size_t i = 0; i < s.names.size(); ++i)
        os << (i ? ", " : "") << s.names[i] << " = " << print_expr(s.exprs[i]);
      os << ");\n";
      break;
    }
  }
  return os.str();
}

std::string print(const Protocol& p) {
  std::ostringstream os;
  os << "protocol " << p.name << " {\n";
  decls(os, p.decls, 1, nullptr);
  os << print_stmt(p.body, 1) << "}\n";
  return os.str();
}

std::string print(const CompHOProtocol& p, int indent) { return compho(p, indent, nullptr); }

}  // namespace hoc
