#include "hoc/validate.hpp"

#include <algorithm>

namespace hoc {

namespace {

using Sev = Diagnostic::Severity;

struct Resolver {
  const Decls& decls;
  std::set<std::string> extra;  // round mailbox parameter
  std::vector<Diagnostic>& out;

  void error(SourceLoc at, std::string msg) {
    out.push_back(Diagnostic{Sev::Error, at, std::move(msg)});
  }

  bool known_name(const std::string& n) const {
    return n == "n" || decls.var(n) || extra.count(n) || decls.enum_of_literal(n);
  }

  void expr(const ExprPtr& e, SourceLoc at) {
    if (!e) return;
    SourceLoc here = e->loc.line ? e->loc : at;
    switch (e->kind) {
      case Expr::Kind::Name:
        if (!known_name(e->text)) error(here, "undeclared variable '" + e->text + "'");
        break;
      case Expr::Kind::Call:
        if (auto m = decls.msg(e->text)) {
          if (m->fields.size() != e->args.size())
            error(here, "message type '" + e->text + "' takes " +
                            std::to_string(m->fields.size()) + " fields, got " +
                            std::to_string(e->args.size()));
        } else if (!is_builtin(e->text)) {
          error(here, "unknown message type or function '" + e->text + "'");
        }
        break;
      default:
        break;
    }
    for (const auto& a : e->args) expr(a, here);
  }

  void lvalue(const LValue& lv, SourceLoc at) {
    if (!decls.var(lv.var) && !extra.count(lv.var))
      error(at, "undeclared variable '" + lv.var + "'");
    expr(lv.index, at);
  }

  void stmt(const Stmt& s) {
    for (const auto& t : s.targets) lvalue(t, s.loc);
    for (const auto& e : s.exprs) expr(e, s.loc);
    if (s.kind == Stmt::Kind::Send && s.exprs[0]) {
      const Expr& pl = *s.exprs[0];
      if (pl.kind == Expr::Kind::Call && !decls.msg(pl.text) && !is_builtin(pl.text))
        error(s.loc, "unknown message type '" + pl.text + "'");
    }
    for (const auto& c : s.body) stmt(c);
  }

  void decl_types() {
    for (const auto& v : decls.vars) {
      if (v.type.kind == TypeRef::Kind::Mbox && !decls.msg(v.type.name))
        error({}, "unknown message type '" + v.type.name + "' in mailbox '" + v.name + "'");
      expr(v.init, {});
    }
  }
};

void duplicate_decls(const Decls& d, std::vector<Diagnostic>& out) {
  std::set<std::string> seen;
  auto check = [&](const std::string& n) {
    if (!seen.insert(n).second)
      out.push_back(Diagnostic{Sev::Error, {}, "duplicate declaration of '" + n + "'"});
  };
  for (const auto& e : d.enums) check(e->name);
  for (const auto& m : d.msgs) {
    check(m->name);
    std::set<std::string> fields;
    if (m->fields.empty())
      out.push_back(
          Diagnostic{Sev::Error, {}, "message type '" + m->name + "' has no fields"});
    for (const auto& f : m->fields)
      if (!fields.insert(f.first).second)
        out.push_back(Diagnostic{Sev::Error, {},
                                 "duplicate field '" + f.first + "' in '" + m->name + "'"});
  }
  for (const auto& v : d.vars) check(v.name);
}

bool contains_comm(const Stmt& s) {
  bool found = false;
  visit_stmts(s, [&](const Stmt& x) {
    found |= x.kind == Stmt::Kind::Send || x.kind == Stmt::Kind::Recv ||
             x.kind == Stmt::Kind::Havoc || x.kind == Stmt::Kind::Call;
  });
  return found;
}

void structure(const Stmt& s, int loop_depth, const Decls& d, std::vector<Diagnostic>& out) {
  switch (s.kind) {
    case Stmt::Kind::While:
      if (!contains_comm(s.body[0]))
        out.push_back(Diagnostic{Sev::Error, s.loc, "loop contains neither send nor recv"});
      structure(s.body[0], loop_depth + 1, d, out);
      return;
    case Stmt::Kind::Break:
      if (loop_depth == 0) out.push_back(Diagnostic{Sev::Error, s.loc, "break outside loop"});
      break;
    case Stmt::Kind::Continue:
      if (loop_depth == 0)
        out.push_back(Diagnostic{Sev::Error, s.loc, "continue outside loop"});
      break;
    case Stmt::Kind::Recv:
      if (s.targets.size() != 2 || s.targets[0].index || s.targets[1].index) {
        out.push_back(
            Diagnostic{Sev::Error, s.loc, "recv binds exactly one message and one sender"});
      } else {
        const VarDecl* m = d.var(s.targets[0].var);
        const VarDecl* p = d.var(s.targets[1].var);
        if (m && m->type.kind != TypeRef::Kind::Msg)
          out.push_back(Diagnostic{Sev::Error, s.loc,
                                   "recv target '" + m->name + "' is not message-typed"});
        if (p && p->type.kind != TypeRef::Kind::Pid && p->type.kind != TypeRef::Kind::Int)
          out.push_back(Diagnostic{Sev::Error, s.loc,
                                   "recv sender target '" + p->name + "' is not a pid"});
      }
      break;
    case Stmt::Kind::Assign:
      if (s.targets.size() != s.exprs.size())
        out.push_back(Diagnostic{Sev::Error, s.loc, "assignment arity mismatch"});
      break;
    case Stmt::Kind::In:
      if (s.targets.size() != 1)
        out.push_back(Diagnostic{Sev::Error, s.loc, "in() assigns exactly one variable"});
      break;
    default:
      break;
  }
  for (const auto& c : s.body) structure(c, loop_depth, d, out);
}

// Largest number of sub-protocol calls on one control-flow path.
int calls_on_path(const Stmt& s) {
  switch (s.kind) {
    case Stmt::Kind::Call:
      return 1;
    case Stmt::Kind::Seq: {
      int sum = 0;
      for (const auto& c : s.body) sum += calls_on_path(c);
      return sum;
    }
    case Stmt::Kind::If:
      return std::max(calls_on_path(s.body[0]), calls_on_path(s.body[1]));
    default:
      return 0;
  }
}

void send_part(const Stmt& s, const std::string& round, std::vector<Diagnostic>& out) {
  switch (s.kind) {
    case Stmt::Kind::Seq:
    case Stmt::Kind::If:
    case Stmt::Kind::Send:
      break;
    default:
      out.push_back(Diagnostic{Sev::Error, s.loc,
                               "send part of round '" + round + "' mutates state"});
      return;
  }
  for (const auto& c : s.body) send_part(c, round, out);
}

void update_part(const Stmt& s, const std::string& round, std::vector<Diagnostic>& out) {
  switch (s.kind) {
    case Stmt::Kind::Send:
    case Stmt::Kind::Recv:
    case Stmt::Kind::Havoc:
      out.push_back(Diagnostic{Sev::Error, s.loc,
                               "update of round '" + round + "' communicates"});
      return;
    case Stmt::Kind::While:
    case Stmt::Kind::Break:
    case Stmt::Kind::Continue:
      out.push_back(
          Diagnostic{Sev::Error, s.loc, "update of round '" + round + "' contains a loop"});
      return;
    default:
      break;
  }
  for (const auto& c : s.body) update_part(c, round, out);
}

}  // namespace

std::vector<Diagnostic> resolve_names(const Protocol& p) {
  std::vector<Diagnostic> out;
  Resolver r{p.decls, {}, out};
  r.decl_types();
  r.stmt(p.body);
  return out;
}

std::vector<Diagnostic> resolve_names(const CompHOProtocol& p) {
  std::vector<Diagnostic> out;
  Resolver r{p.decls, {}, out};
  r.decl_types();
  r.expr(p.phase_base, {});
  r.stmt(p.init);
  for (const auto& rd : p.rounds) {
    if (!p.decls.msg(rd.payload_type))
      out.push_back(Diagnostic{Sev::Error, rd.send.loc,
                               "unknown message type '" + rd.payload_type + "'"});
    r.extra.clear();
    r.stmt(rd.send);
    r.extra.insert(rd.mbox_param);
    r.stmt(rd.update);
  }
  for (const auto& s : p.subs) {
    auto sub = resolve_names(s);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

std::vector<Diagnostic> validate(const Protocol& p) {
  auto out = resolve_names(p);
  duplicate_decls(p.decls, out);
  structure(p.body, 0, p.decls, out);
  return out;
}

std::vector<Diagnostic> validate(const CompHOProtocol& p) {
  auto out = resolve_names(p);
  duplicate_decls(p.decls, out);
  if (p.rounds.empty())
    out.push_back(Diagnostic{Sev::Error, {}, "protocol '" + p.name + "' has an empty phase"});
  for (const auto& rd : p.rounds) {
    send_part(rd.send, rd.name, out);
    update_part(rd.update, rd.name, out);
    if (calls_on_path(rd.update) > 1)
      out.push_back(Diagnostic{Sev::Error, rd.update.loc,
                               "update of round '" + rd.name + "' calls twice on one path"});
    visit_stmts(rd.update, [&](const Stmt& s) {
      if (s.kind != Stmt::Kind::Call) return;
      auto it = std::find_if(p.subs.begin(), p.subs.end(),
                             [&](const CompHOProtocol& c) { return c.name == s.label; });
      if (it == p.subs.end()) {
        out.push_back(
            Diagnostic{Sev::Error, s.loc, "call to unknown sub-protocol '" + s.label + "'"});
        return;
      }
      for (const auto& a : s.names)
        if (!it->decls.var(a))
          out.push_back(Diagnostic{Sev::Error, s.loc,
                                   "sub-protocol '" + s.label + "' has no variable '" + a + "'"});
    });
  }
  structure(p.init, 0, p.decls, out);
  for (const auto& s : p.subs) {
    auto sub = validate(s);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

}  // namespace hoc
