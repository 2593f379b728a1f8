#include "hoc/parser.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "hoc/validate.hpp"

namespace hoc {

namespace {

enum class Tok { Ident, Int, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t ival = 0;
  SourceLoc loc;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  static const char* two[] = {"==", "!=", "<=", ">=", "&&", "||"};
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.loc = {line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.kind = Tok::Int;
      t.text = std::string(src.substr(i, j - i));
      t.ival = std::stoll(t.text);
      advance(j - i);
    } else {
      t.kind = Tok::Sym;
      std::string_view rest = src.substr(i);
      for (const char* op : two) {
        if (rest.substr(0, 2) == op) {
          t.text = op;
          break;
        }
      }
      if (t.text.empty()) {
        static const std::string singles = "{}()[];:,.=<>+-*/%!";
        if (singles.find(c) == std::string::npos)
          throw ParseError({Diagnostic{Diagnostic::Severity::Error, t.loc,
                                       std::string("unexpected character '") + c + "'"}});
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.loc = {line, col};
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Module module() {
    Module m;
    if (peek_is("protocol")) {
      m.async = protocol();
    } else if (peek_is("compho")) {
      m.compho = compho();
    } else {
      fail({"protocol", "compho"});
    }
    if (cur().kind != Tok::End) fail({"end of input"});
    return m;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t k) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool peek_is(const std::string& s) const {
    return cur().kind != Tok::End && cur().kind != Tok::Int && cur().text == s;
  }
  bool accept(const std::string& s) {
    if (!peek_is(s)) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail(const std::vector<std::string>& expected) const {
    std::string msg = "syntax error: expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += i + 1 == expected.size() ? " or " : ", ";
      msg += "'" + expected[i] + "'";
    }
    msg += ", found ";
    msg += cur().kind == Tok::End ? "end of input" : "'" + cur().text + "'";
    throw ParseError({Diagnostic{Diagnostic::Severity::Error, cur().loc, msg}});
  }

  void expect(const std::string& s) {
    if (!accept(s)) fail({s});
  }

  std::string ident() {
    if (cur().kind != Tok::Ident) fail({"identifier"});
    return toks_[pos_++].text;
  }

  // ---- declarations -------------------------------------------------------

  bool decl(Decls& d) {
    if (peek_is("enum")) {
      ++pos_;
      auto e = std::make_shared<EnumDecl>();
      e->name = ident();
      expect("{");
      do e->literals.push_back(ident());
      while (accept(","));
      expect("}");
      d.enums.push_back(std::move(e));
      return true;
    }
    if (peek_is("msg")) {
      ++pos_;
      auto m = std::make_shared<MsgTypeDecl>();
      m->name = ident();
      expect("{");
      if (!peek_is("}")) {
        do {
          std::string f = ident();
          expect(":");
          m->fields.emplace_back(f, type(d));
        } while (accept(","));
      }
      expect("}");
      d.msgs.push_back(std::move(m));
      return true;
    }
    if (peek_is("var") || peek_is("aux")) {
      VarDecl v;
      v.aux = accept("aux");
      expect("var");
      v.name = ident();
      expect(":");
      v.type = type(d);
      if (accept("=")) v.init = expr();
      expect(";");
      d.vars.push_back(std::move(v));
      return true;
    }
    return false;
  }

  TypeRef type(const Decls& d) {
    TypeRef t;
    if (accept("int")) {
      t.kind = TypeRef::Kind::Int;
    } else if (accept("bool")) {
      t.kind = TypeRef::Kind::Bool;
    } else if (accept("pid")) {
      t.kind = TypeRef::Kind::Pid;
    } else if (accept("mbox")) {
      t.kind = TypeRef::Kind::Mbox;
      expect("<");
      t.name = ident();
      expect(">");
    } else if (accept("map")) {
      t.kind = TypeRef::Kind::Map;
      expect("<");
      t.name = type(d).to_string();
      expect(">");
    } else {
      SourceLoc at = cur().loc;
      t.name = ident();
      if (d.enum_type(t.name)) {
        t.kind = TypeRef::Kind::Enum;
      } else if (d.msg(t.name)) {
        t.kind = TypeRef::Kind::Msg;
      } else {
        throw ParseError(
            {Diagnostic{Diagnostic::Severity::Error, at, "unknown type '" + t.name + "'"}});
      }
    }
    return t;
  }

  // ---- protocols ----------------------------------------------------------

  Protocol protocol() {
    expect("protocol");
    Protocol p;
    p.name = ident();
    expect("{");
    while (decl(p.decls)) {
    }
    std::vector<Stmt> body;
    while (!peek_is("}")) body.push_back(stmt());
    expect("}");
    p.body = Stmt::seq(std::move(body));
    return p;
  }

  CompHOProtocol compho(const Decls* parent = nullptr) {
    expect("compho");
    CompHOProtocol c;
    if (parent) {
      // Sub-protocols see the enclosing enum and message declarations.
      c.decls.enums = parent->enums;
      c.decls.msgs = parent->msgs;
    }
    c.name = ident();
    expect("{");
    for (;;) {
      if (decl(c.decls)) continue;
      if (accept("phase_base")) {
        expect("=");
        c.phase_base = expr();
        expect(";");
      } else if (peek_is("init")) {
        ++pos_;
        c.init = block();
      } else if (accept("returns")) {
        expect("(");
        if (!peek_is(")")) {
          do c.returns.push_back(ident());
          while (accept(","));
        }
        expect(")");
        expect(";");
      } else if (accept("phase")) {
        expect("{");
        while (peek_is("round")) c.rounds.push_back(round());
        expect("}");
      } else if (peek_is("compho")) {
        c.subs.push_back(compho(&c.decls));
      } else {
        break;
      }
    }
    expect("}");
    return c;
  }

  Round round() {
    expect("round");
    Round r;
    r.name = ident();
    expect(":");
    r.payload_type = ident();
    expect("{");
    expect("send");
    r.send = block();
    expect("update");
    expect("(");
    r.mbox_param = ident();
    expect(")");
    r.update = block();
    expect("}");
    return r;
  }

  // ---- statements ---------------------------------------------------------

  Stmt block() {
    expect("{");
    std::vector<Stmt> body;
    while (!peek_is("}")) body.push_back(stmt());
    expect("}");
    return Stmt::seq(std::move(body));
  }

  Stmt stmt() {
    SourceLoc at = cur().loc;
    Stmt s = stmt_inner();
    s.loc = at;
    return s;
  }

  Stmt stmt_inner() {
    if (accept("if")) {
      ExprPtr c = expr();
      Stmt then_s = block();
      Stmt else_s = Stmt::seq();
      if (accept("else")) {
        if (peek_is("if")) {
          SourceLoc at = cur().loc;
          Stmt nested = stmt();
          nested.loc = at;
          else_s = Stmt::seq({std::move(nested)});
        } else {
          else_s = block();
        }
      }
      return Stmt::if_(std::move(c), std::move(then_s), std::move(else_s));
    }
    if (accept("while")) {
      expect("true");
      std::string label;
      if (accept("as")) label = ident();
      return Stmt::while_(block(), std::move(label));
    }
    if (accept("break")) return simple_end(Stmt::Kind::Break);
    if (accept("continue")) return simple_end(Stmt::Kind::Continue);
    if (accept("exit")) return simple_end(Stmt::Kind::Exit);
    if (accept("send")) {
      ExprPtr payload = expr();
      expect("to");
      ExprPtr dest;
      if (!accept("*")) dest = expr();
      expect(";");
      return Stmt::send(std::move(payload), std::move(dest));
    }
    if (accept("reset_timeout")) {
      Stmt s = Stmt::simple(Stmt::Kind::ResetTimeout);
      expect("(");
      if (!peek_is(")")) s.exprs.push_back(expr());
      expect(")");
      expect(";");
      return s;
    }
    if (accept("out")) {
      Stmt s = Stmt::simple(Stmt::Kind::Out);
      expect("(");
      if (!peek_is(")")) {
        do s.exprs.push_back(expr());
        while (accept(","));
      }
      expect(")");
      expect(";");
      return s;
    }
    if (accept("havoc")) {
      std::vector<std::string> vars;
      expect("(");
      do vars.push_back(ident());
      while (accept(","));
      expect(")");
      expect(";");
      return Stmt::havoc(std::move(vars));
    }
    if (accept("call")) {
      Stmt s = Stmt::simple(Stmt::Kind::Call);
      s.label = ident();
      expect("(");
      if (!peek_is(")")) {
        do {
          s.names.push_back(ident());
          expect("=");
          s.exprs.push_back(expr());
        } while (accept(","));
      }
      expect(")");
      expect(";");
      return s;
    }
    if (cur().kind == Tok::Ident) return assignment();
    fail({"statement"});
  }

  Stmt simple_end(Stmt::Kind k) {
    expect(";");
    return Stmt::simple(k);
  }

  Stmt assignment() {
    std::vector<LValue> lhs;
    do {
      LValue lv;
      lv.var = ident();
      if (accept("[")) {
        lv.index = expr();
        expect("]");
      }
      lhs.push_back(std::move(lv));
    } while (accept(","));
    expect("=");
    if (peek_is("recv") && ahead(1).text == "(") {
      pos_ += 2;
      expect(")");
      expect(";");
      Stmt s = Stmt::simple(Stmt::Kind::Recv);
      s.targets = std::move(lhs);
      return s;
    }
    if (peek_is("in") && ahead(1).text == "(") {
      pos_ += 2;
      expect(")");
      expect(";");
      Stmt s = Stmt::simple(Stmt::Kind::In);
      s.targets = std::move(lhs);
      return s;
    }
    std::vector<ExprPtr> rhs;
    do rhs.push_back(expr());
    while (accept(","));
    expect(";");
    return Stmt::assign(std::move(lhs), std::move(rhs));
  }

  // ---- expressions --------------------------------------------------------

  static int precedence(const std::string& op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
    if (op == "+" || op == "-") return 5;
    if (op == "*" || op == "/" || op == "%") return 6;
    return 0;
  }

  ExprPtr expr(int min_prec = 1) {
    ExprPtr lhs = unary();
    for (;;) {
      if (cur().kind != Tok::Sym) break;
      int prec = precedence(cur().text);
      if (prec < min_prec || prec == 0) break;
      Expr e;
      e.kind = Expr::Kind::Binary;
      e.text = cur().text;
      e.loc = cur().loc;
      ++pos_;
      ExprPtr rhs = expr(prec + 1);
      e.args = {lhs, rhs};
      lhs = std::make_shared<const Expr>(std::move(e));
    }
    return lhs;
  }

  ExprPtr unary() {
    if (cur().kind == Tok::Sym && (cur().text == "!" || cur().text == "-")) {
      Expr e;
      e.kind = Expr::Kind::Unary;
      e.text = cur().text;
      e.loc = cur().loc;
      ++pos_;
      e.args = {unary()};
      return std::make_shared<const Expr>(std::move(e));
    }
    return postfix(primary());
  }

  ExprPtr postfix(ExprPtr base) {
    for (;;) {
      if (accept(".")) {
        Expr e;
        e.kind = Expr::Kind::Field;
        e.loc = base->loc;
        e.text = ident();
        e.args = {base};
        base = std::make_shared<const Expr>(std::move(e));
      } else if (peek_is("[")) {
        Expr e;
        e.kind = Expr::Kind::Index;
        e.loc = base->loc;
        ++pos_;
        e.args = {base, expr()};
        expect("]");
        base = std::make_shared<const Expr>(std::move(e));
      } else {
        return base;
      }
    }
  }

  ExprPtr primary() {
    Expr e;
    e.loc = cur().loc;
    if (cur().kind == Tok::Int) {
      e.kind = Expr::Kind::Int;
      e.ival = cur().ival;
      ++pos_;
    } else if (accept("(")) {
      ExprPtr inner = expr();
      expect(")");
      return inner;
    } else if (peek_is("{")) {
      ++pos_;
      expect("}");
      e.kind = Expr::Kind::EmptySet;
    } else if (accept("true")) {
      e.kind = Expr::Kind::Bool;
      e.ival = 1;
    } else if (accept("false")) {
      e.kind = Expr::Kind::Bool;
    } else if (accept("none")) {
      e.kind = Expr::Kind::None;
    } else if (cur().kind == Tok::Ident) {
      e.text = ident();
      if (accept("(")) {
        e.kind = Expr::Kind::Call;
        if (!peek_is(")")) {
          do e.args.push_back(expr());
          while (accept(","));
        }
        expect(")");
      } else {
        e.kind = Expr::Kind::Name;
      }
    } else {
      fail({"expression"});
    }
    return std::make_shared<const Expr>(std::move(e));
  }
};

void throw_on_errors(std::vector<Diagnostic> diags) {
  std::vector<Diagnostic> errors;
  for (auto& d : diags)
    if (d.severity == Diagnostic::Severity::Error) errors.push_back(std::move(d));
  if (!errors.empty()) throw ParseError(std::move(errors));
}

}  // namespace

Module parse_module(std::string_view text) {
  Parser p(lex(text));
  Module m = p.module();
  if (m.async) throw_on_errors(resolve_names(*m.async));
  if (m.compho) throw_on_errors(resolve_names(*m.compho));
  return m;
}

Protocol parse_protocol(std::string_view text) {
  Module m = parse_module(text);
  if (!m.async)
    throw ParseError({Diagnostic{Diagnostic::Severity::Error, {1, 1},
                                 "expected an asynchronous 'protocol' block"}});
  return std::move(*m.async);
}

CompHOProtocol parse_compho(std::string_view text) {
  Module m = parse_module(text);
  if (!m.compho)
    throw ParseError(
        {Diagnostic{Diagnostic::Severity::Error, {1, 1}, "expected a 'compho' block"}});
  return std::move(*m.compho);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hoc
