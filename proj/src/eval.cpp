#include "hoc/eval.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace hoc {

const std::set<int>& CoordSchedule::candidates(std::int64_t phase) const {
  static const std::set<int> empty;
  if (phases.empty()) return empty;
  auto len = static_cast<std::int64_t>(phases.size());
  auto i = ((phase - 1) % len + len) % len;
  return phases[static_cast<std::size_t>(i)];
}

bool CoordSchedule::is_coord(std::int64_t phase, int p) const {
  return candidates(phase).count(p) > 0;
}

int CoordSchedule::coord(std::int64_t phase) const {
  const auto& c = candidates(phase);
  return c.empty() ? -1 : *c.begin();
}

CoordSchedule CoordSchedule::parse(const std::string& text) {
  CoordSchedule s;
  s.phases.clear();
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    std::set<int> set;
    std::stringstream ps(part);
    std::string num;
    while (std::getline(ps, num, ',')) {
      if (num.empty()) continue;
      std::size_t used = 0;
      int v = std::stoi(num, &used);
      if (used != num.size() || v < 0) throw std::invalid_argument("bad coord entry: " + num);
      set.insert(v);
    }
    s.phases.push_back(std::move(set));
  }
  if (s.phases.empty()) throw std::invalid_argument("empty coord schedule");
  return s;
}

namespace {

std::int64_t to_int(const Value& v, const char* what) {
  if (v.kind() != Value::Kind::Int && v.kind() != Value::Kind::Enum)
    throw EvalError(std::string(what) + ": expected an integer, got " + v.to_string());
  return v.as_int();
}

const Value::Entries& entries_of(const Value& v, const char* what) {
  static const Value::Entries empty;
  if (v.is_none()) return empty;
  if (v.kind() != Value::Kind::Map && v.kind() != Value::Kind::Mbox)
    throw EvalError(std::string(what) + ": expected a map or mailbox, got " + v.to_string());
  return v.entries();
}

void arity(const Expr& e, std::size_t k) {
  if (e.args.size() != k)
    throw EvalError(e.text + "() takes " + std::to_string(k) + " arguments");
}

Value lookup(const std::string& name, const Env& env) {
  if (env.extra) {
    auto it = env.extra->find(name);
    if (it != env.extra->end()) return it->second;
  }
  if (env.decls && env.vars) {
    int i = env.decls->var_index(name);
    if (i >= 0 && static_cast<std::size_t>(i) < env.vars->size())
      return (*env.vars)[static_cast<std::size_t>(i)];
  }
  if (name == "n") return Value::integer(env.n);
  if (env.decls) {
    if (auto e = env.decls->enum_of_literal(name))
      return Value::enumeration(e, e->ordinal_of(name));
  }
  throw EvalError("unbound name '" + name + "'");
}

Value call(const Expr& e, const Env& env) {
  const std::string& f = e.text;
  if (env.decls) {
    if (auto m = env.decls->msg(f)) {
      std::vector<Value> fields;
      for (const auto& a : e.args) fields.push_back(eval(*a, env));
      if (fields.size() != m->fields.size()) throw EvalError("bad arity for message " + f);
      return Value::message(m, std::move(fields));
    }
  }
  auto arg = [&](std::size_t i) { return eval(*e.args[i], env); };
  if (f == "me") return Value::integer(env.self);
  if (f == "timeout") {
    if (!env.timeout) throw EvalError("timeout() is not available here");
    return Value::boolean(*env.timeout);
  }
  if (f == "phase") {
    if (!env.phase) throw EvalError("phase() is only defined in round-based protocols");
    return Value::integer(*env.phase);
  }
  if (f == "round") {
    if (!env.round) throw EvalError("round() is only defined in round-based protocols");
    return Value::integer(*env.round);
  }
  if (f == "is_coord") {
    arity(e, 2);
    if (!env.coord) throw EvalError("no coord schedule");
    return Value::boolean(
        env.coord->is_coord(to_int(arg(0), "is_coord"), static_cast<int>(to_int(arg(1), "is_coord"))));
  }
  if (f == "coord") {
    arity(e, 1);
    if (!env.coord) throw EvalError("no coord schedule");
    return Value::integer(env.coord->coord(to_int(arg(0), "coord")));
  }
  if (f == "size" || f == "len") {
    arity(e, 1);
    return Value::integer(static_cast<std::int64_t>(entries_of(arg(0), "size").size()));
  }
  if (f == "first") {
    arity(e, 1);
    const auto& es = entries_of(arg(0), "first");
    return es.empty() ? Value::none() : es.front().second;
  }
  if (f == "all_same") {
    arity(e, 1);
    const auto& es = entries_of(arg(0), "all_same");
    return Value::boolean(std::all_of(es.begin(), es.end(), [&](const auto& kv) {
      return kv.second == es.front().second;
    }));
  }
  if (f == "max" || f == "min") {
    bool mx = f == "max";
    if (e.args.size() == 2) {
      Value a = arg(0), b = arg(1);
      return (mx ? a < b : b < a) ? b : a;
    }
    arity(e, 1);
    const auto& es = entries_of(arg(0), f.c_str());
    if (es.empty()) return Value::none();
    Value best = es.front().second;
    for (const auto& kv : es)
      if (mx ? best < kv.second : kv.second < best) best = kv.second;
    return best;
  }
  if (f == "argmax") {
    arity(e, 1);
    const auto& es = entries_of(arg(0), "argmax");
    if (es.empty()) return Value::none();
    const auto* best = &es.front();
    for (const auto& kv : es)
      if (best->second < kv.second) best = &kv;
    return best->first;
  }
  if (f == "count") {
    arity(e, 2);
    Value v = arg(1);
    const auto& es = entries_of(arg(0), "count");
    return Value::integer(static_cast<std::int64_t>(
        std::count_if(es.begin(), es.end(), [&](const auto& kv) { return kv.second == v; })));
  }
  if (f == "has") {
    arity(e, 2);
    Value m = arg(0);
    return Value::boolean(!m.is_none() && !entries_of(m, "has").empty() &&
                          !m.get(arg(1)).is_none());
  }
  if (f == "get") {
    arity(e, 2);
    Value m = arg(0);
    if (m.is_none()) return Value::none();
    entries_of(m, "get");
    return m.get(arg(1));
  }
  if (f == "add") {
    arity(e, 2);
    Value box = arg(0), m = arg(1);
    if (box.is_none() || (box.kind() == Value::Kind::Map && box.size() == 0))
      box = Value::mailbox();
    if (box.kind() != Value::Kind::Mbox) throw EvalError("add(): expected a mailbox");
    if (m.is_none()) return box;
    if (m.kind() != Value::Kind::Msg) throw EvalError("add(): expected a message");
    Value key = Value::integer(m.from());
    // A mailbox keeps the first message received from each sender.
    if (!box.get(key).is_none()) return box;
    return box.put(key, m);
  }
  if (f == "put") {
    arity(e, 3);
    Value m = arg(0);
    if (m.is_none()) m = Value::map();
    entries_of(m, "put");
    return m.put(arg(1), arg(2));
  }
  throw EvalError("unknown function '" + f + "'");
}

Value binary(const Expr& e, const Env& env) {
  const std::string& op = e.text;
  if (op == "&&") {
    if (!eval(*e.args[0], env).as_bool()) return Value::boolean(false);
    return Value::boolean(eval(*e.args[1], env).as_bool());
  }
  if (op == "||") {
    if (eval(*e.args[0], env).as_bool()) return Value::boolean(true);
    return Value::boolean(eval(*e.args[1], env).as_bool());
  }
  Value a = eval(*e.args[0], env);
  Value b = eval(*e.args[1], env);
  if (op == "==") return Value::boolean(a == b);
  if (op == "!=") return Value::boolean(!(a == b));
  if (op == "<" || op == "<=" || op == ">" || op == ">=") {
    auto x = to_int(a, op.c_str());
    auto y = to_int(b, op.c_str());
    if (op == "<") return Value::boolean(x < y);
    if (op == "<=") return Value::boolean(x <= y);
    if (op == ">") return Value::boolean(x > y);
    return Value::boolean(x >= y);
  }
  auto x = to_int(a, op.c_str());
  auto y = to_int(b, op.c_str());
  if (op == "+") return Value::integer(x + y);
  if (op == "-") return Value::integer(x - y);
  if (op == "*") return Value::integer(x * y);
  if (op == "/" || op == "%") {
    if (y == 0) throw EvalError("division by zero");
    return Value::integer(op == "/" ? x / y : x % y);
  }
  throw EvalError("unknown operator '" + op + "'");
}

}  // namespace

Value eval(const ExprPtr& e, const Env& env) {
  if (!e) throw EvalError("missing expression");
  return eval(*e, env);
}

Value eval(const Expr& e, const Env& env) {
  switch (e.kind) {
    case Expr::Kind::Int:
      return Value::integer(e.ival);
    case Expr::Kind::Bool:
      return Value::boolean(e.ival != 0);
    case Expr::Kind::None:
      return Value::none();
    case Expr::Kind::EmptySet:
      return Value::map();
    case Expr::Kind::Name:
      return lookup(e.text, env);
    case Expr::Kind::Call:
      return call(e, env);
    case Expr::Kind::Field:
      return eval(*e.args[0], env).field(e.text);
    case Expr::Kind::Index: {
      Value base = eval(*e.args[0], env);
      if (base.is_none()) return base;
      entries_of(base, "index");
      return base.get(eval(*e.args[1], env));
    }
    case Expr::Kind::Unary: {
      Value v = eval(*e.args[0], env);
      if (e.text == "!") return Value::boolean(!v.as_bool());
      return Value::integer(-to_int(v, "-"));
    }
    case Expr::Kind::Binary:
      return binary(e, env);
  }
  throw EvalError("bad expression");
}

bool eval_bool(const ExprPtr& e, const Env& env) { return eval(e, env).as_bool(); }

std::vector<Value> initial_vars(const Decls& decls, const Env& env) {
  std::vector<Value> vals;
  for (const auto& v : decls.vars) vals.push_back(default_value(v.type, decls));
  Env local = env;
  local.decls = &decls;
  local.vars = &vals;
  for (std::size_t i = 0; i < decls.vars.size(); ++i)
    if (decls.vars[i].init) vals[i] = coerce(eval(*decls.vars[i].init, local), decls.vars[i].type);
  return vals;
}

Value coerce(const Value& v, const TypeRef& t) {
  if (t.kind == TypeRef::Kind::Mbox && v.kind() == Value::Kind::Map && v.size() == 0)
    return Value::mailbox();
  if (t.kind == TypeRef::Kind::Map && v.kind() == Value::Kind::Mbox && v.size() == 0)
    return Value::map();
  return v;
}

Value make_message(const Decls& d, const std::string& type, std::vector<Value> fields) {
  auto m = d.msg(type);
  if (!m) throw EvalError("unknown message type " + type);
  return Value::message(m, std::move(fields));
}

}  // namespace hoc
