#include "hoc/compho_runtime.hpp"

#include <algorithm>
#include <sstream>

namespace hoc {

std::set<int> HOAssignment::get(std::int64_t r, int p, int n) const {
  if (auto it = sets.find(r); it != sets.end())
    if (auto jt = it->second.find(p); jt != it->second.end()) return jt->second;
  std::set<int> out;
  if (default_full)
    for (int q = 0; q < n; ++q) out.insert(q);
  return out;
}

HOAssignment HOAssignment::parse(const std::string& text) {
  HOAssignment h;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument("HO file line " + std::to_string(no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++no;
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) fail("expected 'r p: {..}'");
    std::istringstream head(line.substr(0, colon));
    std::string first;
    head >> first;
    if (first == "default") {
      std::string mode;
      std::istringstream(line.substr(colon + 1)) >> mode;
      if (mode != "full" && mode != "empty") fail("default must be full or empty");
      h.default_full = mode == "full";
      continue;
    }
    std::int64_t r = 0;
    int p = 0;
    try {
      r = std::stoll(first);
      std::string ps;
      if (!(head >> ps)) fail("missing process id");
      p = std::stoi(ps);
    } catch (const std::invalid_argument&) {
      fail("bad round or process number");
    }
    std::string rest = line.substr(colon + 1);
    auto lb = rest.find('{'), rb = rest.find('}');
    if (lb == std::string::npos || rb == std::string::npos || rb < lb) fail("expected {..}");
    std::set<int> ho;
    std::istringstream body(rest.substr(lb + 1, rb - lb - 1));
    std::string q;
    while (std::getline(body, q, ',')) {
      if (q.find_first_not_of(" \t") == std::string::npos) continue;
      try {
        ho.insert(std::stoi(q));
      } catch (const std::exception&) {
        fail("bad process id '" + q + "'");
      }
    }
    h.set(r, p, std::move(ho));
  }
  return h;
}

std::string HOAssignment::to_string() const {
  std::ostringstream os;
  os << "default: " << (default_full ? "full" : "empty") << "\n";
  for (const auto& [r, per] : sets)
    for (const auto& [p, ho] : per) {
      os << r << " " << p << ": {";
      bool first = true;
      for (int q : ho) {
        os << (first ? "" : ",") << q;
        first = false;
      }
      os << "}\n";
    }
  return os.str();
}

std::size_t ComphoState::hash() const {
  std::size_t h = static_cast<std::size_t>(su) * 31 + static_cast<std::size_t>(r);
  auto mix = [&](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  for (const auto& p : procs) {
    mix(static_cast<std::size_t>(p.in_cursor));
    for (const auto& f : p.frames) {
      mix(reinterpret_cast<std::uintptr_t>(f.proto));
      mix(static_cast<std::size_t>(f.base));
      for (const auto& v : f.vars) mix(v.hash());
    }
  }
  for (const auto& s : sessions) {
    mix(static_cast<std::size_t>(s.counter));
    for (int q : s.members) mix(static_cast<std::size_t>(q) + 7);
    for (int q : s.done) mix(static_cast<std::size_t>(q) + 101);
  }
  for (const auto& m : pool) mix(m.payload.hash() + static_cast<std::size_t>(m.sender * 17 + m.receiver));
  return h;
}

namespace {

void store(const Decls& d, std::vector<Value>& vars, const LValue& lv, Value v, const Env& env) {
  int i = d.var_index(lv.var);
  if (i < 0) throw EvalError("unknown variable " + lv.var);
  auto& slot = vars[static_cast<std::size_t>(i)];
  if (lv.index) {
    Value base = slot.is_none() ? Value::map() : slot;
    slot = base.put(eval(*lv.index, env), std::move(v));
  } else {
    slot = coerce(v, d.vars[static_cast<std::size_t>(i)].type);
  }
}

// Interprets send and update bodies of one process.
struct Exec {
  int p;
  int n;
  bool send_mode;
  std::vector<Message>* msgs = nullptr;
  std::vector<Observable>* obs = nullptr;
  const std::vector<Value>* script = nullptr;
  int* in_cursor = nullptr;
  std::int64_t stamp = 0;
  const Stmt* call = nullptr;
  bool exit = false;

  void run(const Stmt& s, Frame& f, const Env& env) {
    const Decls& d = f.proto->decls;
    switch (s.kind) {
      case Stmt::Kind::Seq:
        for (const auto& c : s.body) {
          run(c, f, env);
          if (exit) return;
        }
        return;
      case Stmt::Kind::If:
        run(s.body[eval_bool(s.exprs[0], env) ? 0 : 1], f, env);
        return;
      case Stmt::Kind::Send: {
        if (!send_mode) throw EvalError("update body attempted a send");
        Value payload = eval(*s.exprs[0], env).with_from(p);
        if (s.exprs.size() < 2 || !s.exprs[1]) {
          for (int q = 0; q < n; ++q) msgs->push_back(Message{p, payload, q});
        } else {
          auto q = eval(*s.exprs[1], env).as_int();
          if (q < 0 || q >= n) throw EvalError("send to a nonexistent process");
          msgs->push_back(Message{p, payload, static_cast<int>(q)});
        }
        return;
      }
      default:
        break;
    }
    if (send_mode) throw EvalError("send body attempted a state mutation");
    switch (s.kind) {
      case Stmt::Kind::Assign: {
        std::vector<Value> vals;
        for (const auto& e : s.exprs) vals.push_back(eval(*e, env));
        for (std::size_t i = 0; i < s.targets.size(); ++i)
          store(d, f.vars, s.targets[i], vals[i], env);
        return;
      }
      case Stmt::Kind::Out: {
        std::vector<Value> vals;
        for (const auto& e : s.exprs) vals.push_back(eval(*e, env));
        if (obs) obs->push_back(Observable{p, false, std::move(vals), static_cast<std::size_t>(stamp)});
        return;
      }
      case Stmt::Kind::In: {
        if (!script || static_cast<std::size_t>(*in_cursor) >= script->size())
          throw EvalError("input script of P" + std::to_string(p) + " is exhausted");
        Value v = (*script)[static_cast<std::size_t>((*in_cursor)++)];
        store(d, f.vars, s.targets[0], v, env);
        if (obs) obs->push_back(Observable{p, true, {v}, static_cast<std::size_t>(stamp)});
        return;
      }
      case Stmt::Kind::Call:
        if (call) throw EvalError("more than one call in one update");
        call = &s;
        return;
      case Stmt::Kind::Exit:
        exit = true;
        return;
      default:
        throw EvalError("statement not allowed in a round-based update");
    }
  }
};

}  // namespace

ComphoMachine::ComphoMachine(const CompHOProtocol& p, ComphoConfig cfg)
    : proto_(p), cfg_(std::move(cfg)) {
  if (cfg_.n < 1) throw std::invalid_argument("need at least one process");
  if (proto_.rounds.empty()) throw std::invalid_argument("phase has no rounds");
}

std::int64_t ComphoMachine::phase_of(const ComphoState& s, int p) const {
  const Frame& f = s.procs[static_cast<std::size_t>(p)].frames.back();
  for (auto it = s.sessions.rbegin(); it != s.sessions.rend(); ++it)
    if (it->members.count(p) && it->proto == f.proto)
      return f.base + it->counter / static_cast<std::int64_t>(it->proto->rounds.size());
  return f.base;
}

Env ComphoMachine::env_for(const ComphoState& s, const Frame& f, int p) const {
  Env env;
  env.decls = &f.proto->decls;
  env.vars = &f.vars;
  env.self = p;
  env.n = cfg_.n;
  env.coord = &cfg_.coord;
  env.phase = phase_of(s, p);
  const Session& top = s.sessions.back();
  env.round = top.counter % static_cast<std::int64_t>(top.proto->rounds.size());
  return env;
}

Frame ComphoMachine::enter(const CompHOProtocol& callee, const Frame* caller, const Stmt* call,
                           int p, const ComphoState& s, int& in_cursor) const {
  Frame f;
  f.proto = &callee;
  Env base;
  base.decls = &callee.decls;
  base.self = p;
  base.n = cfg_.n;
  base.coord = &cfg_.coord;
  f.vars = initial_vars(callee.decls, base);
  if (caller) {
    // Pass by value: every caller local with a matching name, then the arguments.
    for (std::size_t i = 0; i < callee.decls.vars.size(); ++i) {
      int j = caller->proto->decls.var_index(callee.decls.vars[i].name);
      if (j >= 0) f.vars[i] = caller->vars[static_cast<std::size_t>(j)];
    }
    Env cenv = env_for(s, *caller, p);
    for (std::size_t i = 0; i < call->names.size(); ++i) {
      int j = callee.decls.var_index(call->names[i]);
      if (j < 0) throw EvalError("unknown argument " + call->names[i]);
      f.vars[static_cast<std::size_t>(j)] = eval(*call->exprs[i], cenv);
    }
  }
  Env env = base;
  env.vars = &f.vars;
  Exec ex{p, cfg_.n, false};
  ex.script = static_cast<std::size_t>(p) < cfg_.inputs.size()
                  ? &cfg_.inputs[static_cast<std::size_t>(p)]
                  : nullptr;
  ex.in_cursor = &in_cursor;
  ex.stamp = s.r;
  ex.run(callee.init, f, env);
  if (callee.phase_base) f.base = eval(*callee.phase_base, env).as_int();
  return f;
}

ComphoState ComphoMachine::start() const {
  ComphoState s;
  Session main;
  main.proto = &proto_;
  for (int p = 0; p < cfg_.n; ++p) main.members.insert(p);
  s.sessions.push_back(main);
  s.procs.resize(static_cast<std::size_t>(cfg_.n));
  for (int p = 0; p < cfg_.n; ++p) {
    auto& ps = s.procs[static_cast<std::size_t>(p)];
    ps.frames.push_back(enter(proto_, nullptr, nullptr, p, s, ps.in_cursor));
  }
  return s;
}

std::vector<int> ComphoMachine::active(const ComphoState& s) const {
  std::vector<int> out;
  const Session& top = s.sessions.back();
  for (int p : top.members)
    if (!top.done.count(p)) out.push_back(p);
  return out;
}

const Round& ComphoMachine::current_round(const ComphoState& s) const {
  const Session& top = s.sessions.back();
  const auto& rounds = top.proto->rounds;
  return rounds[static_cast<std::size_t>(top.counter % static_cast<std::int64_t>(rounds.size()))];
}

ComphoState ComphoMachine::send_step(const ComphoState& s) const {
  if (s.su != ComphoState::SU::Snd) throw std::logic_error("send step outside the send phase");
  ComphoState t = s;
  const Round& round = current_round(s);
  for (int p : active(s)) {
    Frame& f = t.procs[static_cast<std::size_t>(p)].frames.back();
    Env env = env_for(s, f, p);
    Exec ex{p, cfg_.n, true};
    ex.msgs = &t.pool;
    ex.run(round.send, f, env);
  }
  t.su = ComphoState::SU::Updt;
  return t;
}

Value ComphoMachine::mailbox(const ComphoState& s, int p, const std::set<int>& ho) const {
  const Session& top = s.sessions.back();
  Value box = Value::mailbox();
  for (const auto& m : s.pool) {
    if (m.receiver != p || !ho.count(m.sender) || !top.members.count(m.sender)) continue;
    Value key = Value::integer(m.sender);
    if (box.get(key).is_none()) box = box.put(key, m.payload);
  }
  return box;
}

ComphoState ComphoMachine::update_step(const ComphoState& s, const std::vector<std::set<int>>& ho,
                                       std::vector<Observable>* obs) const {
  if (s.su != ComphoState::SU::Updt) throw std::logic_error("update step outside the update phase");
  ComphoState t = s;
  const Round& round = current_round(s);
  std::vector<std::pair<int, const Stmt*>> calls;
  std::vector<int> exits;
  for (int p : active(s)) {
    auto& ps = t.procs[static_cast<std::size_t>(p)];
    Frame& f = ps.frames.back();
    std::map<std::string, Value> extra{
        {round.mbox_param, mailbox(s, p, ho.at(static_cast<std::size_t>(p)))}};
    Env env = env_for(s, f, p);
    env.extra = &extra;
    Exec ex{p, cfg_.n, false};
    ex.obs = obs;
    ex.script = static_cast<std::size_t>(p) < cfg_.inputs.size()
                    ? &cfg_.inputs[static_cast<std::size_t>(p)]
                    : nullptr;
    ex.in_cursor = &ps.in_cursor;
    ex.stamp = s.r;
    ex.run(round.update, f, env);
    if (ex.exit)
      exits.push_back(p);
    else if (ex.call)
      calls.emplace_back(p, ex.call);
  }
  t.pool.clear();
  t.su = ComphoState::SU::Snd;
  ++t.r;
  ++t.sessions.back().counter;
  for (int p : exits) t.sessions.back().done.insert(p);

  if (!calls.empty()) {
    const std::string& name = calls.front().second->label;
    for (const auto& [p, c] : calls)
      if (c->label != name) throw EvalError("processes called different sub-protocols in one round");
    const CompHOProtocol* callee = t.sessions.back().proto->find_sub(name);
    if (!callee) throw EvalError("unknown sub-protocol " + name);
    Session sub;
    sub.proto = callee;
    for (const auto& [p, c] : calls) {
      sub.members.insert(p);
      auto& ps = t.procs[static_cast<std::size_t>(p)];
      Frame callee_frame = enter(*callee, &ps.frames.back(), c, p, t, ps.in_cursor);
      ps.frames.push_back(std::move(callee_frame));
    }
    t.sessions.push_back(std::move(sub));
  }

  while (t.sessions.size() > 1 && t.sessions.back().done == t.sessions.back().members) {
    const Session& top = t.sessions.back();
    for (int p : top.members) {
      auto& frames = t.procs[static_cast<std::size_t>(p)].frames;
      Frame callee = std::move(frames.back());
      frames.pop_back();
      Frame& caller = frames.back();
      for (const auto& name : top.proto->returns) {
        int i = callee.proto->decls.var_index(name);
        int j = caller.proto->decls.var_index(name);
        if (i >= 0 && j >= 0)
          caller.vars[static_cast<std::size_t>(j)] = callee.vars[static_cast<std::size_t>(i)];
      }
    }
    t.sessions.pop_back();
  }
  return t;
}

ComphoExecution run_compho(const ComphoMachine& m, const HOAssignment& ho, std::size_t max_rounds) {
  ComphoExecution ex;
  ex.init = m.start();
  ComphoState cur = ex.init;
  const int n = m.config().n;
  for (std::size_t k = 0; k < max_rounds && !m.finished(cur); ++k) {
    cur = m.send_step(cur);
    std::vector<std::set<int>> sets;
    for (int p = 0; p < n; ++p) sets.push_back(ho.get(cur.r, p, n));
    cur = m.update_step(cur, sets, &ex.observables);
    ex.ho.push_back(std::move(sets));
    ex.states.push_back(cur);
  }
  return ex;
}

std::vector<std::set<int>> ho_choices(int n, std::int64_t r, int p, const HOFilter& filter) {
  std::vector<std::set<int>> out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::set<int> s;
    for (int q = 0; q < n; ++q)
      if (mask & (1u << q)) s.insert(q);
    if (!filter || filter(r, p, s)) out.push_back(std::move(s));
  }
  return out;
}

std::size_t enumerate_ho(int n, std::size_t rounds, const std::function<bool(const HOAssignment&)>& f,
                         const HOFilter& filter, std::size_t budget) {
  if (n < 1 || n > 16) throw std::invalid_argument("enumerate_ho supports 1..16 processes");
  std::vector<std::vector<std::set<int>>> choices;
  for (std::size_t r = 0; r < rounds; ++r)
    for (int p = 0; p < n; ++p) {
      choices.push_back(ho_choices(n, static_cast<std::int64_t>(r), p, filter));
      if (choices.back().empty()) return 0;
    }
  std::vector<std::size_t> idx(choices.size(), 0);
  std::size_t count = 0;
  for (;;) {
    if (++count > budget)
      throw BudgetExceeded("more than " + std::to_string(budget) + " HO assignments");
    HOAssignment h;
    h.default_full = false;
    for (std::size_t k = 0; k < idx.size(); ++k)
      h.set(static_cast<std::int64_t>(k / static_cast<std::size_t>(n)),
            static_cast<int>(k % static_cast<std::size_t>(n)), choices[k][idx[k]]);
    if (!f(h)) return count;
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == choices[k].size()) idx[k++] = 0;
    if (k == idx.size()) return count;
  }
}

}  // namespace hoc
