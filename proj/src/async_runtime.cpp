#include "hoc/async_runtime.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace hoc {

namespace {

// Recv directly in `s`, not inside a nested loop.
bool direct_recv(const Stmt& s) {
  if (s.kind == Stmt::Kind::Recv) return true;
  if (s.kind == Stmt::Kind::While) return false;
  return std::any_of(s.body.begin(), s.body.end(), direct_recv);
}

bool direct_timeout(const Stmt& s) {
  if (s.kind == Stmt::Kind::While) return false;
  for (const auto& e : s.exprs)
    if (e && mentions_call(*e, "timeout")) return true;
  return std::any_of(s.body.begin(), s.body.end(), direct_timeout);
}

struct Lowerer {
  struct Loop {
    int id;
    int head;
    bool reception;
    std::vector<int> breaks;
  };

  Program prog;
  std::vector<Loop> loops;
  std::vector<std::string> scopes;
  std::vector<bool> has_timeout;

  int emit(Instr in, const Stmt* s) {
    in.stmt = s;
    if (s) in.loc = s->loc;
    in.scope = scopes.empty() ? std::string() : scopes.back();
    if (!loops.empty() && loops.back().reception) in.reception = loops.back().id;
    prog.code.push_back(std::move(in));
    return static_cast<int>(prog.code.size()) - 1;
  }

  int here() const { return static_cast<int>(prog.code.size()); }

  void stmt(const Stmt& s) {
    Instr in;
    switch (s.kind) {
      case Stmt::Kind::Seq:
        for (const auto& c : s.body) stmt(c);
        return;
      case Stmt::Kind::Assign:
        in.op = Instr::Op::Assign;
        emit(in, &s);
        return;
      case Stmt::Kind::ResetTimeout:
        in.op = Instr::Op::ResetTimeout;
        emit(in, &s);
        return;
      case Stmt::Kind::Send:
        in.op = Instr::Op::Send;
        emit(in, &s);
        return;
      case Stmt::Kind::Recv:
        in.op = Instr::Op::Recv;
        in.timeout_exit = !loops.empty() && loops.back().reception &&
                          has_timeout[static_cast<std::size_t>(loops.back().id)];
        emit(in, &s);
        return;
      case Stmt::Kind::In:
        in.op = Instr::Op::In;
        emit(in, &s);
        return;
      case Stmt::Kind::Out:
        in.op = Instr::Op::Out;
        emit(in, &s);
        return;
      case Stmt::Kind::If: {
        in.op = Instr::Op::Branch;
        in.nondet_timeout = !loops.empty() && loops.back().reception &&
                            mentions_call(*s.exprs[0], "timeout");
        int br = emit(in, &s);
        stmt(s.body[0]);
        if (s.body[1].is_empty_seq()) {
          prog.code[static_cast<std::size_t>(br)].target = here();
          return;
        }
        Instr j;
        j.op = Instr::Op::Jump;
        int jmp = emit(j, &s);
        prog.code[static_cast<std::size_t>(br)].target = here();
        stmt(s.body[1]);
        prog.code[static_cast<std::size_t>(jmp)].target = here();
        return;
      }
      case Stmt::Kind::While: {
        int id = prog.loops++;
        bool rec = direct_recv(s.body[0]);
        prog.is_reception.push_back(rec);
        has_timeout.push_back(rec && direct_timeout(s.body[0]));
        in.op = Instr::Op::LoopEnter;
        in.loop = id;
        emit(in, &s);
        if (!s.label.empty()) scopes.push_back(s.label);
        loops.push_back(Loop{id, here(), rec, {}});
        Instr head;
        head.op = Instr::Op::LoopHead;
        head.loop = id;
        emit(head, &s);
        stmt(s.body[0]);
        Instr back;
        back.op = Instr::Op::Jump;
        back.jump = Instr::JumpKind::Back;
        back.loop = id;
        back.target = loops.back().head;
        emit(back, &s);
        for (int b : loops.back().breaks) prog.code[static_cast<std::size_t>(b)].target = here();
        loops.pop_back();
        if (!s.label.empty()) scopes.pop_back();
        return;
      }
      case Stmt::Kind::Break:
      case Stmt::Kind::Continue: {
        if (loops.empty()) throw std::invalid_argument("break or continue outside a loop");
        in.op = Instr::Op::Jump;
        in.loop = loops.back().id;
        bool brk = s.kind == Stmt::Kind::Break;
        in.jump = brk ? Instr::JumpKind::Break : Instr::JumpKind::Continue;
        in.leaves_reception = brk && loops.back().reception;
        in.target = loops.back().head;
        int at = emit(in, &s);
        if (brk) loops.back().breaks.push_back(at);
        return;
      }
      case Stmt::Kind::Havoc:
      case Stmt::Kind::Call:
      case Stmt::Kind::Exit:
        throw std::invalid_argument("statement is only valid in round-based protocols");
    }
  }
};

}  // namespace

Program lower(const Protocol& p) {
  Lowerer l;
  l.prog.protocol = &p;
  l.stmt(p.body);
  Instr halt;
  halt.op = Instr::Op::Halt;
  l.emit(halt, nullptr);
  return std::move(l.prog);
}

std::string Message::to_string() const {
  return "P" + std::to_string(sender) + "->P" + std::to_string(receiver) + ":" +
         payload.to_string();
}

std::size_t AsyncState::pool_size() const {
  std::size_t k = 0;
  for (const auto& [m, c] : pool) k += static_cast<std::size_t>(c);
  return k;
}

namespace {
void mix(std::size_t& h, std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); }
}  // namespace

std::size_t AsyncState::hash() const {
  std::size_t h = 0;
  for (const auto& ps : procs) {
    mix(h, static_cast<std::size_t>(ps.pc));
    mix(h, static_cast<std::size_t>(ps.status) * 4 + ps.timed_out * 2 + ps.bottom);
    mix(h, static_cast<std::size_t>(ps.in_cursor));
    for (int c : ps.loop_count) mix(h, static_cast<std::size_t>(c));
    for (const auto& v : ps.vars) mix(h, v.hash());
  }
  for (const auto& [m, c] : pool) {
    mix(h, static_cast<std::size_t>(m.sender * 131 + m.receiver));
    mix(h, m.payload.hash());
    mix(h, static_cast<std::size_t>(c));
  }
  mix(h, static_cast<std::size_t>(duplicates));
  return h;
}

std::string Action::to_string() const {
  static const char* names[] = {"assign", "send", "recv", "in", "out", "branch",
                                "loop", "reset", "drop", "dup", "crash"};
  std::string s = names[static_cast<int>(kind)];
  if (process >= 0) s += "(P" + std::to_string(process) + ")";
  if (kind == Kind::Recv) s += msg ? " " + msg->to_string() : " bottom";
  else if (msg) s += " " + msg->to_string();
  if (timeout) s += *timeout ? " timeout" : " no-timeout";
  return s;
}

AsyncMachine::AsyncMachine(const Program& prog, AsyncConfig cfg)
    : prog_(prog), cfg_(std::move(cfg)) {
  if (cfg_.n < 1) throw std::invalid_argument("need at least one process");
}

Env AsyncMachine::env_for(const ProcState& ps, int p) const {
  Env env;
  env.decls = &decls();
  env.vars = &ps.vars;
  env.self = p;
  env.n = cfg_.n;
  env.coord = &cfg_.coord;
  env.timeout = ps.timed_out;
  return env;
}

AsyncState AsyncMachine::init() const {
  AsyncState s;
  for (int p = 0; p < cfg_.n; ++p) {
    ProcState ps;
    Env env;
    env.self = p;
    env.n = cfg_.n;
    env.coord = &cfg_.coord;
    ps.vars = initial_vars(decls(), env);
    ps.loop_count.assign(static_cast<std::size_t>(prog_.loops), 0);
    if (prog_.code.front().op == Instr::Op::Halt) ps.status = ProcState::Status::Halted;
    s.procs.push_back(std::move(ps));
  }
  return s;
}

bool AsyncMachine::evaluates_differently(const ProcState& ps, int p, const Instr& in) const {
  Env env = env_for(ps, p);
  env.timeout = false;
  bool a = eval_bool(in.stmt->exprs[0], env);
  env.timeout = true;
  return a != eval_bool(in.stmt->exprs[0], env);
}

std::optional<Action> AsyncMachine::local_action(const AsyncState& s, int p) const {
  const auto& ps = s.procs[static_cast<std::size_t>(p)];
  if (ps.status != ProcState::Status::Running) return std::nullopt;
  const Instr& in = instr_at(ps);
  Action a;
  a.process = p;
  switch (in.op) {
    case Instr::Op::Recv:
    case Instr::Op::Halt:
      return std::nullopt;
    case Instr::Op::Branch:
      if (in.nondet_timeout && !ps.timed_out && evaluates_differently(ps, p, in))
        return std::nullopt;
      a.kind = Action::Kind::Branch;
      return a;
    case Instr::Op::Assign: a.kind = Action::Kind::Assign; return a;
    case Instr::Op::Send: a.kind = Action::Kind::Send; return a;
    case Instr::Op::ResetTimeout: a.kind = Action::Kind::Reset; return a;
    case Instr::Op::In: a.kind = Action::Kind::In; return a;
    case Instr::Op::Out: a.kind = Action::Kind::Out; return a;
    case Instr::Op::Jump:
    case Instr::Op::LoopEnter:
    case Instr::Op::LoopHead:
      a.kind = Action::Kind::LoopCtl;
      return a;
  }
  return std::nullopt;
}

std::vector<Action> AsyncMachine::timeout_choices(const AsyncState& s, int p, bool reduce) const {
  const auto& ps = s.procs[static_cast<std::size_t>(p)];
  if (ps.status != ProcState::Status::Running) return {};
  const Instr& in = instr_at(ps);
  if (in.op != Instr::Op::Branch || !in.nondet_timeout || ps.timed_out ||
      !evaluates_differently(ps, p, in))
    return {};
  Action a;
  a.kind = Action::Kind::Branch;
  a.process = p;
  std::vector<Action> out;
  if (!(reduce && ps.bottom)) {
    a.timeout = false;
    out.push_back(a);
  }
  a.timeout = true;
  out.push_back(a);
  return out;
}

std::vector<Action> AsyncMachine::recv_choices(const AsyncState& s, int p, bool reduce) const {
  const auto& ps = s.procs[static_cast<std::size_t>(p)];
  if (ps.status != ProcState::Status::Running) return {};
  const Instr& in = instr_at(ps);
  if (in.op != Instr::Op::Recv) return {};
  std::vector<Action> out;
  Action a;
  a.kind = Action::Kind::Recv;
  a.process = p;
  for (const auto& [m, c] : s.pool) {
    if (m.receiver != p) continue;
    a.msg = m;
    out.push_back(a);
  }
  // Without a timeout exit a bottom receive only spins, which non-receipt covers.
  if (!reduce || in.timeout_exit) {
    a.msg.reset();
    out.push_back(a);
  }
  return out;
}

std::vector<Action> AsyncMachine::enabled_actions(const AsyncState& s) const {
  std::vector<Action> out;
  for (int p = 0; p < cfg_.n; ++p) {
    if (auto a = local_action(s, p)) {
      out.push_back(*a);
      continue;
    }
    for (auto& a : timeout_choices(s, p, false)) out.push_back(std::move(a));
    for (auto& a : recv_choices(s, p, false)) out.push_back(std::move(a));
  }
  Action env;
  if (cfg_.loss) {
    env.kind = Action::Kind::Drop;
    for (const auto& [m, c] : s.pool) {
      env.msg = m;
      out.push_back(env);
    }
  }
  if (cfg_.duplication && s.duplicates < cfg_.max_duplicates) {
    env.kind = Action::Kind::Duplicate;
    for (const auto& [m, c] : s.pool) {
      env.msg = m;
      out.push_back(env);
    }
  }
  if (cfg_.crash) {
    int crashed = 0;
    for (const auto& ps : s.procs) crashed += ps.status == ProcState::Status::Crashed;
    if (crashed < cfg_.max_crashes) {
      env.kind = Action::Kind::Crash;
      env.msg.reset();
      for (int p = 0; p < cfg_.n; ++p) {
        if (s.procs[static_cast<std::size_t>(p)].status != ProcState::Status::Running) continue;
        env.process = p;
        out.push_back(env);
      }
    }
  }
  return out;
}

AsyncState AsyncMachine::step(const AsyncState& s, const Action& a,
                              std::vector<Observable>* obs) const {
  auto en = enabled_actions(s);
  if (std::find(en.begin(), en.end(), a) == en.end())
    throw ActionNotEnabled("action not enabled: " + a.to_string());
  return apply(s, a, obs);
}

namespace {

void take_one(std::map<Message, int>& pool, const Message& m) {
  auto it = pool.find(m);
  if (it == pool.end()) throw ActionNotEnabled("message not in transit: " + m.to_string());
  if (--it->second == 0) pool.erase(it);
}

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

}  // namespace

AsyncState AsyncMachine::apply(const AsyncState& s, const Action& a,
                               std::vector<Observable>* obs) const {
  AsyncState t = s;
  switch (a.kind) {
    case Action::Kind::Drop:
      take_one(t.pool, *a.msg);
      return t;
    case Action::Kind::Duplicate:
      ++t.pool[*a.msg];
      ++t.duplicates;
      return t;
    case Action::Kind::Crash:
      t.procs[static_cast<std::size_t>(a.process)].status = ProcState::Status::Crashed;
      return t;
    default:
      break;
  }
  const int p = a.process;
  auto& ps = t.procs[static_cast<std::size_t>(p)];
  if (ps.status != ProcState::Status::Running) throw ActionNotEnabled("process is not running");
  const Instr& in = instr_at(ps);
  const Stmt* st = in.stmt;
  const Env env = env_for(s.procs[static_cast<std::size_t>(p)], p);
  int next = ps.pc + 1;
  switch (in.op) {
    case Instr::Op::Assign: {
      std::vector<Value> vals;
      for (const auto& e : st->exprs) vals.push_back(eval(*e, env));
      for (std::size_t i = 0; i < st->targets.size(); ++i)
        store(decls(), ps.vars, st->targets[i], vals[i], env);
      break;
    }
    case Instr::Op::Send: {
      Value payload = eval(*st->exprs[0], env).with_from(p);
      if (st->exprs.size() < 2 || !st->exprs[1]) {
        for (int q = 0; q < cfg_.n; ++q) ++t.pool[Message{p, payload, q}];
      } else {
        auto q = eval(*st->exprs[1], env).as_int();
        if (q < 0 || q >= cfg_.n) throw EvalError("send to a nonexistent process");
        ++t.pool[Message{p, payload, static_cast<int>(q)}];
      }
      break;
    }
    case Instr::Op::Recv: {
      if (a.kind != Action::Kind::Recv) throw ActionNotEnabled("process is waiting for a message");
      if (a.msg) {
        if (a.msg->receiver != p) throw ActionNotEnabled("message addressed elsewhere");
        take_one(t.pool, *a.msg);
        store(decls(), ps.vars, st->targets[0], a.msg->payload, env);
        store(decls(), ps.vars, st->targets[1], Value::integer(a.msg->sender), env);
        ps.bottom = false;
      } else {
        store(decls(), ps.vars, st->targets[0], Value::none(), env);
        store(decls(), ps.vars, st->targets[1], Value::none(), env);
        ps.bottom = true;
      }
      break;
    }
    case Instr::Op::ResetTimeout:
      ps.timed_out = false;
      break;
    case Instr::Op::Branch: {
      Env e = env;
      if (a.timeout) {
        e.timeout = *a.timeout;
        if (*a.timeout) ps.timed_out = true;
      }
      if (!eval_bool(st->exprs[0], e)) next = in.target;
      break;
    }
    case Instr::Op::Jump:
      next = in.target;
      break;
    case Instr::Op::LoopEnter:
      ps.loop_count[static_cast<std::size_t>(in.loop)] = 0;
      break;
    case Instr::Op::LoopHead:
      if (!prog_.is_reception[static_cast<std::size_t>(in.loop)] &&
          ++ps.loop_count[static_cast<std::size_t>(in.loop)] > cfg_.max_iterations) {
        ps.status = ProcState::Status::Bounded;
        return t;
      }
      break;
    case Instr::Op::In: {
      const auto* script = static_cast<std::size_t>(p) < cfg_.inputs.size()
                               ? &cfg_.inputs[static_cast<std::size_t>(p)]
                               : nullptr;
      if (!script || static_cast<std::size_t>(ps.in_cursor) >= script->size())
        throw EvalError("input script of P" + std::to_string(p) + " is exhausted");
      Value v = (*script)[static_cast<std::size_t>(ps.in_cursor++)];
      store(decls(), ps.vars, st->targets[0], v, env);
      if (obs) obs->push_back(Observable{p, true, {v}, 0});
      break;
    }
    case Instr::Op::Out: {
      std::vector<Value> vals;
      for (const auto& e : st->exprs) vals.push_back(eval(*e, env));
      if (obs) obs->push_back(Observable{p, false, std::move(vals), 0});
      break;
    }
    case Instr::Op::Halt:
      throw ActionNotEnabled("process has halted");
  }
  ps.pc = next;
  if (prog_.code[static_cast<std::size_t>(next)].op == Instr::Op::Halt)
    ps.status = ProcState::Status::Halted;
  return t;
}

Scheduler random_scheduler(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const AsyncState&, const std::vector<Action>& acts) {
    std::uniform_int_distribution<std::size_t> d(0, acts.size() - 1);
    return d(*rng);
  };
}

namespace {

void stamp(std::vector<Observable>& obs, std::size_t from, std::size_t step) {
  for (std::size_t i = from; i < obs.size(); ++i) obs[i].step = step;
}

}  // namespace

Execution run_async(const AsyncMachine& m, const Scheduler& sched, std::size_t max_steps) {
  Execution ex;
  ex.init = m.init();
  AsyncState cur = ex.init;
  for (;;) {
    auto acts = m.enabled_actions(cur);
    if (acts.empty()) break;
    if (ex.actions.size() >= max_steps) {
      ex.truncated = true;
      break;
    }
    const Action& a = acts.at(sched(cur, acts));
    std::size_t mark = ex.observables.size();
    cur = m.apply(cur, a, &ex.observables);
    stamp(ex.observables, mark, ex.actions.size());
    ex.actions.push_back(a);
    ex.states.push_back(cur);
  }
  return ex;
}

Execution run_async(const AsyncMachine& m, const std::vector<Action>& script) {
  Execution ex;
  ex.init = m.init();
  AsyncState cur = ex.init;
  for (const auto& a : script) {
    std::size_t mark = ex.observables.size();
    cur = m.step(cur, a, &ex.observables);
    stamp(ex.observables, mark, ex.actions.size());
    ex.actions.push_back(a);
    ex.states.push_back(cur);
  }
  return ex;
}

std::vector<std::vector<bool>> live_variables(const Program& prog) {
  const Decls& d = prog.protocol->decls;
  const std::size_t nv = d.vars.size(), nc = prog.code.size();
  std::vector<std::vector<bool>> use(nc, std::vector<bool>(nv)), def(nc, std::vector<bool>(nv));
  std::vector<std::vector<int>> succ(nc);
  auto mark = [&](std::vector<bool>& row, const std::set<std::string>& names) {
    for (const auto& nm : names)
      if (int j = d.var_index(nm); j >= 0) row[static_cast<std::size_t>(j)] = true;
  };
  for (std::size_t i = 0; i < nc; ++i) {
    const Instr& in = prog.code[i];
    const int next = static_cast<int>(i) + 1;
    switch (in.op) {
      case Instr::Op::Halt: break;
      case Instr::Op::Jump: succ[i] = {in.target}; break;
      case Instr::Op::Branch: succ[i] = {next, in.target}; break;
      default: succ[i] = {next};
    }
    bool reads = in.op == Instr::Op::Assign || in.op == Instr::Op::Send || in.op == Instr::Op::Recv ||
                 in.op == Instr::Op::Branch || in.op == Instr::Op::In || in.op == Instr::Op::Out;
    if (!reads || !in.stmt) continue;
    std::set<std::string> u, k;
    const std::size_t ne = in.op == Instr::Op::Branch ? 1 : in.stmt->exprs.size();
    for (std::size_t e = 0; e < ne; ++e)
      if (in.stmt->exprs[e]) collect_names(*in.stmt->exprs[e], u);
    if (in.op != Instr::Op::Branch && in.op != Instr::Op::Send && in.op != Instr::Op::Out) {
      for (const auto& t : in.stmt->targets) {
        if (t.index) {
          collect_names(*t.index, u);
          u.insert(t.var);  // partial write
        } else {
          k.insert(t.var);
        }
      }
    }
    mark(use[i], u);
    mark(def[i], k);
  }
  std::vector<std::vector<bool>> live(nc, std::vector<bool>(nv));
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = nc; i-- > 0;) {
      std::vector<bool> out(nv);
      for (int s : succ[i])
        if (s >= 0 && static_cast<std::size_t>(s) < nc)
          for (std::size_t j = 0; j < nv; ++j) out[j] = out[j] || live[static_cast<std::size_t>(s)][j];
      for (std::size_t j = 0; j < nv; ++j) {
        bool l = use[i][j] || (out[j] && !def[i][j]);
        if (l != live[i][j]) {
          live[i][j] = l;
          changed = true;
        }
      }
    }
  }
  return live;
}

namespace {

struct StateHash {
  std::size_t operator()(const AsyncState& s) const { return s.hash(); }
};

// Duplication and crashes interfere with receives of other processes.
bool is_env(const Action& a) {
  return a.kind == Action::Kind::Duplicate || a.kind == Action::Kind::Crash || a.kind == Action::Kind::Drop;
}

struct Dfs {
  const AsyncMachine& m;
  AsyncVisitor& v;
  const EnumOptions& opt;
  EnumStats st;
  std::vector<Action> path;
  std::vector<AsyncState> states;
  std::unordered_set<AsyncState, StateHash> seen;
  bool stop = false;
  std::vector<std::vector<bool>> live;  // filled when dead variables are merged

  AsyncState canonical(const AsyncState& s) const {
    AsyncState c = s;
    for (auto& ps : c.procs) {
      const auto& row = live[static_cast<std::size_t>(ps.pc)];
      for (std::size_t j = 0; j < ps.vars.size(); ++j)
        if (!row[j]) ps.vars[j] = Value::none();
    }
    return c;
  }

  bool revisit(const AsyncState& s) {
    return !seen.insert(live.empty() ? s : canonical(s)).second;
  }

  void take(const Action& a) {
    AsyncState next = m.apply(states.back(), a);
    path.push_back(a);
    states.push_back(std::move(next));
    if (++st.transitions > opt.budget)
      throw BudgetExceeded("exploration budget of " + std::to_string(opt.budget) +
                           " transitions exhausted");
    if (!v.on_transition(path, states, states[states.size() - 2], a, states.back())) stop = true;
  }

  void undo(std::size_t mark) {
    path.resize(mark);
    states.resize(mark + 1);
  }

  std::vector<Action> reduced_choices(const AsyncState& s) const {
    const int n = m.config().n;
    for (int p = 0; p < n; ++p) {
      auto t = m.timeout_choices(s, p, true);
      if (!t.empty()) return t;
    }
    std::vector<Action> out;
    for (int p = 0; p < n; ++p)
      for (auto& a : m.recv_choices(s, p, true)) out.push_back(std::move(a));
    for (auto& a : m.enabled_actions(s))
      if (a.kind == Action::Kind::Duplicate || a.kind == Action::Kind::Crash)
        out.push_back(std::move(a));
    return out;
  }

  void run(const std::vector<Action>& sleep = {}) {
    const std::size_t mark = path.size();
    if (opt.reduce) {
      // Local steps commute with every other process, so run them eagerly.
      for (bool moved = true; moved && !stop && path.size() < m.config().max_steps;) {
        moved = false;
        for (int p = 0; p < m.config().n; ++p) {
          if (auto a = m.local_action(states.back(), p)) {
            take(*a);
            moved = true;
            break;
          }
        }
      }
    }
    if (stop) return undo(mark);
    std::vector<Action> choices;
    if (path.size() < m.config().max_steps)
      choices = opt.reduce ? reduced_choices(states.back()) : m.enabled_actions(states.back());
    if (choices.empty()) {
      ++st.executions;
      if (!v.on_execution(path, states)) stop = true;
    } else if (opt.memo && revisit(states.back())) {
      ++st.pruned;
    } else {
      std::vector<Action> done;
      for (const auto& c : choices) {
        if (opt.sleep && std::find(sleep.begin(), sleep.end(), c) != sleep.end()) {
          ++st.pruned;
          continue;
        }
        std::vector<Action> child;
        if (opt.sleep && !is_env(c)) {
          for (const std::vector<Action>* src : {&sleep, const_cast<const std::vector<Action>*>(&done)})
            for (const auto& x : *src)
              if (x.process != c.process && !is_env(x)) child.push_back(x);
        }
        const std::size_t here = path.size();
        take(c);
        if (!stop) run(child);
        undo(here);
        if (stop) break;
        done.push_back(c);
      }
    }
    undo(mark);
  }
};

struct Collector : AsyncVisitor {
  const AsyncMachine& m;
  std::vector<Execution> out;
  explicit Collector(const AsyncMachine& mm) : m(mm) {}

  bool on_execution(const std::vector<Action>& path, const std::vector<AsyncState>& states) override {
    Execution ex;
    ex.init = states.front();
    ex.actions = path;
    ex.states.assign(states.begin() + 1, states.end());
    AsyncState cur = ex.init;
    for (std::size_t i = 0; i < path.size(); ++i) {
      std::size_t mark = ex.observables.size();
      cur = m.apply(cur, path[i], &ex.observables);
      stamp(ex.observables, mark, i);
    }
    out.push_back(std::move(ex));
    return true;
  }
};

}  // namespace

EnumStats enumerate_async(const AsyncMachine& m, AsyncVisitor& v, const EnumOptions& opt) {
  Dfs d{m, v, opt, {}, {}, {m.init()}, {}, false, {}};
  if (opt.memo && opt.dead_vars) {
    d.live = live_variables(m.program());
    for (const auto& name : opt.keep)
      if (int j = m.decls().var_index(name); j >= 0)
        for (auto& row : d.live) row[static_cast<std::size_t>(j)] = true;
  }
  d.run();
  return d.st;
}

std::vector<Execution> enumerate_executions(const AsyncMachine& m, const EnumOptions& opt) {
  Collector c(m);
  enumerate_async(m, c, opt);
  return std::move(c.out);
}

}  // namespace hoc
