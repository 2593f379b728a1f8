#include "hoc/equivalence.hpp"

#include <algorithm>
#include <unordered_set>

namespace hoc {

namespace {

const std::pair<Value, Value> kNoTag{};

std::pair<Value, Value> main_pair(const TagValue& t) {
  if (t.size() < 2) return kNoTag;
  return {t[0], t[1]};
}

TagValue proc_tag(const AsyncMachine& m, const TagAnnotation& a, const ProcState& ps) {
  return eval_state_tag(a, m.decls(), ps.vars, m.instr_at(ps).scope);
}

// Mailbox variable filled by each reception loop.
std::map<int, std::string> reception_mailboxes(const AsyncMachine& m) {
  std::map<int, std::string> out;
  for (const Instr& in : m.program().code) {
    if (in.reception < 0 || in.op != Instr::Op::Assign || out.count(in.reception)) continue;
    for (const auto& t : in.stmt->targets) {
      const VarDecl* v = m.decls().var(t.var);
      if (v && v->type.kind == TypeRef::Kind::Mbox) out[in.reception] = t.var;
    }
  }
  return out;
}

std::vector<Value> frame_vars(const ComphoState& s, int p) {
  return s.procs[static_cast<std::size_t>(p)].frames.front().vars;
}

}  // namespace

std::vector<std::string> observable_vars(const Protocol& p, const TagAnnotation& a) {
  auto msg = p.message_class_vars();
  auto tags = a.tag_vars();
  std::vector<std::string> w;
  for (const auto& v : p.decls.vars)
    if (!v.aux && !msg.count(v.name) && !tags.count(v.name)) w.push_back(v.name);
  return w;
}

std::vector<Value> restrict_to(const Decls& d, const std::vector<Value>& vars, const std::vector<std::string>& w) {
  std::vector<Value> out;
  out.reserve(w.size());
  for (const auto& name : w) {
    int i = d.var_index(name);
    out.push_back(i < 0 ? Value::none() : vars[static_cast<std::size_t>(i)]);
  }
  return out;
}

namespace {

void push_sample(Projection& pr, std::vector<Value> v) {
  if (pr.empty() || pr.back() != v) pr.push_back(std::move(v));
}

Projection destutter(const Projection& x) {
  Projection r;
  for (const auto& v : x) push_sample(r, v);
  return r;
}

}  // namespace

std::vector<Projection> project_async(const AsyncMachine& m, const TagAnnotation& a,
                                      const std::vector<AsyncState>& states, const std::vector<std::string>& w) {
  const int n = m.config().n;
  std::vector<Projection> out(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    auto& pr = out[static_cast<std::size_t>(p)];
    for (std::size_t i = 0; i + 1 < states.size(); ++i) {
      const auto& x = states[i].procs[static_cast<std::size_t>(p)];
      const auto& y = states[i + 1].procs[static_cast<std::size_t>(p)];
      if (x == y) continue;
      if (proc_tag(m, a, x) != proc_tag(m, a, y)) push_sample(pr, restrict_to(m.decls(), x.vars, w));
    }
    push_sample(pr, restrict_to(m.decls(), states.back().procs[static_cast<std::size_t>(p)].vars, w));
  }
  return out;
}

std::vector<Projection> project_compho(const ComphoExecution& e, const std::vector<std::string>& w) {
  const std::size_t n = e.init.procs.size();
  std::vector<Projection> out(n);
  for (std::size_t p = 0; p < n; ++p) {
    const Decls& d = e.init.procs[p].frames.front().proto->decls;
    push_sample(out[p], restrict_to(d, frame_vars(e.init, static_cast<int>(p)), w));
    for (const auto& s : e.states) push_sample(out[p], restrict_to(d, frame_vars(s, static_cast<int>(p)), w));
  }
  return out;
}

bool indistinguishable(const Projection& a, const Projection& b, bool prefix) {
  Projection x = destutter(a), y = destutter(b);
  if (prefix) return x.size() <= y.size() && std::equal(x.begin(), x.end(), y.begin());
  return x == y;
}

std::int64_t round_index(std::int64_t phase, int round, std::int64_t phase_base, std::size_t rounds) {
  return (phase - phase_base) * static_cast<std::int64_t>(rounds) + round;
}

std::vector<Consumed> consumed_rounds(const AsyncMachine& m, const TagAnnotation& a,
                                      const std::vector<Action>& path, const std::vector<AsyncState>& states) {
  auto boxes = reception_mailboxes(m);
  std::vector<Consumed> out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Action& act = path[i];
    if (act.process < 0 || act.kind == Action::Kind::Drop || act.kind == Action::Kind::Duplicate) continue;
    const ProcState& ps = states[i].procs[static_cast<std::size_t>(act.process)];
    if (ps.status != ProcState::Status::Running) continue;
    const Instr& in = m.instr_at(ps);
    if (!in.leaves_reception) continue;
    Consumed c;
    c.action = i;
    c.process = act.process;
    c.tag = proc_tag(m, a, ps);
    auto it = boxes.find(in.reception);
    if (it == boxes.end()) {
      out.push_back(std::move(c));
      continue;
    }
    const Value& box = ps.vars[static_cast<std::size_t>(m.decls().var_index(it->second))];
    std::vector<std::pair<int, TagValue>> tagged;
    for (const auto& [k, v] : box.entries()) {
      TagValue t = eval_msg_tag(a, v);
      // slots the message leaves unmapped follow the receiver
      for (std::size_t j = 0; j < t.size() && j < c.tag.size(); ++j)
        if (t[j].is_none()) t[j] = c.tag[j];
      if (main_pair(t) > main_pair(c.tag)) c.tag = t;
      tagged.emplace_back(static_cast<int>(k.as_int()), std::move(t));
    }
    for (const auto& [q, t] : tagged)
      if (main_pair(t) == main_pair(c.tag)) c.senders.insert(q);
    out.push_back(std::move(c));
  }
  return out;
}

HOAssignment derive_ho(const AsyncMachine& m, const TagAnnotation& a, const CompHOProtocol& c,
                       const std::vector<Action>& path, const std::vector<AsyncState>& states,
                       std::size_t* rounds_needed) {
  HOAssignment ho;
  ho.default_full = false;
  const std::int64_t base = c.phase_base ? c.phase_base->ival : 1;
  const std::size_t R = c.rounds.size();
  std::int64_t max_phase = base - 1;
  for (const auto& k : consumed_rounds(m, a, path, states)) {
    auto [ph, rd] = main_pair(k.tag);
    if (ph.is_none() || rd.is_none()) continue;
    std::int64_t r = round_index(ph.as_int(), rd.ordinal(), base, R);
    if (r < 0) continue;
    // a process that exits the same round twice keeps its first mailbox
    if (!ho.sets.count(r) || !ho.sets[r].count(k.process)) ho.set(r, k.process, k.senders);
  }
  for (const auto& ps : states.back().procs) {
    auto [ph, rd] = main_pair(proc_tag(m, a, ps));
    if (!ph.is_none()) max_phase = std::max(max_phase, ph.as_int());
  }
  if (rounds_needed) *rounds_needed = static_cast<std::size_t>(std::max<std::int64_t>(0, max_phase - base + 1)) * R;
  return ho;
}

ReductionReport match_execution(const AsyncMachine& m, const TagAnnotation& a, const CompHOProtocol& c,
                                const std::vector<Action>& path, const std::vector<AsyncState>& states) {
  ReductionReport rep;
  rep.executions = 1;
  const auto w = observable_vars(*m.program().protocol, a);
  std::size_t rounds = 0;
  rep.ho = derive_ho(m, a, c, path, states, &rounds);
  ComphoConfig cc{m.config().n, m.config().coord, m.config().inputs};
  ComphoMachine cm(c, cc);
  ComphoExecution ce;
  try {
    ce = run_compho(cm, rep.ho, rounds);
  } catch (const EvalError& e) {
    rep.pass = false;
    rep.failure = std::string("round execution got stuck: ") + e.what();
    rep.witness = path;
    return rep;
  }
  auto pa = project_async(m, a, states, w);
  auto pc = project_compho(ce, w);
  for (std::size_t p = 0; p < pa.size(); ++p) {
    const auto st = states.back().procs[p].status;
    const bool exact = st == ProcState::Status::Halted || st == ProcState::Status::Bounded;
    if (!indistinguishable(pa[p], pc[p], !exact)) {
      rep.pass = false;
      rep.failure = "process " + std::to_string(p) + " differs from its round execution";
      rep.witness = path;
      return rep;
    }
  }
  // observable events must agree in content and order per process
  const auto& obs_c = ce.observables;
  for (int p = 0; p < m.config().n; ++p) {
    std::vector<std::vector<Value>> x, y;
    for (const auto& o : obs_c)
      if (o.process == p) y.push_back(o.values);
    for (std::size_t i = 0; i < path.size(); ++i) {
      const Action& act = path[i];
      if (act.process != p || (act.kind != Action::Kind::Out && act.kind != Action::Kind::In)) continue;
      std::vector<Observable> one;
      m.apply(states[i], act, &one);
      for (auto& o : one) x.push_back(o.values);
    }
    const auto st = states.back().procs[static_cast<std::size_t>(p)].status;
    const bool exact = st == ProcState::Status::Halted || st == ProcState::Status::Bounded;
    bool ok = exact ? x == y : (x.size() <= y.size() && std::equal(x.begin(), x.end(), y.begin()));
    if (!ok) {
      rep.pass = false;
      rep.failure = "process " + std::to_string(p) + " emits different observable events";
      rep.witness = path;
      return rep;
    }
  }
  return rep;
}

namespace {

struct ReductionVisitor : AsyncVisitor {
  const AsyncMachine& m;
  const TagAnnotation& a;
  const CompHOProtocol& c;
  ReductionReport rep;
  ReductionVisitor(const AsyncMachine& m_, const TagAnnotation& a_, const CompHOProtocol& c_)
      : m(m_), a(a_), c(c_) {}
  bool on_execution(const std::vector<Action>& path, const std::vector<AsyncState>& states) override {
    ++rep.executions;
    auto r = match_execution(m, a, c, path, states);
    if (!r.pass) {
      rep.pass = false;
      rep.failure = r.failure;
      rep.witness = r.witness;
      rep.ho = r.ho;
      return false;
    }
    return true;
  }
};

}  // namespace

ReductionReport check_reduction(const AsyncMachine& m, const TagAnnotation& a, const CompHOProtocol& c,
                                const EnumOptions& opt) {
  ReductionVisitor v(m, a, c);
  EnumOptions o = opt;
  o.memo = false;  // matching needs whole executions
  o.sleep = true;  // per-process projections ignore the order of independent receives
  try {
    enumerate_async(m, v, o);
  } catch (const BudgetExceeded&) {
    v.rep.budget_exceeded = true;
    v.rep.pass = false;
    if (v.rep.failure.empty()) v.rep.failure = "exploration budget exhausted";
  }
  return v.rep;
}

}  // namespace hoc

namespace hoc {

namespace {

using SortKey = std::pair<std::pair<Value, Value>, int>;

std::vector<std::optional<SortKey>> sort_keys(const AsyncMachine& m, const TagAnnotation& a,
                                              const std::vector<Action>& path,
                                              const std::vector<AsyncState>& states) {
  std::vector<std::optional<SortKey>> keys(path.size());
  std::vector<bool> in_reception(path.size(), false);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Action& act = path[i];
    if (act.process < 0 || act.kind == Action::Kind::Drop || act.kind == Action::Kind::Duplicate) continue;
    const auto p = static_cast<std::size_t>(act.process);
    const ProcState& before = states[i].procs[p];
    const ProcState& after = states[i + 1].procs[p];
    auto tb = main_pair(proc_tag(m, a, before));
    auto ta = main_pair(proc_tag(m, a, after));
    if (act.kind == Action::Kind::Send) {
      keys[i] = SortKey{tb, 0};
    } else {
      in_reception[i] = before.status == ProcState::Status::Running && m.instr_at(before).reception >= 0;
      keys[i] = SortKey{std::max(tb, ta), in_reception[i] ? 1 : 2};
    }
  }
  // a whole reception belongs to the round it consumed
  for (const auto& c : consumed_rounds(m, a, path, states)) {
    auto t = main_pair(c.tag);
    for (std::size_t j = c.action + 1; j-- > 0;) {
      if (path[j].process != c.process) continue;
      if (!in_reception[j]) break;
      keys[j] = SortKey{t, 1};
    }
  }
  // a receive the filter discards still cannot precede its send
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i].kind != Action::Kind::Recv || !path[i].msg || !keys[i]) continue;
    TagValue t = eval_msg_tag(a, path[i].msg->payload);
    TagValue own = proc_tag(m, a, states[i].procs[static_cast<std::size_t>(path[i].process)]);
    for (std::size_t j = 0; j < t.size() && j < own.size(); ++j)
      if (t[j].is_none()) t[j] = own[j];
    keys[i]->first = std::max(keys[i]->first, main_pair(t));
  }
  return keys;
}

}  // namespace

SwapReport sort_execution(const AsyncMachine& m, const TagAnnotation& a, const std::vector<Action>& path,
                          const std::vector<AsyncState>& states) {
  SwapReport rep;
  rep.executions = 1;
  auto keys = sort_keys(m, a, path, states);
  std::vector<Action> acts = path;
  std::vector<AsyncState> st = states;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i + 1 < acts.size(); ++i) {
      if (!keys[i] || !keys[i + 1] || acts[i].process == acts[i + 1].process) continue;
      if (!(*keys[i + 1] < *keys[i])) continue;
      AsyncState mid, end;
      bool ok = true;
      try {
        mid = m.step(st[i], acts[i + 1]);
        end = m.step(mid, acts[i]);
      } catch (const ActionNotEnabled&) {
        ok = false;
      }
      if (!ok || end != st[i + 2]) {
        rep.pass = false;
        rep.failure = "actions '" + acts[i].to_string() + "' and '" + acts[i + 1].to_string() + "' do not commute";
        rep.witness = acts;
        rep.pair_index = i;
        return rep;
      }
      std::swap(acts[i], acts[i + 1]);
      std::swap(keys[i], keys[i + 1]);
      st[i + 1] = std::move(mid);
      ++rep.swaps;
      changed = true;
    }
  }
  std::vector<std::string> all;
  for (const auto& v : m.decls().vars) all.push_back(v.name);
  auto x = project_async(m, a, states, all);
  auto y = project_async(m, a, st, all);
  for (std::size_t p = 0; p < x.size(); ++p) {
    if (!indistinguishable(x[p], y[p])) {
      rep.pass = false;
      rep.failure = "sorted execution is distinguishable for process " + std::to_string(p);
      rep.witness = path;
      return rep;
    }
  }
  return rep;
}

namespace {

struct SwapVisitor : AsyncVisitor {
  const AsyncMachine& m;
  const TagAnnotation& a;
  SwapReport rep;
  SwapVisitor(const AsyncMachine& m_, const TagAnnotation& a_) : m(m_), a(a_) {}
  bool on_execution(const std::vector<Action>& path, const std::vector<AsyncState>& states) override {
    ++rep.executions;
    auto r = sort_execution(m, a, path, states);
    rep.swaps += r.swaps;
    if (!r.pass) {
      rep.pass = false;
      rep.failure = r.failure;
      rep.witness = r.witness;
      rep.pair_index = r.pair_index;
      return false;
    }
    return true;
  }
};

struct StateHash {
  std::size_t operator()(const ComphoState& s) const { return s.hash(); }
};

struct AgreementDfs {
  const ComphoMachine& m;
  std::size_t rounds;
  const ComphoProperty& prop;
  std::size_t budget;
  AgreementReport rep;
  std::vector<std::vector<std::set<int>>> path;
  std::unordered_set<ComphoState, StateHash> seen;

  bool go(const ComphoState& s, std::size_t depth) {
    if (auto v = prop(m, s)) {
      rep.pass = false;
      rep.failure = *v;
      rep.witness = path;
      return false;
    }
    if (depth == rounds || m.finished(s)) return true;
    if (!seen.insert(s).second) return true;
    if (++rep.states > budget) throw BudgetExceeded("agreement search budget exhausted");
    ComphoState t = m.send_step(s);
    const int n = m.config().n;
    std::vector<std::vector<std::set<int>>> choices(static_cast<std::size_t>(n), {std::set<int>{}});
    for (int p : m.active(t)) {
      std::set<int> senders;
      for (const auto& msg : t.pool)
        if (msg.receiver == p) senders.insert(msg.sender);
      std::vector<int> sv(senders.begin(), senders.end());
      auto& cs = choices[static_cast<std::size_t>(p)];
      cs.clear();
      for (unsigned mask = 0; mask < (1u << sv.size()); ++mask) {
        std::set<int> ho;
        for (std::size_t k = 0; k < sv.size(); ++k)
          if (mask & (1u << k)) ho.insert(sv[k]);
        cs.push_back(std::move(ho));
      }
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      std::vector<std::set<int>> ho;
      for (int p = 0; p < n; ++p) ho.push_back(choices[static_cast<std::size_t>(p)][idx[static_cast<std::size_t>(p)]]);
      ComphoState u = m.update_step(t, ho);
      path.push_back(ho);
      if (!go(u, depth + 1)) return false;
      path.pop_back();
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == choices[k].size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
    return true;
  }
};

}  // namespace

SwapReport check_swap_theorem(const AsyncMachine& m, const TagAnnotation& a, const EnumOptions& opt) {
  SwapVisitor v(m, a);
  EnumOptions o = opt;
  o.memo = false;
  try {
    enumerate_async(m, v, o);
  } catch (const BudgetExceeded&) {
    v.rep.budget_exceeded = true;
    v.rep.pass = false;
    if (v.rep.failure.empty()) v.rep.failure = "exploration budget exhausted";
  }
  return v.rep;
}

ComphoProperty agreement_on(const std::string& var) {
  return [var](const ComphoMachine& m, const ComphoState& s) -> std::optional<std::string> {
    const int n = m.config().n;
    int idx = m.protocol().decls.var_index(var);
    if (idx < 0) return "no variable '" + var + "'";
    for (int p = 0; p < n; ++p) {
      const Value& a = s.procs[static_cast<std::size_t>(p)].frames.front().vars[static_cast<std::size_t>(idx)];
      for (int q = p + 1; q < n; ++q) {
        const Value& b = s.procs[static_cast<std::size_t>(q)].frames.front().vars[static_cast<std::size_t>(idx)];
        for (const auto& [k, v] : a.entries()) {
          Value w = b.get(k);
          if (!w.is_none() && w != v)
            return "processes " + std::to_string(p) + " and " + std::to_string(q) + " disagree on " + var + "[" +
                   k.to_string() + "]: " + v.to_string() + " vs " + w.to_string();
        }
      }
    }
    return std::nullopt;
  };
}

AgreementReport check_agreement(const ComphoMachine& m, std::size_t rounds, const ComphoProperty& prop,
                                std::size_t budget) {
  AgreementDfs d{m, rounds, prop, budget, {}, {}, {}};
  try {
    d.go(m.start(), 0);
  } catch (const BudgetExceeded&) {
    d.rep.budget_exceeded = true;
    d.rep.pass = false;
    if (d.rep.failure.empty()) d.rep.failure = "search budget exhausted";
  }
  return d.rep;
}

namespace {

std::vector<AsyncState> with_init(const Execution& e) {
  std::vector<AsyncState> out;
  out.reserve(e.states.size() + 1);
  out.push_back(e.init);
  out.insert(out.end(), e.states.begin(), e.states.end());
  return out;
}

}  // namespace

HOAssignment derive_ho(const AsyncMachine& m, const TagAnnotation& a, const CompHOProtocol& c,
                       const Execution& e) {
  return derive_ho(m, a, c, e.actions, with_init(e));
}

ReductionReport match_execution(const AsyncMachine& m, const TagAnnotation& a, const CompHOProtocol& c,
                                const Execution& e) {
  return match_execution(m, a, c, e.actions, with_init(e));
}

}  // namespace hoc
