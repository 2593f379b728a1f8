#include <gtest/gtest.h>

#include <functional>
#include <map>

#include "support.hpp"

using namespace hoc;

namespace {

const char* kSendRecv = R"(
protocol SendRecv {
  msg Ping { v: int }
  var m: Ping;
  var q: pid;
  send Ping(me()) to *;
  m, q = recv();
}
)";

const char* kTwoRecv = R"(
protocol TwoRecv {
  msg Ping { v: int }
  var m: Ping;
  var k: Ping;
  var q: pid;
  if me() == 0 { send Ping(7) to 1; }
  m, q = recv();
  k, q = recv();
}
)";

// Counts maximal interleavings of "send to all, then one receive" per
// process without loss. A receive takes any pending message addressed to
// the receiver, or nothing.
std::size_t oracle_send_recv(int n) {
  struct S {
    std::vector<int> pc;
    std::multiset<std::pair<int, int>> pool;  // (sender, receiver)
  };
  std::function<std::size_t(const S&)> go = [&](const S& s) -> std::size_t {
    std::size_t total = 0;
    bool moved = false;
    for (int p = 0; p < n; ++p) {
      if (s.pc[p] == 0) {
        S t = s;
        t.pc[p] = 1;
        for (int r = 0; r < n; ++r) t.pool.insert({p, r});
        total += go(t);
        moved = true;
      } else if (s.pc[p] == 1) {
        std::set<std::pair<int, int>> distinct;
        for (const auto& m : s.pool)
          if (m.second == p) distinct.insert(m);
        for (const auto& m : distinct) {
          S t = s;
          t.pc[p] = 2;
          t.pool.erase(t.pool.find(m));
          total += go(t);
        }
        S t = s;
        t.pc[p] = 2;
        total += go(t);
        moved = true;
      }
    }
    return moved ? total : 1;
  };
  return go(S{std::vector<int>(static_cast<std::size_t>(n), 0), {}});
}

Action local(const AsyncMachine& m, const AsyncState& s, int p) {
  auto a = m.local_action(s, p);
  if (!a) throw std::runtime_error("no local action");
  return *a;
}

}  // namespace

TEST(AsyncRuntime, InitialState) {
  Protocol p = test::corpus_protocol("leader-election");
  Program prog = lower(p);
  AsyncConfig cfg;
  cfg.n = 3;
  AsyncMachine m(prog, cfg);
  AsyncState s = m.init();
  ASSERT_EQ(s.procs.size(), 3u);
  EXPECT_TRUE(s.pool.empty());
  int ballot = p.decls.var_index("ballot");
  for (const auto& ps : s.procs) {
    EXPECT_EQ(ps.pc, 0);
    EXPECT_EQ(ps.status, ProcState::Status::Running);
    EXPECT_EQ(ps.vars[static_cast<std::size_t>(ballot)], Value::integer(0));
  }
}

TEST(AsyncRuntime, BroadcastReachesEveryProcess) {
  Protocol p = parse_protocol(kSendRecv);
  Program prog = lower(p);
  AsyncConfig cfg;
  cfg.n = 3;
  AsyncMachine m(prog, cfg);
  AsyncState s = m.init();
  Action send = local(m, s, 1);
  EXPECT_EQ(send.kind, Action::Kind::Send);
  AsyncState t = m.step(s, send);
  EXPECT_EQ(t.pool_size(), 3u);
  std::set<int> receivers;
  for (const auto& [msg, c] : t.pool) {
    EXPECT_EQ(msg.sender, 1);
    EXPECT_EQ(c, 1);
    receivers.insert(msg.receiver);
  }
  EXPECT_EQ(receivers, (std::set<int>{0, 1, 2}));
}

TEST(AsyncRuntime, EmptyReceiveYieldsNone) {
  Protocol p = parse_protocol(kTwoRecv);
  Program prog = lower(p);
  AsyncConfig cfg;
  AsyncMachine m(prog, cfg);
  AsyncState s = m.init();
  while (auto a = m.local_action(s, 1)) s = m.step(s, *a);
  auto choices = m.recv_choices(s, 1, false);
  ASSERT_EQ(choices.size(), 1u);
  EXPECT_FALSE(choices[0].msg.has_value());
  AsyncState t = m.step(s, choices[0]);
  EXPECT_TRUE(t.procs[1].vars[static_cast<std::size_t>(p.decls.var_index("m"))].is_none());
  EXPECT_TRUE(t.procs[1].bottom);
}

TEST(AsyncRuntime, DuplicatedMessageIsReceivedTwice) {
  Protocol p = parse_protocol(kTwoRecv);
  Program prog = lower(p);
  AsyncConfig cfg;
  cfg.duplication = true;
  AsyncMachine m(prog, cfg);
  AsyncState s = m.init();
  while (auto a = m.local_action(s, 0)) s = m.step(s, *a);
  ASSERT_EQ(s.pool.size(), 1u);
  Message msg = s.pool.begin()->first;
  EXPECT_EQ(msg.receiver, 1);
  Action dup{.kind = Action::Kind::Duplicate, .process = -1, .msg = msg, .timeout = {}};
  s = m.step(s, dup);
  EXPECT_EQ(s.pool_size(), 2u);
  EXPECT_THROW(m.step(s, dup), ActionNotEnabled);  // one duplication allowed
  while (auto a = m.local_action(s, 1)) s = m.step(s, *a);
  Action recv{.kind = Action::Kind::Recv, .process = 1, .msg = msg, .timeout = {}};
  s = m.step(s, recv);
  s = m.step(s, recv);
  EXPECT_EQ(s.pool_size(), 0u);
  int k = p.decls.var_index("k");
  EXPECT_EQ(s.procs[1].vars[static_cast<std::size_t>(k)].field("v"), Value::integer(7));
}

TEST(AsyncRuntime, UnreducedEnumerationMatchesOracle) {
  Protocol p = parse_protocol(kSendRecv);
  Program prog = lower(p);
  for (int n : {1, 2}) {
    AsyncConfig cfg;
    cfg.n = n;
    cfg.loss = false;
    AsyncMachine m(prog, cfg);
    EnumOptions opt;
    opt.reduce = false;
    auto execs = enumerate_executions(m, opt);
    EXPECT_EQ(execs.size(), oracle_send_recv(n)) << "n=" << n;
  }
}

TEST(AsyncRuntime, ReducedFinalStatesAreReachableUnreduced) {
  Protocol p = parse_protocol(kSendRecv);
  Program prog = lower(p);
  AsyncConfig cfg;
  cfg.n = 2;
  cfg.loss = false;
  AsyncMachine m(prog, cfg);
  auto finals = [&](const EnumOptions& opt) {
    std::set<std::vector<std::vector<Value>>> out;
    for (const auto& e : enumerate_executions(m, opt)) {
      std::vector<std::vector<Value>> vars;
      for (const auto& ps : e.final_state().procs) vars.push_back(ps.vars);
      out.insert(vars);
    }
    return out;
  };
  EnumOptions full;
  full.reduce = false;
  EnumOptions reduced;
  reduced.reduce = true;
  auto all = finals(full);
  auto some = finals(reduced);
  EXPECT_FALSE(some.empty());
  EXPECT_LT(some.size(), all.size());  // bottom receives outside timeouts are skipped
  for (const auto& f : some) EXPECT_TRUE(all.count(f));
}

TEST(AsyncRuntime, SeededRunsAreDeterministic) {
  Protocol p = test::corpus_protocol("leader-election");
  Program prog = lower(p);
  AsyncConfig cfg;
  cfg.n = 3;
  cfg.max_iterations = 2;
  AsyncMachine m(prog, cfg);
  Execution a = run_async(m, random_scheduler(42), 500);
  Execution b = run_async(m, random_scheduler(42), 500);
  EXPECT_EQ(a.actions, b.actions);
  EXPECT_EQ(a.final_state(), b.final_state());
  Execution replay = run_async(m, a.actions);
  EXPECT_EQ(replay.final_state(), a.final_state());
}

TEST(AsyncRuntime, BudgetIsEnforced) {
  Protocol p = test::corpus_protocol("leader-election");
  Program prog = lower(p);
  AsyncConfig cfg;
  cfg.n = 3;
  AsyncMachine m(prog, cfg);
  AsyncVisitor v;
  EnumOptions opt;
  opt.budget = 100;
  EXPECT_THROW(enumerate_async(m, v, opt), BudgetExceeded);
}
