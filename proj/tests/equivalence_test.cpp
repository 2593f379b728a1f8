#include <gtest/gtest.h>

#include "hoc/equivalence.hpp"
#include "hoc/rewriter.hpp"
#include "support.hpp"

using namespace hoc;

namespace {

std::vector<Value> row(std::initializer_list<int> xs) {
  std::vector<Value> out;
  for (int x : xs) out.push_back(Value::integer(x));
  return out;
}

// Replaces every If whose condition calls `fn` by its then-branch.
void drop_guards(Stmt& s, const std::string& fn) {
  for (auto& c : s.body) drop_guards(c, fn);
  if (s.kind == Stmt::Kind::If && mentions_call(*s.exprs[0], fn)) {
    Stmt then_s = s.body[0];
    s = then_s;
  }
}

struct LeaderElection {
  Protocol proto = test::corpus_protocol("leader-election");
  TagAnnotation tags = test::corpus_tags("leader-election");
  Program prog = lower(proto);
  CompHOProtocol compho = make_compho(proto, tags).compho;

  AsyncMachine machine(int n, int iters) const {
    AsyncConfig cfg;
    cfg.n = n;
    cfg.max_iterations = iters;
    return AsyncMachine(prog, cfg);
  }
};

}  // namespace

TEST(Equivalence, StutteringIsIgnored) {
  Projection a{row({1}), row({1}), row({2}), row({2}), row({3})};
  Projection b{row({1}), row({2}), row({3})};
  EXPECT_TRUE(indistinguishable(a, b));
  EXPECT_TRUE(indistinguishable(b, a));
  EXPECT_TRUE(indistinguishable(a, a));
  Projection c{row({1}), row({3})};
  EXPECT_FALSE(indistinguishable(a, c));
  EXPECT_FALSE(indistinguishable(c, b));
}

TEST(Equivalence, PrefixMatching) {
  Projection shorter{row({1}), row({2})};
  Projection longer{row({1}), row({2}), row({3})};
  EXPECT_FALSE(indistinguishable(shorter, longer));
  EXPECT_TRUE(indistinguishable(shorter, longer, true));
  EXPECT_FALSE(indistinguishable(longer, shorter, true));
}

TEST(Equivalence, RoundIndex) {
  for (std::int64_t base : {0, 1})
    for (std::int64_t ph = base; ph < base + 4; ++ph)
      for (int r = 0; r < 3; ++r) EXPECT_EQ(round_index(ph, r, base, 3), (ph - base) * 3 + r);
}

TEST(Equivalence, ObservableVariables) {
  LeaderElection le;
  EXPECT_EQ(observable_vars(le.proto, le.tags),
            (std::vector<std::string>{"leader", "log_ballot", "log_leader"}));
}

TEST(Equivalence, AgreementOnHandBuiltStates) {
  LeaderElection le;
  ComphoMachine m(le.compho, ComphoConfig{.n = 3, .coord = {}, .inputs = {}});
  ComphoState s = m.start();
  int idx = le.compho.decls.var_index("log_leader");
  auto set_log = [&](int p, Value::Entries e) {
    s.procs[static_cast<std::size_t>(p)].frames.front().vars[static_cast<std::size_t>(idx)] = Value::map(e);
  };
  auto prop = agreement_on("log_leader");
  EXPECT_FALSE(prop(m, s).has_value());
  set_log(0, {{Value::integer(1), Value::integer(0)}});
  set_log(1, {{Value::integer(2), Value::integer(1)}});
  EXPECT_FALSE(prop(m, s).has_value());  // different ballots
  set_log(2, {{Value::integer(1), Value::integer(2)}});
  EXPECT_TRUE(prop(m, s).has_value());
}

TEST(Equivalence, LeaderElectionReduces) {
  LeaderElection le;
  AsyncMachine m = le.machine(2, 1);
  ReductionReport r = check_reduction(m, le.tags, le.compho);
  EXPECT_TRUE(r.pass) << r.failure;
  EXPECT_FALSE(r.budget_exceeded);
  EXPECT_GT(r.executions, 0u);
}

TEST(Equivalence, MutatedRewriteDoesNotReduce) {
  LeaderElection le;
  CompHOProtocol bad = le.compho;
  drop_guards(bad.rounds[1].update, "all_same");
  AsyncMachine m = le.machine(2, 1);
  ReductionReport r = check_reduction(m, le.tags, bad);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.failure.empty());
  EXPECT_FALSE(r.witness.empty());
}

TEST(Equivalence, DerivedHeardOfFromADeliveryRun) {
  LeaderElection le;
  AsyncMachine m = le.machine(2, 1);
  // Deliver everything, never take a timeout early.
  Scheduler sched = [](const AsyncState&, const std::vector<Action>& en) {
    for (std::size_t i = 0; i < en.size(); ++i)
      if (en[i].kind == Action::Kind::Recv && en[i].msg) return i;
    for (std::size_t i = 0; i < en.size(); ++i)
      if (en[i].kind != Action::Kind::Drop && en[i].kind != Action::Kind::Recv) return i;
    return std::size_t{0};
  };
  Execution e = run_async(m, sched, 1000);
  HOAssignment ho = derive_ho(m, le.tags, le.compho, e);
  EXPECT_EQ(ho.get(0, 0, 2), std::set<int>{0});
  EXPECT_EQ(ho.get(0, 1, 2), std::set<int>{0});
  ReductionReport r = match_execution(m, le.tags, le.compho, e);
  EXPECT_TRUE(r.pass) << r.failure;
}

TEST(Equivalence, SwapTheoremHoldsForLeaderElection) {
  LeaderElection le;
  AsyncMachine m = le.machine(2, 1);
  SwapReport r = check_swap_theorem(m, le.tags);
  EXPECT_TRUE(r.pass) << r.failure;
  EXPECT_GT(r.swaps, 0u);
}

TEST(Equivalence, SwapTheoremFailsForMistaggedSend) {
  // The coordinator stamps its proposal with the previous ballot, so a slower
  // process can consume it in a round that precedes the send.
  std::string src = read_file(test::corpus_path("leader-election/protocol.apl"));
  std::string from = "send Msg(ballot, label, me()) to *;";
  auto at = src.find(from);
  ASSERT_NE(at, std::string::npos);
  src.replace(at, from.size(), "send Msg(ballot - 1, label, me()) to *;");
  Protocol p = parse_protocol(src);
  Program prog = lower(p);
  AsyncConfig cfg;
  cfg.n = 2;
  cfg.max_iterations = 2;
  AsyncMachine m(prog, cfg);
  TagAnnotation a = test::corpus_tags("leader-election");
  TagVerdict v = check_sync_tag(m, a);
  ASSERT_FALSE(v.pass);
  EXPECT_EQ(v.violations.front().condition, Violation::Condition::II);
  SwapReport r = check_swap_theorem(m, a);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.witness.empty());
}
