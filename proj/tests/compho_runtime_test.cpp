#include <gtest/gtest.h>

#include <cmath>

#include "hoc/compho_runtime.hpp"
#include "hoc/rewriter.hpp"
#include "support.hpp"

using namespace hoc;

namespace {

// Assignments over `rounds` rounds: one subset of n processes per (round, process).
std::size_t oracle_ho_count(int n, std::size_t rounds) {
  double subsets = std::pow(2.0, n);
  return static_cast<std::size_t>(std::pow(subsets, static_cast<double>(n) * static_cast<double>(rounds)));
}

CompHOProtocol leader_election_compho() {
  Protocol p = test::corpus_protocol("leader-election");
  return make_compho(p, test::corpus_tags("leader-election")).compho;
}

Value var(const CompHOProtocol& c, const ComphoState& s, int p, const std::string& name) {
  int i = c.decls.var_index(name);
  return s.procs[static_cast<std::size_t>(p)].frames.front().vars[static_cast<std::size_t>(i)];
}

}  // namespace

TEST(ComphoRuntime, StartsAtRoundZeroInSendStage) {
  CompHOProtocol c = leader_election_compho();
  ComphoMachine m(c, ComphoConfig{.n = 3, .coord = {}, .inputs = {}});
  ComphoState s = m.start();
  EXPECT_EQ(s.r, 0);
  EXPECT_EQ(s.su, ComphoState::SU::Snd);
  EXPECT_EQ(s.procs.size(), 3u);
  EXPECT_TRUE(s.pool.empty());
  EXPECT_EQ(m.current_round(s).name, "NewBallot");
  EXPECT_EQ(m.phase_of(s, 0), 1);
}

TEST(ComphoRuntime, SendStepOnlyFillsThePool) {
  CompHOProtocol c = leader_election_compho();
  ComphoMachine m(c, ComphoConfig{.n = 3, .coord = {}, .inputs = {}});
  ComphoState s = m.start();
  ComphoState t = m.send_step(s);
  EXPECT_EQ(t.procs, s.procs);
  EXPECT_EQ(t.r, s.r);
  EXPECT_EQ(t.su, ComphoState::SU::Updt);
  EXPECT_EQ(t.pool.size(), 3u);  // only the coordinator broadcasts
  for (const auto& msg : t.pool) EXPECT_EQ(msg.sender, 0);
}

TEST(ComphoRuntime, EmptyHeardOfDeliversNothing) {
  CompHOProtocol c = leader_election_compho();
  ComphoMachine m(c, ComphoConfig{.n = 3, .coord = {}, .inputs = {}});
  HOAssignment ho;
  ho.default_full = false;
  ComphoExecution e = run_compho(m, ho, 4);
  ASSERT_EQ(e.states.size(), 4u);
  EXPECT_TRUE(e.observables.empty());
  for (int p = 0; p < 3; ++p) {
    EXPECT_EQ(var(c, e.states.back(), p, "mbox").size(), 0u);
    EXPECT_EQ(var(c, e.states.back(), p, "log_leader").size(), 0u);
  }
  EXPECT_EQ(e.states.back().r, 4);
}

TEST(ComphoRuntime, FullHeardOfElectsTheCoordinator) {
  CompHOProtocol c = leader_election_compho();
  ComphoMachine m(c, ComphoConfig{.n = 3, .coord = {}, .inputs = {}});
  ComphoExecution e = run_compho(m, HOAssignment{}, 2);
  ASSERT_EQ(e.observables.size(), 3u);
  std::set<int> who;
  for (const auto& o : e.observables) {
    EXPECT_FALSE(o.input);
    EXPECT_EQ(o.values, (std::vector<Value>{Value::integer(1), Value::integer(0)}));
    who.insert(o.process);
  }
  EXPECT_EQ(who, (std::set<int>{0, 1, 2}));
  for (int p = 0; p < 3; ++p)
    EXPECT_EQ(var(c, e.states.back(), p, "log_leader").get(Value::integer(1)), Value::integer(0));
}

TEST(ComphoRuntime, HeardOfSetsFilterTheMailbox) {
  CompHOProtocol c = leader_election_compho();
  ComphoMachine m(c, ComphoConfig{.n = 3, .coord = {}, .inputs = {}});
  ComphoState s = m.send_step(m.start());
  EXPECT_EQ(m.mailbox(s, 2, {0, 1}).size(), 1u);
  EXPECT_EQ(m.mailbox(s, 2, {1, 2}).size(), 0u);
}

TEST(ComphoRuntime, EnumeratedAssignmentsMatchOracle) {
  auto count = [](int n, std::size_t rounds) {
    return enumerate_ho(n, rounds, [](const HOAssignment&) { return true; });
  };
  EXPECT_EQ(count(1, 1), oracle_ho_count(1, 1));
  EXPECT_EQ(count(2, 1), oracle_ho_count(2, 1));
  EXPECT_EQ(count(1, 6), oracle_ho_count(1, 6));
  EXPECT_EQ(count(2, 1), 16u);

  // Only sets containing the receiver: half the subsets per entry.
  HOFilter self = [](std::int64_t, int p, const std::set<int>& ho) { return ho.count(p) > 0; };
  EXPECT_EQ(enumerate_ho(2, 1, [](const HOAssignment&) { return true; }, self), 4u);
  EXPECT_THROW(enumerate_ho(2, 2, [](const HOAssignment&) { return true; }, nullptr, 10), BudgetExceeded);
}

TEST(ComphoRuntime, AssignmentTextRoundTrips) {
  HOAssignment h = HOAssignment::parse("# comment\ndefault: empty\n0 1: {0,2}\n3 0: {}\n");
  EXPECT_FALSE(h.default_full);
  EXPECT_EQ(h.get(0, 1, 3), (std::set<int>{0, 2}));
  EXPECT_EQ(h.get(3, 0, 3), std::set<int>{});
  EXPECT_EQ(h.get(5, 2, 3), std::set<int>{});
  HOAssignment back = HOAssignment::parse(h.to_string());
  EXPECT_EQ(back.sets, h.sets);
  EXPECT_EQ(back.default_full, h.default_full);
}
