#include <gtest/gtest.h>

#include <chrono>

#include "hoc/printer.hpp"
#include "hoc/rewriter.hpp"
#include "hoc/validate.hpp"
#include "support.hpp"

using namespace hoc;

namespace {

std::vector<std::string> round_names(const CompHOProtocol& c) {
  std::vector<std::string> out;
  for (const auto& r : c.rounds) out.push_back(r.name);
  return out;
}

std::vector<const Stmt*> find_all(const Stmt& s, Stmt::Kind k) {
  std::vector<const Stmt*> out;
  visit_stmts(s, [&](const Stmt& x) {
    if (x.kind == k) out.push_back(&x);
  });
  return out;
}

// Sends below an If whose condition satisfies `guard`.
std::set<const Stmt*> guarded_sends(const Stmt& s, const std::function<bool(const Expr&)>& guard) {
  std::set<const Stmt*> out;
  for (const Stmt* i : find_all(s, Stmt::Kind::If))
    if (guard(*i->exprs[0]))
      for (const Stmt* snd : find_all(i->body[0], Stmt::Kind::Send)) out.insert(snd);
  return out;
}

bool is_coord_of_phase(const Expr& e) {
  return e.kind == Expr::Kind::Call && e.text == "is_coord" && e.args.size() == 2 &&
         e.args[0]->kind == Expr::Kind::Call && e.args[0]->text == "phase" &&
         e.args[1]->kind == Expr::Kind::Call && e.args[1]->text == "me";
}

bool is_old_flag(const Expr& e) { return e.kind == Expr::Kind::Name && e.text.rfind("old_", 0) == 0; }

}  // namespace

TEST(Rewriter, LeaderElectionHasFourReceptionLoops) {
  Protocol p = test::corpus_protocol("leader-election");
  std::vector<Diagnostic> diags;
  auto loops = find_reception_loops(p, &diags);
  EXPECT_TRUE(diags.empty());
  ASSERT_EQ(loops.size(), 4u);
  for (const auto& l : loops) {
    EXPECT_TRUE(l.has_timeout_exit);
    EXPECT_EQ(l.written_vars, std::set<std::string>{"mbox"});
    EXPECT_FALSE(l.exit_conds.empty());
  }
}

TEST(Rewriter, LoopReplacementIsIdempotent) {
  Protocol p = test::corpus_protocol("leader-election");
  Protocol once = replace_reception_loops(p);
  Protocol twice = replace_reception_loops(once);
  EXPECT_TRUE(same_stmt(once.body, twice.body));
  EXPECT_TRUE(find_all(once.body, Stmt::Kind::Recv).empty());
  EXPECT_EQ(find_all(once.body, Stmt::Kind::Havoc).size(), 4u);
  EXPECT_FALSE(mentions_call(*Expr::name("x"), "timeout"));
  for (const Stmt* i : find_all(once.body, Stmt::Kind::If)) EXPECT_FALSE(mentions_call(*i->exprs[0], "timeout"));
}

TEST(Rewriter, GoldenLeaderElection) {
  Protocol p = test::corpus_protocol("leader-election");
  auto t0 = std::chrono::steady_clock::now();
  RewriteResult r = make_compho(p, test::corpus_tags("leader-election"));
  auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_LT(elapsed, std::chrono::seconds(1));
  const CompHOProtocol& c = r.compho;
  ASSERT_EQ(round_names(c), (std::vector<std::string>{"NewBallot", "AckBallot"}));
  EXPECT_TRUE(c.subs.empty());
  EXPECT_TRUE(validate(c).empty());

  // NewBallot: only the coordinator broadcasts its own id.
  auto nb = guarded_sends(c.rounds[0].send, is_coord_of_phase);
  ASSERT_FALSE(nb.empty());
  for (const Stmt* s : nb) {
    EXPECT_EQ(s->exprs[1], nullptr);
    EXPECT_EQ(print_expr(s->exprs[0]), "Msg(phase(), NewBallot, me())");
  }
  EXPECT_EQ(find_all(c.rounds[0].send, Stmt::Kind::Send).size(), nb.size());

  // AckBallot: processes that heard exactly one proposal broadcast its leader.
  auto ack = guarded_sends(c.rounds[1].send, is_old_flag);
  ASSERT_EQ(ack.size(), 2u);  // leader and follower branches
  for (const Stmt* s : ack) EXPECT_EQ(print_expr(s->exprs[0]), "Msg(phase(), AckBallot, leader)");

  std::string update = print_stmt(c.rounds[1].update);
  EXPECT_NE(update.find("log_leader[phase()] = first(mbox).leader"), std::string::npos);
  EXPECT_EQ(r.reception_loops.size(), 4u);
  EXPECT_EQ(r.jumps.size(), 2u);
  EXPECT_FALSE(r.report.empty());
}

TEST(Rewriter, OutputReparses) {
  for (const auto& e : load_corpus()) {
    SCOPED_TRACE(e.name);
    CompHOProtocol c = make_compho(e.load(), e.load_tags()).compho;
    CompHOProtocol back = parse_compho(print(c));
    EXPECT_EQ(print(back), print(c));
  }
}

TEST(Rewriter, TwoPhaseCommitHasFourRounds) {
  Protocol p = test::corpus_protocol("two-phase-commit");
  CompHOProtocol c = make_compho(p, test::corpus_tags("two-phase-commit")).compho;
  EXPECT_EQ(c.rounds.size(), 4u);
  EXPECT_TRUE(make_compho(p, test::corpus_tags("two-phase-commit")).jumps.empty());
}

TEST(Rewriter, MultiPaxosLiftsOneSubProtocol) {
  Protocol p = test::corpus_protocol("multi-paxos");
  TagAnnotation a = test::corpus_tags("multi-paxos");
  std::vector<LiftedLoop> subs;
  Protocol lifted = lift_nested_loops(replace_reception_loops(p), a, &subs);
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].scope, "replicate");
  EXPECT_EQ(subs[0].params, (std::vector<std::string>{"ballot"}));
  EXPECT_EQ(find_all(lifted.body, Stmt::Kind::Call).size(), 1u);

  CompHOProtocol c = make_compho(p, a).compho;
  ASSERT_EQ(c.subs.size(), 1u);
  EXPECT_EQ(round_names(c), (std::vector<std::string>{"NewBallot", "AckBallot", "NewLog"}));
  EXPECT_EQ(round_names(c.subs[0]), (std::vector<std::string>{"Prepare", "PrepareOK", "Commit"}));
}

TEST(Rewriter, SiblingLoopsMergeIntoOneSubProtocol) {
  Protocol p = parse_protocol(test::fixture("sibling-loops.apl"));
  TagAnnotation a = TagAnnotation::parse(test::fixture("sibling-loops.tags"));
  std::vector<LiftedLoop> subs;
  lift_nested_loops(p, a, &subs);
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(subs[0].sites.size(), 2u);
  CompHOProtocol c = make_compho(p, a).compho;
  ASSERT_EQ(c.subs.size(), 1u);
  EXPECT_EQ(find_all(c.rounds[0].update, Stmt::Kind::Call).size(), 2u);
}

TEST(Rewriter, BackwardRoundAbortsInExtraction) {
  Protocol p = parse_protocol(test::fixture("backward-round.apl"));
  TagAnnotation a = TagAnnotation::parse(test::fixture("backward-round.tags"));
  try {
    make_compho(p, a);
    FAIL() << "expected RewriteError";
  } catch (const RewriteError& e) {
    EXPECT_EQ(e.stage(), "extract_rounds");
    EXPECT_EQ(e.loc().line, 11);
  }
}

TEST(Rewriter, JumpSitesOfLeaderElection) {
  Protocol p = test::corpus_protocol("leader-election");
  auto sites = find_jump_sites(p, test::corpus_tags("leader-election"));
  ASSERT_EQ(sites.size(), 2u);
  for (const auto& s : sites) {
    EXPECT_EQ(s.var, "ballot");
    EXPECT_EQ(print_expr(s.value), "first(mbox).ballot");
  }
}
