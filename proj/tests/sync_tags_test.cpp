#include <gtest/gtest.h>

#include "support.hpp"

using namespace hoc;

namespace {

struct Fixture {
  Protocol proto = test::corpus_protocol("leader-election");
  TagAnnotation tags = test::corpus_tags("leader-election");
  Program prog = lower(proto);
};

Value label(const Decls& d, const std::string& lit) {
  auto e = d.enum_of_literal(lit);
  return Value::enumeration(e, e->ordinal_of(lit));
}

TagVerdict check_mutant(const std::string& entry, const std::string& mutant, int n, int iters) {
  Protocol p = test::corpus_protocol(entry, "mutants/" + mutant + ".apl");
  Program prog = lower(p);
  AsyncConfig cfg;
  cfg.n = n;
  cfg.max_iterations = iters;
  AsyncMachine m(prog, cfg);
  EnumOptions opt;
  opt.memo = true;
  opt.budget = 20'000'000;
  opt.first_violation = true;
  TagVerdict v = check_sync_tag(m, test::corpus_tags(entry), opt);
  for (const auto& x : v.violations) EXPECT_TRUE(replay_violation(m, test::corpus_tags(entry), x));
  return v;
}

}  // namespace

TEST(SyncTags, AnnotationParses) {
  Fixture f;
  ASSERT_EQ(f.tags.sync_vars.size(), 2u);
  EXPECT_EQ(f.tags.sync_vars[1].domain, SyncVar::Domain::Enum);
  EXPECT_EQ(f.tags.slot("rd"), 1);
  EXPECT_EQ(f.tags.slot("nope"), -1);
  EXPECT_EQ(f.tags.tag_vars(), (std::set<std::string>{"ballot", "label"}));
  EXPECT_TRUE(check_annotation(f.tags, f.proto.decls).empty());
  EXPECT_THROW(TagAnnotation::parse("[sync]\nph = float\n"), std::invalid_argument);
}

TEST(SyncTags, StateAndMessageTags) {
  Fixture f;
  const Decls& d = f.proto.decls;
  std::vector<Value> vars(d.vars.size());
  vars[static_cast<std::size_t>(d.var_index("ballot"))] = Value::integer(3);
  vars[static_cast<std::size_t>(d.var_index("label"))] = label(d, "NewBallot");
  TagValue t = eval_state_tag(f.tags, d, vars, "");
  EXPECT_EQ(t, (TagValue{Value::integer(3), label(d, "NewBallot")}));
  EXPECT_EQ(tag_to_string(t), "(3, NewBallot)");

  Value msg = make_message(d, "Msg", {Value::integer(4), label(d, "AckBallot"), Value::integer(2)});
  EXPECT_EQ(eval_msg_tag(f.tags, msg), (TagValue{Value::integer(4), label(d, "AckBallot")}));
}

TEST(SyncTags, NextTagIteratesLexicographically) {
  Fixture f;
  const Decls& d = f.proto.decls;
  const SyncVar& rd = f.tags.sync_vars[1];
  std::pair<Value, Value> t{Value::integer(1), label(d, "NewBallot")};
  EXPECT_EQ(next_tag(t, rd).second, label(d, "AckBallot"));
  // k successors of (1, NewBallot) land on phase 1 + k / 2, round k mod 2.
  for (int k = 1; k <= 9; ++k) {
    t = next_tag(t, rd);
    EXPECT_EQ(t.first, Value::integer(1 + k / 2));
    EXPECT_EQ(t.second.ordinal(), k % 2);
  }

  SyncVar bounded{.name = "k", .domain = SyncVar::Domain::Int, .enum_name = {}, .lo = 0, .hi = 2};
  std::pair<Value, Value> u{Value::integer(5), Value::integer(2)};
  EXPECT_EQ(next_tag(u, bounded), (std::pair{Value::integer(6), Value::integer(0)}));
  SyncVar open{.name = "k", .domain = SyncVar::Domain::Int, .enum_name = {}, .lo = {}, .hi = {}};
  EXPECT_THROW(next_tag(u, open), std::invalid_argument);
}

TEST(SyncTags, LeaderElectionPasses) {
  Fixture f;
  AsyncConfig cfg;
  cfg.n = 2;
  AsyncMachine m(f.prog, cfg);
  TagVerdict s = check_sync_tag(m, f.tags);
  EXPECT_TRUE(s.pass);
  EXPECT_FALSE(s.budget_exceeded);
  EXPECT_GT(s.stats.transitions, 0u);
  TagVerdict c = check_compho_tag(m, f.tags);
  EXPECT_TRUE(c.pass);
  EXPECT_TRUE(c.incremental);
}

TEST(SyncTags, MutantsFailTheExpectedCondition) {
  auto corpus = load_corpus();
  const CorpusEntry& le = corpus_entry(corpus, "leader-election");
  for (const auto& [mutant, cond] : le.mutant_condition) {
    SCOPED_TRACE(mutant);
    TagVerdict v = check_mutant("leader-election", mutant, 2, 2);
    EXPECT_FALSE(v.pass);
    ASSERT_FALSE(v.violations.empty());
    EXPECT_EQ(condition_name(v.violations.front().condition), cond);
    EXPECT_FALSE(v.violations.front().witness.empty());
  }
}

TEST(SyncTags, UnboundedRoundTagIsRejected) {
  Fixture f;
  TagAnnotation a = TagAnnotation::parse(
      "[sync]\nph = int\nrd = int\n[tags]\nph = ballot\nrd = p\n[tagm.Msg]\nph = ballot\nrd = leader\n");
  AsyncConfig cfg;
  AsyncMachine m(f.prog, cfg);
  TagVerdict v = check_compho_tag(m, a);
  EXPECT_FALSE(v.pass);
  ASSERT_FALSE(v.violations.empty());
  EXPECT_EQ(v.violations.front().condition, Violation::Condition::Shape);
}

TEST(SyncTags, OddArityIsRejected) {
  Fixture f;
  TagAnnotation a = TagAnnotation::parse(
      "[sync]\nph = int\nrd = enum Label\nx = int\n[tags]\nph = ballot\nrd = label\n"
      "[tagm.Msg]\nph = ballot\nrd = lab\n");
  AsyncConfig cfg;
  AsyncMachine m(f.prog, cfg);
  TagVerdict v = check_compho_tag(m, a);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.violations.front().condition, Violation::Condition::Shape);
}

TEST(SyncTags, TypeMismatchIsReported) {
  Fixture f;
  TagAnnotation a = TagAnnotation::parse("[sync]\nph = int\nrd = enum Label\n[tags]\nph = label\n");
  EXPECT_FALSE(check_annotation(a, f.proto.decls).empty());
}
