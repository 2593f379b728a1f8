#include <gtest/gtest.h>

#include <algorithm>

#include "hoc/cfg.hpp"
#include "hoc/printer.hpp"
#include "hoc/validate.hpp"
#include "support.hpp"

using namespace hoc;

namespace {

bool has_message(const std::vector<Diagnostic>& ds, const std::string& text) {
  return std::any_of(ds.begin(), ds.end(),
                     [&](const Diagnostic& d) { return d.message.find(text) != std::string::npos; });
}

const char* kMinimal = R"(
protocol Echo {
  msg Ping { v: int }
  var x: int = 0;
  var m: Ping;
  var p: pid;
  while true {
    send Ping(x) to *;
    m, p = recv();
    x = x + 1;
  }
}
)";

}  // namespace

TEST(ProtocolAst, LeaderElectionDeclarations) {
  Protocol p = test::corpus_protocol("leader-election");
  EXPECT_EQ(p.name, "LeaderElection");
  std::vector<std::string> names;
  for (const auto& v : p.decls.vars) names.push_back(v.name);
  std::vector<std::string> want{"ballot", "label", "leader", "mbox", "m", "p", "log_ballot", "log_leader"};
  EXPECT_EQ(names, want);
  ASSERT_NE(p.decls.msg("Msg"), nullptr);
  EXPECT_EQ(p.decls.msg("Msg")->fields.size(), 3u);
  EXPECT_EQ(p.decls.enum_type("Label")->ordinal_of("AckBallot"), 1);
  EXPECT_TRUE(validate(p).empty());
}

TEST(ProtocolAst, MinimalSourceIsValid) {
  Protocol p = parse_protocol(kMinimal);
  EXPECT_TRUE(validate(p).empty());
  EXPECT_EQ(p.recv_bound_vars(), (std::set<std::string>{"m", "p"}));
}

TEST(ProtocolAst, LoopWithoutCommunicationIsRejected) {
  Protocol p = parse_protocol(R"(
protocol Spin {
  var x: int = 0;
  while true { x = x + 1; }
}
)");
  EXPECT_TRUE(has_message(validate(p), "neither send nor recv"));
}

TEST(ProtocolAst, BreakOutsideLoopIsRejected) {
  Protocol p = parse_protocol(R"(
protocol Stray {
  msg Ping { v: int }
  var x: int = 0;
  break;
}
)");
  EXPECT_TRUE(has_message(validate(p), "break outside loop"));
}

TEST(ProtocolAst, UndeclaredMessageTypeIsAParseError) {
  const char* src = R"(
protocol Bad {
  msg Ping { v: int }
  while true { send Pong(1) to *; }
}
)";
  try {
    parse_protocol(src);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_TRUE(has_message(e.diagnostics(), "Pong"));
    EXPECT_GT(e.diagnostics().front().loc.line, 0);
  }
}

TEST(ProtocolAst, PrintParseRoundTripOverCorpus) {
  for (const auto& e : load_corpus()) {
    std::vector<std::filesystem::path> files{e.source};
    for (const auto& [_, path] : e.mutants) files.push_back(path);
    for (const auto& f : files) {
      SCOPED_TRACE(f.string());
      Protocol p = parse_protocol(read_file(f.string()));
      std::string text = print(p);
      Protocol q = parse_protocol(text);
      EXPECT_TRUE(same_stmt(p.body, q.body));
      EXPECT_EQ(print(q), text);
    }
  }
}

TEST(ProtocolAst, CfgPathsCountBranches) {
  // Two sequential ifs: 2 * 2 paths; a break cuts one branch short.
  Protocol p = parse_protocol(R"(
protocol Paths {
  msg Ping { v: int }
  var x: int = 0;
  var m: Ping;
  var q: pid;
  while true {
    m, q = recv();
    if x > 0 { x = 1; } else { x = 2; }
    if x > 1 { break; }
    send Ping(x) to *;
  }
}
)");
  const Stmt* loop = nullptr;
  visit_stmts(p.body, [&](const Stmt& s) {
    if (s.kind == Stmt::Kind::While && !loop) loop = &s;
  });
  ASSERT_NE(loop, nullptr);
  auto paths = cfg_paths(loop->body[0]);
  EXPECT_EQ(paths.size(), 4u);
  auto breaks = std::count_if(paths.begin(), paths.end(),
                              [](const CfgPath& c) { return c.end == CfgPath::End::Break; });
  EXPECT_EQ(breaks, 2);
  EXPECT_THROW(cfg_paths(loop->body[0], 3), PathExplosion);
}
