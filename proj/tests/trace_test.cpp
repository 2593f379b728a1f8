#include <gtest/gtest.h>

#include <sstream>

#include "hoc/rewriter.hpp"
#include "hoc/trace.hpp"
#include "support.hpp"
#include <json.hpp>

using namespace hoc;

namespace {

struct LeaderElection {
  Protocol proto = test::corpus_protocol("leader-election");
  TagAnnotation tags = test::corpus_tags("leader-election");
  Program prog = lower(proto);
  CompHOProtocol compho = make_compho(proto, tags).compho;
};

std::vector<nlohmann::json> lines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(nlohmann::json::parse(l));
  return out;
}

}  // namespace

TEST(Trace, AsyncTraceIsDeterministic) {
  LeaderElection le;
  AsyncConfig cfg;
  cfg.n = 3;
  cfg.max_iterations = 2;
  AsyncMachine m(le.prog, cfg);
  std::string a = async_trace(m, run_async(m, random_scheduler(7), 400));
  std::string b = async_trace(m, run_async(m, random_scheduler(7), 400));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, async_trace(m, run_async(m, random_scheduler(8), 400)));
  auto rows = lines(a);
  ASSERT_FALSE(rows.empty());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i]["step"], i);
    EXPECT_TRUE(rows[i].contains("process"));
    EXPECT_TRUE(rows[i].contains("action"));
    EXPECT_TRUE(rows[i].contains("delta"));
  }
}

TEST(Trace, ComphoTraceFromHeardOfFile) {
  LeaderElection le;
  ComphoMachine m(le.compho, ComphoConfig{.n = 3, .coord = {}, .inputs = {}});
  HOAssignment ho = HOAssignment::parse("default: full\n0 2: {}\n1 1: {1}\n");
  std::string a = compho_trace(m, run_compho(m, ho, 4));
  std::string b = compho_trace(m, run_compho(m, HOAssignment::parse(ho.to_string()), 4));
  EXPECT_EQ(a, b);
  auto rows = lines(a);
  ASSERT_EQ(rows.size(), 12u);  // 4 rounds, 3 processes
  EXPECT_EQ(rows[0]["action"], "update NewBallot");
  EXPECT_EQ(rows[2]["ho"], nlohmann::json::array());
  EXPECT_EQ(rows[4]["ho"], nlohmann::json::array({1}));
}

TEST(Trace, WriteFileRoundTrips) {
  auto path = (std::filesystem::temp_directory_path() / "hoc-trace-test.jsonl").string();
  write_file(path, "{\"step\":0}\n");
  EXPECT_EQ(read_file(path), "{\"step\":0}\n");
  std::filesystem::remove(path);
}
