#include <gtest/gtest.h>

#include <fstream>

#include "hoc/rewriter.hpp"
#include "support.hpp"

using namespace hoc;

TEST(Corpus, SixEntriesSortedByName) {
  auto corpus = load_corpus();
  std::vector<std::string> names;
  for (const auto& e : corpus) names.push_back(e.name);
  EXPECT_EQ(names, (std::vector<std::string>{"chandra-toueg", "leader-election", "multi-paxos", "normal-op",
                                             "two-phase-commit", "viewchange"}));
  EXPECT_THROW(corpus_entry(corpus, "raft"), std::out_of_range);
}

TEST(Corpus, AtLeastTwelveMutantsWithConditions) {
  std::size_t total = 0;
  for (const auto& e : load_corpus()) {
    SCOPED_TRACE(e.name);
    EXPECT_EQ(e.mutants.size(), 2u);
    for (const auto& [name, path] : e.mutants) {
      ++total;
      EXPECT_TRUE(e.mutant_condition.count(name));
      Protocol p = e.load_mutant(name);
      EXPECT_EQ(p.name, e.protocol);
    }
  }
  EXPECT_GE(total, 12u);
}

TEST(Corpus, RoundNamesMatchTheRewrite) {
  for (const auto& e : load_corpus()) {
    SCOPED_TRACE(e.name);
    CompHOProtocol c = make_compho(e.load(), e.load_tags()).compho;
    ASSERT_FALSE(e.rounds.empty());
    std::vector<const CompHOProtocol*> protos{&c};
    for (const auto& s : c.subs) protos.push_back(&s);
    ASSERT_EQ(protos.size(), e.rounds.size());
    for (std::size_t i = 0; i < protos.size(); ++i) {
      EXPECT_EQ(protos[i]->name, e.rounds[i].protocol);
      std::vector<std::string> names;
      for (const auto& r : protos[i]->rounds) names.push_back(r.name);
      EXPECT_EQ(names, e.rounds[i].names);
    }
    EXPECT_EQ(e.nested, !c.subs.empty());
  }
}

TEST(Corpus, ManifestFlagsMatchTheSources) {
  for (const auto& e : load_corpus()) {
    SCOPED_TRACE(e.name);
    EXPECT_TRUE(e.tags_pass);
    EXPECT_EQ(e.jumping, !find_jump_sites(e.load(), e.load_tags()).empty());
    EXPECT_FALSE(e.agreement.var.empty());
    EXPECT_GT(e.agreement.rounds, 0u);
  }
}

TEST(Corpus, CorruptManifestIsRejected) {
  auto root = std::filesystem::temp_directory_path() / "hoc-corpus-test";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root / "broken");
  std::filesystem::copy_file(test::corpus_path("leader-election/protocol.apl"), root / "broken" / "protocol.apl");
  std::filesystem::copy_file(test::corpus_path("leader-election/tags"), root / "broken" / "tags");
  std::ofstream(root / "broken" / "expected.json") << "{ not json";
  EXPECT_THROW(load_corpus(root), std::runtime_error);
  std::filesystem::remove_all(root);
}
