#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hoc/ast.hpp"
#include "hoc/sync_tags.hpp"

namespace hoc {

struct RoundNames {
  std::string protocol;
  std::vector<std::string> names;
};

struct AgreementExpectation {
  std::string var;
  int n = 3;
  std::string coord = "0";
  std::size_t rounds = 0;
  bool holds = true;
};

struct CorpusEntry {
  std::string name;
  std::filesystem::path dir;
  std::filesystem::path source;      // protocol.apl
  std::filesystem::path annotation;  // tags
  std::map<std::string, std::filesystem::path> mutants;  // by name, sorted

  // expected.json
  std::string protocol;
  bool tags_pass = true;
  bool jumping = false;  // has jump sites
  bool nested = false;
  std::vector<RoundNames> rounds;  // main protocol first
  AgreementExpectation agreement;
  std::map<std::string, std::string> mutant_condition;  // mutant -> condition name

  Protocol load() const;
  TagAnnotation load_tags() const;
  Protocol load_mutant(const std::string& mutant) const;
};

/// Directory the build was configured with.
std::filesystem::path default_corpus_dir();

/// Every entry under `root`, sorted by name; parses and validates each
/// source. Throws std::runtime_error on a missing or corrupt file.
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& root = default_corpus_dir());

/// The entry called `name`; throws std::out_of_range if absent.
const CorpusEntry& corpus_entry(const std::vector<CorpusEntry>& corpus, const std::string& name);

}  // namespace hoc
