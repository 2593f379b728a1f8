#include "hoc/corpus.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "hoc/parser.hpp"
#include "hoc/validate.hpp"

namespace hoc {

namespace fs = std::filesystem;

namespace {

Protocol parse_checked(const fs::path& path) {
  Protocol p;
  try {
    p = parse_protocol(read_file(path.string()));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  for (const auto& d : validate(p))
    if (d.severity == Diagnostic::Severity::Error)
      throw std::runtime_error(path.string() + ": line " + std::to_string(d.loc.line) + ": " + d.message);
  return p;
}

CorpusEntry read_entry(const fs::path& dir) {
  CorpusEntry e;
  e.name = dir.filename().string();
  e.dir = dir;
  e.source = dir / "protocol.apl";
  e.annotation = dir / "tags";
  for (const auto& f : {e.source, e.annotation, dir / "expected.json"})
    if (!fs::exists(f)) throw std::runtime_error("corpus entry " + e.name + ": missing " + f.filename().string());
  if (fs::is_directory(dir / "mutants"))
    for (const auto& f : fs::directory_iterator(dir / "mutants"))
      if (f.path().extension() == ".apl") e.mutants[f.path().stem().string()] = f.path();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file((dir / "expected.json").string()));
    e.protocol = j.at("protocol").get<std::string>();
    e.tags_pass = j.at("tag_verdict").get<std::string>() == "pass";
    e.jumping = j.at("jumping").get<bool>();
    e.nested = j.at("nested").get<bool>();
    for (const auto& r : j.at("rounds"))
      e.rounds.push_back({r.at("protocol").get<std::string>(), r.at("names").get<std::vector<std::string>>()});
    const auto& a = j.at("agreement");
    e.agreement.var = a.at("var").get<std::string>();
    e.agreement.n = a.at("n").get<int>();
    e.agreement.coord = a.at("coord").get<std::string>();
    e.agreement.rounds = a.at("rounds").get<std::size_t>();
    e.agreement.holds = a.at("holds").get<bool>();
    e.mutant_condition = j.at("mutants").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& ex) {
    throw std::runtime_error("corpus entry " + e.name + ": expected.json: " + ex.what());
  }
  for (const auto& [m, c] : e.mutant_condition)
    if (!e.mutants.count(m)) throw std::runtime_error("corpus entry " + e.name + ": missing mutant " + m);

  Protocol p = e.load();
  if (p.name != e.protocol)
    throw std::runtime_error("corpus entry " + e.name + ": protocol is named " + p.name);
  for (const auto& d : check_annotation(e.load_tags(), p.decls))
    throw std::runtime_error(e.annotation.string() + ": " + d.message);
  return e;
}

}  // namespace

Protocol CorpusEntry::load() const { return parse_checked(source); }

TagAnnotation CorpusEntry::load_tags() const {
  try {
    return TagAnnotation::parse(read_file(annotation.string()));
  } catch (const std::exception& ex) {
    throw std::runtime_error(annotation.string() + ": " + ex.what());
  }
}

Protocol CorpusEntry::load_mutant(const std::string& mutant) const {
  auto it = mutants.find(mutant);
  if (it == mutants.end()) throw std::out_of_range("corpus entry " + name + " has no mutant " + mutant);
  return parse_checked(it->second);
}

fs::path default_corpus_dir() { return HOC_CORPUS_DIR; }

std::vector<CorpusEntry> load_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::runtime_error("corpus directory " + root.string() + " not found");
  std::vector<fs::path> dirs;
  for (const auto& d : fs::directory_iterator(root))
    if (d.is_directory() && fs::exists(d.path() / "protocol.apl")) dirs.push_back(d.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<CorpusEntry> out;
  for (const auto& d : dirs) out.push_back(read_entry(d));
  return out;
}

const CorpusEntry& corpus_entry(const std::vector<CorpusEntry>& corpus, const std::string& name) {
  for (const auto& e : corpus)
    if (e.name == name) return e;
  throw std::out_of_range("no corpus entry named " + name);
}

}  // namespace hoc
