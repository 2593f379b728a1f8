#pragma once

#include <ostream>
#include <string>

#include "hoc/corpus.hpp"
#include "hoc/parser.hpp"

namespace hoc {

inline void PrintTo(const Value& v, std::ostream* os) { *os << v.to_string(); }

}  // namespace hoc

namespace hoc::test {

inline std::string corpus_path(const std::string& rel) { return default_corpus_dir().string() + "/" + rel; }

#ifdef HOC_FIXTURE_DIR
inline std::string fixture(const std::string& name) { return read_file(std::string(HOC_FIXTURE_DIR) + "/" + name); }
#endif

inline Protocol corpus_protocol(const std::string& entry, const std::string& file = "protocol.apl") {
  return parse_protocol(read_file(corpus_path(entry + "/" + file)));
}

inline TagAnnotation corpus_tags(const std::string& entry) {
  return TagAnnotation::parse(read_file(corpus_path(entry + "/tags")));
}

}  // namespace hoc::test
