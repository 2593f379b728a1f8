#pragma once

#include <string>
#include <string_view>

#include "hoc/ast.hpp"

namespace hoc {

/// Parses one .apl source holding either a `protocol` or a `compho` block.
/// Throws ParseError on syntax errors and on unresolved names.
Module parse_module(std::string_view text);

/// Convenience wrappers that also reject the other protocol form.
Protocol parse_protocol(std::string_view text);
CompHOProtocol parse_compho(std::string_view text);

/// Reads a whole file; throws std::runtime_error when it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace hoc
