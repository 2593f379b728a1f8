#pragma once

#include <string>

#include "hoc/compho_runtime.hpp"

namespace hoc {

/// One JSON record per line: step, process, action, changed variables, and
/// the in/out event of the step if any. Byte-identical for identical runs.
std::string async_trace(const AsyncMachine& m, const Execution& e);

/// One record per (round, active process): heard-of set, changed variables
/// of the top frame, and out events of the update.
std::string compho_trace(const ComphoMachine& m, const ComphoExecution& e);

/// Writes `text` to `path`; throws std::runtime_error on I/O failure.
void write_file(const std::string& path, const std::string& text);

}  // namespace hoc
