#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hoc/compho_runtime.hpp"
#include "hoc/sync_tags.hpp"

namespace hoc {

/// Valuations of the observable variables, consecutive duplicates removed.
using Projection = std::vector<std::vector<Value>>;

/// Variables compared across semantics: not message-class, not tags, not aux.
std::vector<std::string> observable_vars(const Protocol& p, const TagAnnotation& a);

std::vector<Value> restrict_to(const Decls& d, const std::vector<Value>& vars,
                               const std::vector<std::string>& w);

/// Per-process projections of an async execution, sampled just before each
/// tag change and at the end.
std::vector<Projection> project_async(const AsyncMachine& m, const TagAnnotation& a,
                                      const std::vector<AsyncState>& states,
                                      const std::vector<std::string>& w);

/// Per-process projections of a round execution, one sample per round.
std::vector<Projection> project_compho(const ComphoExecution& e, const std::vector<std::string>& w);

/// Equal after stutter removal; with `prefix`, `a` may stop early.
bool indistinguishable(const Projection& a, const Projection& b, bool prefix = false);

/// Global round index of (phase, round) given the phase base.
std::int64_t round_index(std::int64_t phase, int round, std::int64_t phase_base, std::size_t rounds);

/// The round a finished reception consumed, with the senders heard from.
struct Consumed {
  std::size_t action = 0;  // index of the action that leaves the loop
  int process = 0;
  TagValue tag;
  std::set<int> senders;
};

// Functions taking `path` and `states` expect states[0] to be the initial
// state and states[i + 1] to follow path[i].

/// Every reception-loop exit of an execution, in order.
std::vector<Consumed> consumed_rounds(const AsyncMachine& m, const TagAnnotation& a,
                                      const std::vector<Action>& path,
                                      const std::vector<AsyncState>& states);

/// Heard-of sets read off the mailboxes of an async execution; every other
/// (round, process) is empty.
HOAssignment derive_ho(const AsyncMachine& m, const TagAnnotation& a, const CompHOProtocol& c,
                       const std::vector<Action>& path, const std::vector<AsyncState>& states,
                       std::size_t* rounds_needed = nullptr);
HOAssignment derive_ho(const AsyncMachine& m, const TagAnnotation& a, const CompHOProtocol& c,
                       const Execution& e);

struct ReductionReport {
  bool pass = true;
  bool budget_exceeded = false;
  std::size_t executions = 0;
  std::string failure;
  std::vector<Action> witness;
  HOAssignment ho;
};

/// Matches every bounded async execution against the round execution driven
/// by its derived heard-of sets.
ReductionReport check_reduction(const AsyncMachine& m, const TagAnnotation& a, const CompHOProtocol& c,
                                const EnumOptions& opt = {});

/// Matches one async execution; used by check_reduction and by scripted scenarios.
ReductionReport match_execution(const AsyncMachine& m, const TagAnnotation& a, const CompHOProtocol& c,
                                const std::vector<Action>& path, const std::vector<AsyncState>& states);
ReductionReport match_execution(const AsyncMachine& m, const TagAnnotation& a, const CompHOProtocol& c,
                                const Execution& e);

struct SwapReport {
  bool pass = true;
  bool budget_exceeded = false;
  std::size_t executions = 0;
  std::size_t swaps = 0;
  std::string failure;
  std::vector<Action> witness;  // execution holding the non-commuting pair
  std::size_t pair_index = 0;
};

/// Sorts each execution by (tag, send < receive < compute) through adjacent
/// swaps of different processes, checking each swap by local commutation.
SwapReport check_swap_theorem(const AsyncMachine& m, const TagAnnotation& a, const EnumOptions& opt = {});
/// The same for one execution.
SwapReport sort_execution(const AsyncMachine& m, const TagAnnotation& a, const std::vector<Action>& path,
                          const std::vector<AsyncState>& states);

/// Property on a round state; returns a description on violation.
using ComphoProperty = std::function<std::optional<std::string>(const ComphoMachine&, const ComphoState&)>;

/// Processes agree on every key of map variable `var` they both define.
ComphoProperty agreement_on(const std::string& var);

struct AgreementReport {
  bool pass = true;
  bool budget_exceeded = false;
  std::size_t states = 0;
  std::string failure;
  std::vector<std::vector<std::set<int>>> witness;  // heard-of sets per round
};

/// Explores every heard-of choice for `rounds` rounds; choices that give a
/// process the same mailbox are explored once.
AgreementReport check_agreement(const ComphoMachine& m, std::size_t rounds, const ComphoProperty& prop,
                                std::size_t budget = 20'000'000);

}  // namespace hoc
