#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hoc/async_runtime.hpp"

namespace hoc {

struct SyncVar {
  enum class Domain { Int, Enum };
  std::string name;
  Domain domain = Domain::Int;
  std::string enum_name;                  // Enum domain
  std::optional<std::int64_t> lo, hi;     // bounded Int domain
  bool bounded() const { return domain == Domain::Enum || (lo && hi); }
};

/// (SyncV, tags, tagm). Location maps are keyed by loop label; "*" is the
/// default map and is merged into every labeled one.
struct TagAnnotation {
  std::vector<SyncVar> sync_vars;
  std::map<std::string, std::map<std::string, std::string>> tags;
  std::map<std::string, std::map<std::string, std::string>> tagm;

  /// Parses the sidecar format:
  ///   [sync]        ph = int          rd = enum Label     k = int 0..3
  ///   [tags]        ph = ballot       (default location map)
  ///   [tags.inner]  ph2 = op          (loops labeled `inner`)
  ///   [tagm.Msg]    ph = ballot
  /// Throws std::invalid_argument with a line number.
  static TagAnnotation parse(const std::string& text);

  int slot(const std::string& sync_var) const;  // -1 when absent
  /// Sync var -> protocol variable at a location with innermost label `scope`.
  std::map<std::string, std::string> location_map(const std::string& scope) const;
  /// Every protocol variable that is the image of some sync var.
  std::set<std::string> tag_vars() const;
  /// Slots mapped for message type `type`.
  std::vector<int> msg_slots(const std::string& type) const;
};

/// One value or None per sync var.
using TagValue = std::vector<Value>;

std::string tag_to_string(const TagValue& t);

/// Static consistency against the protocol's declarations.
std::vector<Diagnostic> check_annotation(const TagAnnotation& a, const Decls& d);

TagValue eval_state_tag(const TagAnnotation& a, const Decls& d, const std::vector<Value>& vars,
                        const std::string& scope);
/// Throws EvalError for a message type without a tagm entry.
TagValue eval_msg_tag(const TagAnnotation& a, const Value& payload);

/// Successor of a (phase, round) pair; wraps the round at its domain maximum.
std::pair<Value, Value> next_tag(const std::pair<Value, Value>& tag, const SyncVar& round_var);

struct Violation {
  enum class Condition { I, II, III, IV, Shape, Incremental };
  Condition condition = Condition::I;
  int process = -1;
  std::size_t step = 0;
  std::string explanation;
  SourceLoc loc;
  std::vector<Action> witness;  // replayable from the initial state
};

const char* condition_name(Violation::Condition c);

struct TagVerdict {
  bool pass = true;
  bool budget_exceeded = false;
  std::vector<Violation> violations;  // first one per condition
  EnumStats stats;
  bool incremental = true;            // CompHO check only
  std::size_t jumps = 0;
};

/// Defaults for the tag checks: reduced, memoized, 20M transitions.
EnumOptions tag_check_options();

/// Conditions I to IV over every transition of the bounded state space.
TagVerdict check_sync_tag(const AsyncMachine& m, const TagAnnotation& a,
                          const EnumOptions& opt = tag_check_options());

/// Pairing, finite round domains and the next-ordering; classifies jumps.
TagVerdict check_compho_tag(const AsyncMachine& m, const TagAnnotation& a,
                            const EnumOptions& opt = tag_check_options());

/// The monitor applied to one transition of process `a.process`.
std::vector<Violation> monitor_transition(const AsyncMachine& m, const TagAnnotation& a,
                                          const AsyncState& before, const Action& act,
                                          const AsyncState& after);

/// Replays the witness and checks that its last transition fails the same condition.
bool replay_violation(const AsyncMachine& m, const TagAnnotation& a, const Violation& v);

}  // namespace hoc
