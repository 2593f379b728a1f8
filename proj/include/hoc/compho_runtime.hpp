#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "hoc/async_runtime.hpp"

namespace hoc {

/// Heard-of sets per (global round, process). Unlisted entries fall back to
/// the full process set or to the empty set.
struct HOAssignment {
  std::map<std::int64_t, std::map<int, std::set<int>>> sets;
  bool default_full = true;

  std::set<int> get(std::int64_t r, int p, int n) const;
  void set(std::int64_t r, int p, std::set<int> ho) { sets[r][p] = std::move(ho); }

  /// Lines "r p: {q1,q2}" with 0-based ids; "default: empty" or
  /// "default: full" sets the fallback. '#' starts a comment.
  static HOAssignment parse(const std::string& text);
  std::string to_string() const;
};

struct Frame {
  const CompHOProtocol* proto = nullptr;
  std::vector<Value> vars;
  std::int64_t base = 0;  // phase() offset

  bool operator==(const Frame&) const = default;
};

struct ComphoProc {
  std::vector<Frame> frames;  // call stack, main protocol at the bottom
  int in_cursor = 0;

  bool operator==(const ComphoProc&) const = default;
};

/// One activation of a protocol shared by the processes that called it.
struct Session {
  const CompHOProtocol* proto = nullptr;
  std::set<int> members;
  std::set<int> done;
  std::int64_t counter = 0;  // rounds completed in this session

  bool operator==(const Session&) const = default;
};

struct ComphoState {
  enum class SU { Snd, Updt };
  SU su = SU::Snd;
  std::vector<ComphoProc> procs;
  std::int64_t r = 0;
  std::vector<Session> sessions;  // stack, main session first
  std::vector<Message> pool;

  bool operator==(const ComphoState&) const = default;
  std::size_t hash() const;
};

struct ComphoConfig {
  int n = 2;
  CoordSchedule coord;
  std::vector<std::vector<Value>> inputs;
};

class ComphoMachine {
 public:
  ComphoMachine(const CompHOProtocol& p, ComphoConfig cfg);

  const CompHOProtocol& protocol() const { return proto_; }
  const ComphoConfig& config() const { return cfg_; }

  ComphoState start() const;
  ComphoState send_step(const ComphoState& s) const;
  /// `ho[p]` filters p's mailbox. Appends out/in events stamped with the global round.
  ComphoState update_step(const ComphoState& s, const std::vector<std::set<int>>& ho,
                          std::vector<Observable>* obs = nullptr) const;

  /// Processes that send and update in the current round.
  std::vector<int> active(const ComphoState& s) const;
  bool finished(const ComphoState& s) const { return active(s).empty(); }
  const Round& current_round(const ComphoState& s) const;
  std::int64_t phase_of(const ComphoState& s, int p) const;
  /// Mailbox p would receive from the current pool under heard-of set `ho`.
  Value mailbox(const ComphoState& s, int p, const std::set<int>& ho) const;

 private:
  const CompHOProtocol& proto_;
  ComphoConfig cfg_;

  Env env_for(const ComphoState& s, const Frame& f, int p) const;
  Frame enter(const CompHOProtocol& callee, const Frame* caller, const Stmt* call, int p,
              const ComphoState& s, int& in_cursor) const;
};

struct ComphoExecution {
  ComphoState init;
  std::vector<ComphoState> states;  // after each update step
  std::vector<std::vector<std::set<int>>> ho;
  std::vector<Observable> observables;
};

ComphoExecution run_compho(const ComphoMachine& m, const HOAssignment& ho, std::size_t max_rounds);

/// Heard-of restriction for enumeration: (round, process, candidate set).
using HOFilter = std::function<bool(std::int64_t, int, const std::set<int>&)>;

/// Calls `f` on every assignment over rounds [0, rounds) until it returns
/// false; throws BudgetExceeded past `budget` assignments. Returns the count.
std::size_t enumerate_ho(int n, std::size_t rounds, const std::function<bool(const HOAssignment&)>& f,
                         const HOFilter& filter = nullptr, std::size_t budget = 10'000'000);

/// Every subset of {0..n-1} accepted by the filter for (r, p).
std::vector<std::set<int>> ho_choices(int n, std::int64_t r, int p, const HOFilter& filter);

}  // namespace hoc
