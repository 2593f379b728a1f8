#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoc/ast.hpp"
#include "hoc/eval.hpp"

namespace hoc {

/// One instruction of the lowered per-process program.
struct Instr {
  enum class Op {
    Assign,
    Send,
    Recv,
    ResetTimeout,
    Branch,     // falls through when true, else jumps to `target`
    Jump,
    LoopEnter,  // resets the iteration counter of `loop`
    LoopHead,   // counts iterations of `loop`; halts past the bound
    In,
    Out,
    Halt,
  };
  enum class JumpKind { Plain, Break, Continue, Back };

  Op op = Op::Halt;
  const Stmt* stmt = nullptr;
  int target = -1;
  JumpKind jump = JumpKind::Plain;
  int loop = -1;
  int reception = -1;          // index of the enclosing reception loop, or -1
  bool nondet_timeout = false; // Branch whose condition reads timeout() in a reception loop
  bool timeout_exit = false;   // Recv in a reception loop that can time out
  bool leaves_reception = false;
  std::string scope;           // innermost labeled loop, "" at top level
  SourceLoc loc;
};

struct Program {
  const Protocol* protocol = nullptr;
  std::vector<Instr> code;
  int loops = 0;
  std::vector<bool> is_reception;  // per loop
};

/// Lowers the body; throws std::invalid_argument on rewriter-internal statements.
Program lower(const Protocol& p);

struct Message {
  int sender = 0;
  Value payload;
  int receiver = 0;

  friend bool operator==(const Message&, const Message&) = default;
  friend std::strong_ordering operator<=>(const Message& a, const Message& b) {
    if (auto c = a.sender <=> b.sender; c != 0) return c;
    if (auto c = a.payload <=> b.payload; c != 0) return c;
    return a.receiver <=> b.receiver;
  }
  std::string to_string() const;
};

struct ProcState {
  enum class Status { Running, Halted, Bounded, Crashed };

  std::vector<Value> vars;
  int pc = 0;
  std::vector<int> loop_count;
  bool timed_out = false;
  bool bottom = false;  // last receive returned nothing
  int in_cursor = 0;
  Status status = Status::Running;

  bool operator==(const ProcState&) const = default;
};

struct AsyncState {
  std::vector<ProcState> procs;
  std::map<Message, int> pool;  // multiset, canonical order
  int duplicates = 0;

  bool operator==(const AsyncState&) const = default;
  std::size_t hash() const;
  std::size_t pool_size() const;
};

struct Action {
  enum class Kind {
    Assign,
    Send,
    Recv,
    In,
    Out,
    Branch,
    LoopCtl,
    Reset,
    Drop,
    Duplicate,
    Crash,
  };
  Kind kind = Kind::Assign;
  int process = -1;
  std::optional<Message> msg;  // Recv (none = bottom), Drop, Duplicate
  std::optional<bool> timeout; // Branch outcome of a nondeterministic timeout()

  bool operator==(const Action&) const = default;
  std::string to_string() const;
};

struct Observable {
  int process = 0;
  bool input = false;
  std::vector<Value> values;
  std::size_t step = 0;

  bool operator==(const Observable&) const = default;
};

struct AsyncConfig {
  int n = 2;
  CoordSchedule coord;
  std::vector<std::vector<Value>> inputs;  // per process in() script
  int max_iterations = 1;                  // per entry of each non-reception loop
  std::size_t max_steps = 100000;
  bool loss = true;
  bool duplication = false;
  bool crash = false;
  int max_crashes = 1;
  int max_duplicates = 1;
};

class ActionNotEnabled : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Execution {
  AsyncState init;
  std::vector<Action> actions;
  std::vector<AsyncState> states;  // states[i] follows actions[i]
  std::vector<Observable> observables;
  bool truncated = false;

  const AsyncState& final_state() const { return states.empty() ? init : states.back(); }
};

/// Shared interpreter for one lowered program under one configuration.
class AsyncMachine {
 public:
  AsyncMachine(const Program& prog, AsyncConfig cfg);

  const Program& program() const { return prog_; }
  const AsyncConfig& config() const { return cfg_; }
  const Decls& decls() const { return prog_.protocol->decls; }

  AsyncState init() const;

  /// Every enabled action in canonical order.
  std::vector<Action> enabled_actions(const AsyncState& s) const;
  /// Applies `a`; throws ActionNotEnabled. Appends in/out events to `obs`.
  AsyncState step(const AsyncState& s, const Action& a,
                  std::vector<Observable>* obs = nullptr) const;

  /// Applies `a` without checking that it is enabled.
  AsyncState apply(const AsyncState& s, const Action& a,
                   std::vector<Observable>* obs = nullptr) const;

  /// The single deterministic action of process p, if its next instruction
  /// needs no external choice.
  std::optional<Action> local_action(const AsyncState& s, int p) const;
  /// Outcomes of a nondeterministic timeout branch for p (empty otherwise).
  std::vector<Action> timeout_choices(const AsyncState& s, int p, bool reduce) const;
  /// Receive choices for p; `reduce` drops unhelpful bottom receives.
  std::vector<Action> recv_choices(const AsyncState& s, int p, bool reduce) const;

  const Instr& instr_at(const ProcState& ps) const { return prog_.code[ps.pc]; }
  Env env_for(const ProcState& ps, int p) const;

 private:
  const Program& prog_;
  AsyncConfig cfg_;
  bool evaluates_differently(const ProcState& ps, int p, const Instr& in) const;
};

/// Scheduler for run_async: returns the index of the action to take.
using Scheduler = std::function<std::size_t(const AsyncState&, const std::vector<Action>&)>;

/// Uniform random choice from a seeded generator.
Scheduler random_scheduler(std::uint64_t seed);

Execution run_async(const AsyncMachine& m, const Scheduler& sched, std::size_t max_steps);
Execution run_async(const AsyncMachine& m, const std::vector<Action>& script);

struct EnumOptions {
  bool reduce = true;   // eager local steps, forced timeout after a bottom receive
  bool memo = false;    // prune revisited global states (transition checks only)
  bool sleep = false;   // sleep sets: one execution per reordering of independent receives
  std::size_t budget = 5'000'000;  // explored transitions
  // With memo: states that differ only in variables dead at each process's
  // pc are merged. Variables in `keep` are never treated as dead.
  bool dead_vars = false;
  std::set<std::string> keep;
  bool first_violation = false;  // property checks stop at the first violation
};

/// Per instruction, which variables may be read before being overwritten.
std::vector<std::vector<bool>> live_variables(const Program& prog);

struct EnumStats {
  std::size_t executions = 0;
  std::size_t transitions = 0;
  std::size_t pruned = 0;
};

class AsyncVisitor {
 public:
  virtual ~AsyncVisitor() = default;
  /// `path` ends with `a`; `states` ends with `after`. Return false to stop.
  virtual bool on_transition(const std::vector<Action>& path,
                             const std::vector<AsyncState>& states, const AsyncState& before,
                             const Action& a, const AsyncState& after) {
    (void)path, (void)states, (void)before, (void)a, (void)after;
    return true;
  }
  /// A maximal execution. Return false to stop.
  virtual bool on_execution(const std::vector<Action>& path, const std::vector<AsyncState>& states) {
    (void)path, (void)states;
    return true;
  }
};

/// Depth-first enumeration of bounded executions; throws BudgetExceeded.
EnumStats enumerate_async(const AsyncMachine& m, AsyncVisitor& v, const EnumOptions& opt = {});

/// Collects every maximal execution (small instances only).
std::vector<Execution> enumerate_executions(const AsyncMachine& m, const EnumOptions& opt = {});

}  // namespace hoc
