#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hoc/ast.hpp"
#include "hoc/sync_tags.hpp"

namespace hoc {

/// Raised when the input is not structured enough to rewrite.
class RewriteError : public std::runtime_error {
 public:
  RewriteError(std::string stage, SourceLoc loc, const std::string& msg)
      : std::runtime_error(stage + ": line " + std::to_string(loc.line) + ": " + msg),
        stage_(std::move(stage)),
        loc_(loc) {}
  const std::string& stage() const { return stage_; }
  SourceLoc loc() const { return loc_; }

 private:
  std::string stage_;
  SourceLoc loc_;
};

struct ReceptionLoop {
  const Stmt* loop = nullptr;
  std::set<std::string> written_vars;
  std::vector<ExprPtr> exit_conds;  // disjuncts other than timeout()
  bool has_timeout_exit = false;
  SourceLoc loc;
};

/// Reception loops of `p`; loops with recv that do not fit the pattern, and
/// recv outside loops, are reported in `diags`.
std::vector<ReceptionLoop> find_reception_loops(const Protocol& p, std::vector<Diagnostic>* diags);

/// Replaces reception loops by havoc of the mailbox they fill.
Protocol replace_reception_loops(const Protocol& p);

struct JumpSite {
  SourceLoc loc;
  std::string var;
  ExprPtr value;
};

/// Assignments to a phase tag other than the iteration-start increment.
std::vector<JumpSite> find_jump_sites(const Protocol& p, const TagAnnotation& a);

/// Checks that every jump site stands at the start of its block. The
/// empty iterations a jump skips are left to empty heard-of sets.
Protocol normalize_jumps(const Protocol& p, const TagAnnotation& a, std::vector<JumpSite>* sites);

/// An inner loop turned into a sub-protocol.
struct LiftedLoop {
  std::string name;
  std::string scope;
  Protocol body;  // decls plus `[init] while true as scope { .. }`
  std::vector<std::string> returns;
  std::vector<std::string> params;  // outer tags the loop reads, passed by the call
  std::vector<SourceLoc> sites;
};

/// Replaces each group of nested loops sharing sync vars by a call.
Protocol lift_nested_loops(const Protocol& p, const TagAnnotation& a, std::vector<LiftedLoop>* subs);

struct ReportLine {
  int line = 0;
  std::string protocol;
  std::size_t position = 0;  // index of the round in the phase
  std::string round;
  std::string part;  // "send" or "update" or "init"
};

/// Rounds of one single-loop protocol. `sub` picks the tag pair of the
/// labeled loop; `params` are outer tags it may read as plain values.
CompHOProtocol extract_rounds(const Protocol& p, const TagAnnotation& a,
                              std::vector<ReportLine>* report = nullptr, bool sub = false,
                              const std::set<std::string>& params = {});

struct RewriteResult {
  CompHOProtocol compho;
  std::vector<ReceptionLoop> reception_loops;
  std::vector<JumpSite> jumps;
  std::vector<ReportLine> report;
};

/// Full pipeline; throws RewriteError naming the failing stage.
RewriteResult make_compho(const Protocol& p, const TagAnnotation& a);

std::string format_report(const std::vector<ReportLine>& r);

}  // namespace hoc
