// Command-line driver: check, rewrite, simulate, verify, corpus list.
// Exit codes: 0 pass, 1 check or property failure, 2 usage, 3 budget.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hoc/corpus.hpp"
#include "hoc/equivalence.hpp"
#include "hoc/parser.hpp"
#include "hoc/printer.hpp"
#include "hoc/rewriter.hpp"
#include "hoc/sync_tags.hpp"
#include "hoc/trace.hpp"
#include "hoc/validate.hpp"

namespace fs = std::filesystem;
using namespace hoc;
using Json = nlohmann::ordered_json;

namespace {

enum Exit { kPass = 0, kFail = 1, kUsage = 2, kBudget = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int n = 2;
  std::size_t max_steps = 100000;
  int max_rounds = 2;
  std::uint64_t seed = 1;
  bool loss = true;
  bool dup = false;
  bool crash = false;
  std::string coord = "0";
  std::vector<std::string> inputs;  // "p:v1,v2"
  std::size_t budget = 20'000'000;
  std::string format = "text";
  int workers = 1;
  std::string ho_file;
  std::string tags;
};

void add_run_options(CLI::App* c, RunConfig& rc) {
  c->add_option("--n", rc.n, "number of processes")->check(CLI::Range(1, 8));
  c->add_option("--max-steps", rc.max_steps, "step bound of one async execution")->check(CLI::PositiveNumber);
  c->add_option("--max-rounds", rc.max_rounds,
                "async: iterations of each loop; compho: rounds")
      ->check(CLI::PositiveNumber);
  c->add_option("--seed", rc.seed, "scheduler seed");
  c->add_flag("--loss,!--no-loss", rc.loss, "message loss");
  c->add_flag("--dup", rc.dup, "message duplication");
  c->add_flag("--crash", rc.crash, "crash faults");
  c->add_option("--coord", rc.coord, "coordinator schedule, e.g. \"0;1,2\"");
  c->add_option("--input", rc.inputs, "in() script of a process, \"p:v1,v2\"");
  c->add_option("--bounds", rc.budget, "transition or state budget")->check(CLI::PositiveNumber);
  c->add_option("--format", rc.format, "report format")->check(CLI::IsMember({"text", "json-lines"}));
  c->add_option("--workers", rc.workers, "worker threads (enumeration is sequential)")
      ->check(CLI::PositiveNumber);
  c->add_option("--tags", rc.tags, "tag annotation file");
}

std::vector<std::vector<Value>> parse_inputs(const RunConfig& rc) {
  std::vector<std::vector<Value>> out(static_cast<std::size_t>(rc.n));
  for (const auto& s : rc.inputs) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw UsageError("--input expects p:v1,v2");
    int p = std::stoi(s.substr(0, colon));
    if (p < 0 || p >= rc.n) throw UsageError("--input names a nonexistent process");
    std::stringstream vs(s.substr(colon + 1));
    for (std::string v; std::getline(vs, v, ',');)
      out[static_cast<std::size_t>(p)].push_back(Value::integer(std::stoll(v)));
  }
  return out;
}

AsyncConfig async_config(const RunConfig& rc) {
  AsyncConfig c;
  c.n = rc.n;
  c.coord = CoordSchedule::parse(rc.coord);
  c.inputs = parse_inputs(rc);
  c.max_iterations = rc.max_rounds;
  c.max_steps = rc.max_steps;
  c.loss = rc.loss;
  c.duplication = rc.dup;
  c.crash = rc.crash;
  return c;
}

ComphoConfig compho_config(const RunConfig& rc) {
  ComphoConfig c;
  c.n = rc.n;
  c.coord = CoordSchedule::parse(rc.coord);
  c.inputs = parse_inputs(rc);
  return c;
}

// A target is a protocol file or the name of a corpus entry.
struct Target {
  std::string name;
  fs::path source;
  fs::path tags;
  std::optional<CorpusEntry> entry;
};

Target resolve(const std::string& target, const std::string& tags, bool need_tags) {
  Target t;
  if (fs::is_regular_file(target)) {
    t.source = target;
    t.name = t.source.stem().string();
    // mutants share the annotation of their entry
    fs::path dir = t.source.parent_path();
    if (!fs::exists(dir / "tags") && dir.filename() == "mutants") dir = dir.parent_path();
    if (!tags.empty())
      t.tags = tags;
    else if (fs::exists(dir / "tags"))
      t.tags = dir / "tags";
  } else {
    std::vector<CorpusEntry> corpus;
    try {
      corpus = load_corpus();
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    try {
      t.entry = corpus_entry(corpus, target);
    } catch (const std::out_of_range&) {
      throw UsageError("'" + target + "' is neither a file nor a corpus entry");
    }
    t.name = t.entry->name;
    t.source = t.entry->source;
    t.tags = tags.empty() ? t.entry->annotation : fs::path(tags);
  }
  if (need_tags && (t.tags.empty() || !fs::is_regular_file(t.tags)))
    throw UsageError("annotation file not found" + (t.tags.empty() ? std::string() : ": " + t.tags.string()));
  return t;
}

std::string slurp(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw UsageError("cannot read " + p.string());
  return read_file(p.string());
}

Protocol load_protocol(const fs::path& p) {
  Protocol proto = parse_protocol(slurp(p));
  for (const auto& d : validate(proto))
    if (d.severity == Diagnostic::Severity::Error)
      throw UsageError(p.string() + ": line " + std::to_string(d.loc.line) + ": " + d.message);
  return proto;
}

TagAnnotation load_tags(const fs::path& p) { return TagAnnotation::parse(slurp(p)); }

void emit(const RunConfig& rc, const Json& record, const std::string& text) {
  if (rc.format == "json-lines")
    std::cout << record.dump() << "\n";
  else
    std::cout << text << "\n";
}

std::string witness_text(const std::vector<Action>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += "  " + std::to_string(i) + ": " + w[i].to_string() + "\n";
  return s;
}

Json witness_json(const std::vector<Action>& w) {
  Json a = Json::array();
  for (const auto& x : w) a.push_back(x.to_string());
  return a;
}

}  // namespace

namespace {

int cmd_check(const std::string& target, const RunConfig& rc) {
  Target t = resolve(target, rc.tags, true);
  Protocol p = load_protocol(t.source);
  TagAnnotation a = load_tags(t.tags);
  auto diags = check_annotation(a, p.decls);
  if (!diags.empty()) {
    for (const auto& d : diags)
      emit(rc, Json{{"kind", "annotation"}, {"message", d.message}}, "annotation: " + d.message);
    return kFail;
  }
  Program prog = lower(p);
  AsyncMachine m(prog, async_config(rc));
  EnumOptions opt;
  opt.memo = true;
  opt.budget = rc.budget;
  TagVerdict sync = check_sync_tag(m, a, opt);
  TagVerdict comp;
  if (sync.pass) comp = check_compho_tag(m, a, opt);

  for (const TagVerdict* v : {&sync, &comp}) {
    for (const auto& x : v->violations) {
      bool replays = x.condition != Violation::Condition::Shape && replay_violation(m, a, x);
      Json r{{"kind", "violation"},   {"condition", condition_name(x.condition)},
             {"process", x.process},  {"line", x.loc.line},
             {"explanation", x.explanation}, {"replays", replays},
             {"witness", witness_json(x.witness)}};
      std::string text = "violation " + std::string(condition_name(x.condition));
      if (x.process >= 0) text += " at P" + std::to_string(x.process);
      if (x.loc.line > 0) text += " line " + std::to_string(x.loc.line);
      text += ": " + x.explanation;
      if (!x.witness.empty()) text += "\nwitness (" + std::string(replays ? "replays" : "does not replay") + "):\n" +
                                      witness_text(x.witness);
      emit(rc, r, text);
    }
  }
  const bool budget = sync.budget_exceeded || comp.budget_exceeded;
  const bool pass = sync.pass && comp.pass;
  std::string verdict = budget ? "budget-exceeded" : pass ? "bounded-pass" : "fail";
  Json r{{"kind", "verdict"},
         {"protocol", p.name},
         {"verdict", verdict},
         {"transitions", sync.stats.transitions + comp.stats.transitions},
         {"incremental", comp.incremental},
         {"jumps", comp.jumps}};
  std::string text = p.name + ": " + verdict + " (" + std::to_string(sync.stats.transitions) + " + " +
                     std::to_string(comp.stats.transitions) + " transitions";
  if (pass) text += comp.incremental ? ", incremental" : ", jumping: " + std::to_string(comp.jumps) + " jumps";
  emit(rc, r, text + ")");
  if (budget && sync.violations.empty() && comp.violations.empty()) return kBudget;
  return pass ? kPass : kFail;
}

int cmd_rewrite(const std::string& target, const RunConfig& rc, const std::string& out,
                const std::string& report, bool skip_check) {
  Target t = resolve(target, rc.tags, true);
  Protocol p = load_protocol(t.source);
  TagAnnotation a = load_tags(t.tags);
  if (!skip_check) {
    RunConfig quiet = rc;
    quiet.format = "json-lines";
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    int code = kPass;
    try {
      code = cmd_check(target, quiet);
    } catch (...) {
      std::cout.rdbuf(old);
      throw;
    }
    std::cout.rdbuf(old);
    if (code != kPass) {
      std::cerr << "tag check did not pass; run `hoc check` for details or pass --skip-check\n";
      return code;
    }
  }
  RewriteResult r;
  try {
    r = make_compho(p, a);
  } catch (const RewriteError& e) {
    std::cerr << "rewrite aborted in " << e.what() << "\n";
    return kFail;
  }
  std::string text = print(r.compho);
  std::string rep = format_report(r.report);
  if (out.empty()) {
    std::cout << text;
    std::cerr << rep;
  } else {
    write_file(out, text);
    std::cout << "wrote " << out << " (" << r.compho.rounds.size() << " rounds, " << r.compho.subs.size()
              << " sub-protocols)\n";
  }
  if (!report.empty()) write_file(report, rep);
  return kPass;
}

}  // namespace

namespace {

bool is_compho_source(const std::string& text) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    auto i = line.find_first_not_of(" \t\r");
    if (i == std::string::npos || line.compare(i, 2, "//") == 0) continue;
    return line.compare(i, 7, "compho ") == 0;
  }
  return false;
}

// The round protocol of a target: parsed directly, or rewritten from the
// async source with its annotation.
CompHOProtocol round_protocol(const std::string& target, const RunConfig& rc, const std::string& compho_file) {
  if (!compho_file.empty()) return parse_compho(slurp(compho_file));
  if (fs::is_regular_file(target)) {
    std::string text = slurp(target);
    if (is_compho_source(text)) return parse_compho(text);
  }
  Target t = resolve(target, rc.tags, true);
  return make_compho(load_protocol(t.source), load_tags(t.tags)).compho;
}

HOAssignment load_ho(const RunConfig& rc) {
  if (rc.ho_file.empty()) return HOAssignment{};
  return HOAssignment::parse(slurp(rc.ho_file));
}

void deliver(const std::string& out, const std::string& text) {
  if (out.empty())
    std::cout << text;
  else
    write_file(out, text);
}

int cmd_simulate(const std::string& target, const RunConfig& rc, const std::string& mode, const std::string& out) {
  if (mode == "async") {
    Target t = resolve(target, rc.tags, false);
    std::string text = slurp(t.source);
    if (is_compho_source(text)) throw UsageError("async mode needs an asynchronous protocol");
    Protocol p = load_protocol(t.source);
    Program prog = lower(p);
    AsyncMachine m(prog, async_config(rc));
    Execution e = run_async(m, random_scheduler(rc.seed), rc.max_steps);
    deliver(out, async_trace(m, e));
    return kPass;
  }
  if (!rc.ho_file.empty() && !fs::is_regular_file(rc.ho_file)) throw UsageError("cannot read " + rc.ho_file);
  CompHOProtocol c = round_protocol(target, rc, "");
  ComphoMachine m(c, compho_config(rc));
  ComphoExecution e = run_compho(m, load_ho(rc), static_cast<std::size_t>(rc.max_rounds));
  deliver(out, compho_trace(m, e));
  return kPass;
}

}  // namespace

namespace {

struct VerifyOptions {
  std::string suite = "reduction";
  std::string compho_file;
  std::string var;
  std::string trace_out = "counterexample.jsonl";
};

int cmd_verify(const std::string& target, const RunConfig& rc, const VerifyOptions& vo) {
  Json r{{"kind", "verdict"}, {"suite", vo.suite}};
  std::string text;
  bool pass = true, budget = false;

  if (vo.suite == "agreement") {
    std::string var = vo.var;
    if (var.empty() && !fs::is_regular_file(target)) var = resolve(target, rc.tags, false).entry->agreement.var;
    if (var.empty()) throw UsageError("agreement needs --var");
    CompHOProtocol c = round_protocol(target, rc, vo.compho_file);
    ComphoMachine m(c, compho_config(rc));
    AgreementReport rep = check_agreement(m, static_cast<std::size_t>(rc.max_rounds), agreement_on(var), rc.budget);
    pass = rep.pass;
    budget = rep.budget_exceeded;
    r["states"] = rep.states;
    text = "agreement on " + var + ": " + std::to_string(rep.states) + " states";
    if (!rep.pass && !rep.budget_exceeded) {
      HOAssignment ho;
      ho.default_full = false;
      for (std::size_t k = 0; k < rep.witness.size(); ++k)
        for (std::size_t p = 0; p < rep.witness[k].size(); ++p)
          ho.set(static_cast<std::int64_t>(k), static_cast<int>(p), rep.witness[k][p]);
      write_file(vo.trace_out, compho_trace(m, run_compho(m, ho, rep.witness.size())));
      write_file(vo.trace_out + ".ho", ho.to_string());
      r["failure"] = rep.failure;
      r["trace"] = vo.trace_out;
      text += "\n" + rep.failure + "\ncounterexample: " + vo.trace_out + " (heard-of sets in " + vo.trace_out + ".ho)";
    }
  } else {
    Target t = resolve(target, rc.tags, true);
    Protocol p = load_protocol(t.source);
    TagAnnotation a = load_tags(t.tags);
    Program prog = lower(p);
    AsyncMachine m(prog, async_config(rc));
    EnumOptions opt;
    opt.budget = rc.budget;
    std::vector<Action> witness;
    std::string failure;
    if (vo.suite == "reduction") {
      CompHOProtocol c = vo.compho_file.empty() ? make_compho(p, a).compho : parse_compho(slurp(vo.compho_file));
      ReductionReport rep = check_reduction(m, a, c, opt);
      pass = rep.pass;
      budget = rep.budget_exceeded;
      failure = rep.failure;
      witness = rep.witness;
      r["executions"] = rep.executions;
      text = "reduction: " + std::to_string(rep.executions) + " async executions matched";
    } else {
      SwapReport rep = check_swap_theorem(m, a, opt);
      pass = rep.pass;
      budget = rep.budget_exceeded;
      failure = rep.failure;
      witness = rep.witness;
      r["executions"] = rep.executions;
      r["swaps"] = rep.swaps;
      text = "swap: " + std::to_string(rep.executions) + " executions sorted with " + std::to_string(rep.swaps) +
             " swaps";
    }
    if (!pass && !budget) {
      write_file(vo.trace_out, async_trace(m, run_async(m, witness)));
      r["failure"] = failure;
      r["trace"] = vo.trace_out;
      text += "\n" + failure + "\ncounterexample: " + vo.trace_out;
    }
  }
  std::string verdict = budget ? "budget-exceeded" : pass ? "bounded-pass" : "fail";
  r["verdict"] = verdict;
  emit(rc, r, text + "\n" + verdict);
  return budget ? kBudget : pass ? kPass : kFail;
}

int cmd_corpus_list(const RunConfig& rc) {
  for (const auto& e : load_corpus()) {
    Json rounds = Json::array();
    std::string rt;
    for (const auto& rn : e.rounds) {
      rounds.push_back(Json{{"protocol", rn.protocol}, {"names", rn.names}});
      rt += " " + rn.protocol + "[";
      for (std::size_t i = 0; i < rn.names.size(); ++i) rt += (i ? ";" : "") + rn.names[i];
      rt += "]";
    }
    Json muts = Json::array();
    std::string mt;
    for (const auto& [name, path] : e.mutants) {
      muts.push_back(name);
      mt += " " + name;
    }
    emit(rc,
         Json{{"name", e.name}, {"protocol", e.protocol}, {"rounds", rounds},
              {"jumping", e.jumping}, {"nested", e.nested}, {"mutants", muts}},
         e.name + ":" + rt + (e.jumping ? " jumping" : " incremental") + ", mutants:" + mt);
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heard-Of rewriting toolkit: tag checks, round extraction, simulation and equivalence"};
  app.require_subcommand(1);
  RunConfig rc;
  std::string target, out, report, mode = "async";
  bool skip_check = false;
  VerifyOptions vo;

  auto* check = app.add_subcommand("check", "check the synchronization tags of a protocol");
  check->add_option("protocol", target, "protocol file or corpus entry")->required();
  add_run_options(check, rc);

  auto* rewrite = app.add_subcommand("rewrite", "rewrite an asynchronous protocol into rounds");
  rewrite->add_option("protocol", target, "protocol file or corpus entry")->required();
  rewrite->add_option("-o,--out", out, "output .apl file (default stdout)");
  rewrite->add_option("--report", report, "rewrite report file");
  rewrite->add_flag("--skip-check", skip_check, "do not run the tag check first");
  add_run_options(rewrite, rc);

  auto* simulate = app.add_subcommand("simulate", "run one execution and write its trace");
  simulate->add_option("protocol", target, "protocol file or corpus entry")->required();
  simulate->add_option("--mode", mode, "semantics")->check(CLI::IsMember({"async", "compho"}));
  simulate->add_option("--ho-file", rc.ho_file, "heard-of sets for compho mode");
  simulate->add_option("-o,--out", out, "trace file (default stdout)");
  add_run_options(simulate, rc);

  auto* verify = app.add_subcommand("verify", "run an equivalence or property suite");
  verify->add_option("protocol", target, "protocol file or corpus entry")->required();
  verify->add_option("--suite", vo.suite, "suite")->check(CLI::IsMember({"reduction", "swap", "agreement"}));
  verify->add_option("--compho", vo.compho_file, "round protocol to compare instead of the rewrite");
  verify->add_option("--var", vo.var, "map variable for agreement");
  verify->add_option("--trace-out", vo.trace_out, "counterexample trace file");
  add_run_options(verify, rc);

  auto* corpus = app.add_subcommand("corpus", "benchmark corpus");
  corpus->require_subcommand(1);
  auto* list = corpus->add_subcommand("list", "list corpus entries");
  list->add_option("--format", rc.format, "report format")->check(CLI::IsMember({"text", "json-lines"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (check->parsed()) return cmd_check(target, rc);
    if (rewrite->parsed()) return cmd_rewrite(target, rc, out, report, skip_check);
    if (simulate->parsed()) return cmd_simulate(target, rc, mode, out);
    if (verify->parsed()) return cmd_verify(target, rc, vo);
    if (list->parsed()) return cmd_corpus_list(rc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const RewriteError& e) {
    std::cerr << "rewrite aborted in " << e.what() << "\n";
    return kFail;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
