// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "hoc/corpus.hpp"
#include "hoc/equivalence.hpp"
#include "hoc/parser.hpp"
#include "hoc/printer.hpp"
#include "hoc/rewriter.hpp"
#include "hoc/trace.hpp"

using namespace hoc;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (auto at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size()))
    s.replace(at, from.size(), to);
  return s;
}

AsyncConfig bounded(int n, int phases, const std::string& coord = "0") {
  AsyncConfig cfg;
  cfg.n = n;
  cfg.max_iterations = phases;
  cfg.loss = true;
  cfg.duplication = false;
  cfg.coord = CoordSchedule::parse(coord);
  return cfg;
}

std::vector<std::string> round_names(const CompHOProtocol& c) {
  std::vector<std::string> out;
  for (const auto& r : c.rounds) out.push_back(r.name);
  return out;
}

std::string join(const std::vector<std::string>& xs) {
  std::string s;
  for (const auto& x : xs) s += (s.empty() ? "" : ",") + x;
  return s;
}

// 1. Leader election rewrites to the two-round protocol.
Outcome golden_rewrite(const std::vector<CorpusEntry>& corpus) {
  const CorpusEntry& e = corpus_entry(corpus, "leader-election");
  Protocol p = e.load();
  TagAnnotation a = e.load_tags();
  auto t0 = Clock::now();
  CompHOProtocol c = make_compho(p, a).compho;
  double secs = seconds_since(t0);

  std::ostringstream why;
  bool ok = round_names(c) == std::vector<std::string>{"NewBallot", "AckBallot"} && c.subs.empty();
  if (!ok) why << "rounds " << join(round_names(c)) << "; ";

  bool coord_broadcast = false;
  visit_stmts(c.rounds[0].send, [&](const Stmt& s) {
    if (s.kind != Stmt::Kind::If || print_expr(s.exprs[0]) != "is_coord(phase(), me())") return;
    visit_stmts(s.body[0], [&](const Stmt& x) {
      if (x.kind == Stmt::Kind::Send && !x.exprs[1] && print_expr(x.exprs[0]) == "Msg(phase(), NewBallot, me())")
        coord_broadcast = true;
    });
  });
  std::size_t acks = 0, sends = 0;
  visit_stmts(c.rounds[1].send, [&](const Stmt& s) {
    if (s.kind == Stmt::Kind::Send) ++sends;
    if (s.kind != Stmt::Kind::If || s.exprs[0]->kind != Expr::Kind::Name ||
        s.exprs[0]->text.rfind("old_mbox", 0) != 0)
      return;
    visit_stmts(s.body[0], [&](const Stmt& x) {
      if (x.kind == Stmt::Kind::Send && print_expr(x.exprs[0]) == "Msg(phase(), AckBallot, leader)") ++acks;
    });
  });
  if (!coord_broadcast) why << "no coordinator-guarded NewBallot broadcast; ";
  if (acks == 0 || acks != sends) why << "AckBallot sends are not all guarded acks of the leader; ";
  if (secs >= 1.0) why << "took " << secs << " s; ";
  ok = ok && coord_broadcast && acks > 0 && acks == sends && secs < 1.0;
  std::ostringstream d;
  d << "rounds " << join(round_names(c)) << ", " << acks << " guarded acks, " << secs << " s";
  return {ok, ok ? d.str() : why.str()};
}

// 2. Every corpus protocol passes both tag checks and rewrites with its round names.
Outcome corpus_breadth(const std::vector<CorpusEntry>& corpus) {
  auto t0 = Clock::now();
  std::ostringstream why, d;
  bool ok = corpus.size() == 6;
  if (!ok) why << corpus.size() << " entries; ";
  EnumOptions opt;
  opt.memo = true;
  opt.budget = 20'000'000;
  for (const auto& e : corpus) {
    auto t1 = Clock::now();
    Protocol p = e.load();
    TagAnnotation a = e.load_tags();
    Program prog = lower(p);
    AsyncMachine m(prog, bounded(2, 2));
    TagVerdict s = check_sync_tag(m, a, opt);
    TagVerdict c = check_compho_tag(m, a, opt);
    bool tags_ok = s.pass && c.pass && !s.budget_exceeded && !c.budget_exceeded;
    if (!tags_ok) {
      ok = false;
      why << e.name << ": tag check " << (s.budget_exceeded || c.budget_exceeded ? "over budget" : "failed");
      if (!s.violations.empty()) why << " (" << s.violations.front().explanation << ")";
      if (!c.violations.empty()) why << " (" << c.violations.front().explanation << ")";
      why << "; ";
    }
    try {
      CompHOProtocol out = make_compho(p, a).compho;
      std::vector<const CompHOProtocol*> protos{&out};
      for (const auto& sub : out.subs) protos.push_back(&sub);
      bool names_ok = protos.size() == e.rounds.size();
      for (std::size_t i = 0; names_ok && i < protos.size(); ++i)
        names_ok = protos[i]->name == e.rounds[i].protocol && round_names(*protos[i]) == e.rounds[i].names;
      if (!names_ok) {
        ok = false;
        why << e.name << ": round names " << join(round_names(out)) << "; ";
      }
    } catch (const RewriteError& err) {
      ok = false;
      why << e.name << ": rewrite aborted: " << err.what() << "; ";
    }
    d << e.name << " " << seconds_since(t1) << " s, ";
  }
  double secs = seconds_since(t0);
  if (secs >= 300) {
    ok = false;
    why << "took " << secs << " s; ";
  }
  d << "total " << secs << " s";
  return {ok, ok ? d.str() : why.str()};
}

// 3. Every shipped mutant is rejected with a witness that replays.
Outcome falsification(const std::vector<CorpusEntry>& corpus) {
  auto t0 = Clock::now();
  std::ostringstream why;
  std::size_t total = 0, rejected = 0;
  EnumOptions opt;
  opt.memo = true;
  opt.budget = 20'000'000;
  opt.first_violation = true;
  for (const auto& e : corpus) {
    TagAnnotation a = e.load_tags();
    for (const auto& [name, path] : e.mutants) {
      ++total;
      Protocol p = e.load_mutant(name);
      Program prog = lower(p);
      AsyncMachine m(prog, bounded(2, 2));
      TagVerdict v = check_sync_tag(m, a, opt);
      if (v.pass && !v.budget_exceeded) v = check_compho_tag(m, a, opt);
      if (v.pass || v.violations.empty()) {
        why << e.name << "/" << name << " not rejected" << (v.budget_exceeded ? " (budget)" : "") << "; ";
        continue;
      }
      const Violation& x = v.violations.front();
      if (!replay_violation(m, a, x)) {
        why << e.name << "/" << name << " witness does not replay; ";
        continue;
      }
      ++rejected;
    }
  }
  double secs = seconds_since(t0);
  bool ok = total >= 12 && rejected == total && secs < 300;
  if (secs >= 300) why << "took " << secs << " s; ";
  std::ostringstream d;
  d << rejected << "/" << total << " mutants rejected with replayed witnesses, " << secs << " s";
  return {ok, ok ? d.str() : d.str() + ": " + why.str()};
}

// 4. Bounded async executions match round executions.
Outcome reduction(const std::vector<CorpusEntry>& corpus) {
  struct Case {
    std::string entry;
    int n;
  };
  std::ostringstream d, why;
  bool ok = true;
  for (const Case& k : {Case{"leader-election", 2}, Case{"two-phase-commit", 2}, Case{"two-phase-commit", 3}}) {
    const CorpusEntry& e = corpus_entry(corpus, k.entry);
    Protocol p = e.load();
    TagAnnotation a = e.load_tags();
    CompHOProtocol c = make_compho(p, a).compho;
    Program prog = lower(p);
    AsyncMachine m(prog, bounded(k.n, 1));
    EnumOptions opt;
    opt.budget = 200'000'000;
    auto t0 = Clock::now();
    ReductionReport r = check_reduction(m, a, c, opt);
    double secs = seconds_since(t0);
    bool one = r.pass && !r.budget_exceeded && secs < 600;
    ok = ok && one;
    if (!one) why << k.entry << " n=" << k.n << ": " << (r.budget_exceeded ? "budget exceeded" : r.failure) << "; ";
    d << k.entry << " n=" << k.n << " " << r.executions << " executions " << secs << " s; ";
  }
  return {ok, ok ? d.str() : why.str()};
}

// 5. Sorting leader-election executions by tag only swaps commuting actions.
Outcome swap_theorem(const std::vector<CorpusEntry>& corpus) {
  const CorpusEntry& e = corpus_entry(corpus, "leader-election");
  Protocol p = e.load();
  Program prog = lower(p);
  AsyncMachine m(prog, bounded(2, 1));
  auto t0 = Clock::now();
  SwapReport r = check_swap_theorem(m, e.load_tags());
  double secs = seconds_since(t0);
  bool ok = r.pass && !r.budget_exceeded && secs < 600;
  std::ostringstream d;
  d << r.executions << " executions, " << r.swaps << " swaps, " << secs << " s";
  return {ok, ok ? d.str() : d.str() + ": " + r.failure};
}

// 6. Agreement over every heard-of choice, and a counterexample for a weakened quorum.
Outcome agreement(const std::vector<CorpusEntry>& corpus) {
  const CorpusEntry& e = corpus_entry(corpus, "leader-election");
  CompHOProtocol c = make_compho(e.load(), e.load_tags()).compho;
  ComphoConfig cfg{.n = 3, .coord = CoordSchedule::parse("0,1"), .inputs = {}};
  auto t0 = Clock::now();
  ComphoMachine m(c, cfg);
  AgreementReport good = check_agreement(m, 4, agreement_on("log_leader"));

  std::string weak = replace_all(print(c), "size(mbox) > n / 2", "size(mbox) >= n / 3");
  CompHOProtocol mutant = parse_compho(weak);
  ComphoMachine mm(mutant, cfg);
  AgreementReport bad = check_agreement(mm, 4, agreement_on("log_leader"));
  double secs = seconds_since(t0);

  bool ok = good.pass && !good.budget_exceeded && !bad.pass && !bad.witness.empty() && weak != print(c) &&
            secs < 600;
  std::ostringstream d;
  d << "holds over " << good.states << " states; weakened quorum fails after " << bad.states
    << " states (" << bad.failure << "), " << secs << " s";
  if (ok) return {true, d.str()};
  std::ostringstream why;
  if (!good.pass) why << "agreement violated: " << good.failure << "; ";
  if (good.budget_exceeded || bad.budget_exceeded) why << "budget exceeded; ";
  if (bad.pass) why << "mutant not caught; ";
  return {false, why.str()};
}

Value field_of(const Decls& d, const ProcState& ps, const std::string& var) {
  return ps.vars[static_cast<std::size_t>(d.var_index(var))];
}

// 7. A process that receives a far-ahead ballot skips the rounds in between.
Outcome jump_fidelity(const std::vector<CorpusEntry>& corpus) {
  const CorpusEntry& e = corpus_entry(corpus, "leader-election");
  Protocol p = e.load();
  TagAnnotation a = e.load_tags();
  CompHOProtocol c = make_compho(p, a).compho;
  Program prog = lower(p);
  AsyncConfig cfg = bounded(3, 21);
  AsyncMachine m(prog, cfg);
  const Decls& d = p.decls;
  const int slow = 2;
  const std::int64_t far = 20;

  auto ballot = [&](const AsyncState& s, int q) { return field_of(d, s.procs[static_cast<std::size_t>(q)], "ballot"); };
  auto label = [&](const AsyncState& s, int q) { return field_of(d, s.procs[static_cast<std::size_t>(q)], "label"); };
  // Receives that match the receiver's current tag, so no message is wasted.
  auto pick = [&](const AsyncState& s, const std::vector<Action>& en, int q) -> std::optional<Action> {
    for (const auto& act : en) {
      if (act.process != q) continue;
      if (act.kind == Action::Kind::Recv) {
        if (!act.msg) continue;
        const Value& pl = act.msg->payload;
        bool current = pl.field("ballot") == ballot(s, q) && pl.field("lab") == label(s, q);
        bool ahead = q == slow && pl.field("ballot").as_int() >= far && pl.field("lab") == label(s, q);
        if (current || ahead) return act;
        continue;
      }
      if (act.timeout && *act.timeout) continue;
      return act;
    }
    return std::nullopt;
  };

  Execution ex;
  ex.init = m.init();
  AsyncState cur = ex.init;
  auto take = [&](const Action& act) {
    cur = m.step(cur, act, &ex.observables);
    ex.actions.push_back(act);
    ex.states.push_back(cur);
  };
  bool reached = false;
  bool received_far = false;
  for (std::size_t guard = 0; guard < 100000 && !reached; ++guard) {
    auto en = m.enabled_actions(cur);
    std::optional<Action> next;
    // Messages for the slow process from earlier ballots are lost.
    for (const auto& act : en)
      if (act.kind == Action::Kind::Drop && act.msg->receiver == slow &&
          act.msg->payload.field("ballot").as_int() < far) {
        next = act;
        break;
      }
    // The slow process first gets into its ballot-1 wait.
    if (!next && ballot(cur, slow).as_int() == 0) next = pick(cur, en, slow);
    for (int q = 0; q < 2 && !next; ++q)
      if (ballot(cur, q).as_int() <= far) next = pick(cur, en, q);
    if (!next) next = pick(cur, en, slow);
    if (!next) break;
    if (next->kind == Action::Kind::Recv && next->process == slow) {
      if (next->msg->payload.field("ballot").as_int() >= far && ballot(cur, slow).as_int() == 1) received_far = true;
    }
    take(*next);
    reached = ballot(cur, slow).as_int() > far;
  }

  std::ostringstream why;
  if (!received_far) why << "the slow process never received ballot " << far << " while in ballot 1; ";
  if (!reached) why << "the slow process did not finish ballot " << far << "; ";
  ReductionReport r = match_execution(m, a, c, ex);
  if (!r.pass) why << "not indistinguishable: " << r.failure << "; ";
  const std::size_t R = c.rounds.size();
  std::size_t skipped = 0, nonempty = 0;
  for (std::int64_t ph = 1; ph < far; ++ph)
    for (std::size_t k = 0; k < R; ++k) {
      ++skipped;
      if (!r.ho.get(round_index(ph, static_cast<int>(k), 1, R), slow, 3).empty()) ++nonempty;
    }
  auto heard = r.ho.get(round_index(far, 0, 1, R), slow, 3);
  if (nonempty) why << nonempty << " skipped rounds have non-empty heard-of sets; ";
  if (heard != std::set<int>{0}) why << "the slow process did not hear the ballot-" << far << " proposal; ";
  std::size_t outs = 0;
  for (const auto& o : ex.observables) outs += o.process == slow && !o.input;
  if (outs != 1) why << "the slow process logged " << outs << " elections; ";

  bool ok = why.str().empty();
  std::ostringstream dd;
  dd << ex.actions.size() << " steps; heard-of empty for all " << skipped
     << " skipped rounds of P2; projections indistinguishable";
  return {ok, ok ? dd.str() : why.str()};
}

std::string slurp(const std::filesystem::path& p) { return read_file(p.string()); }

// 8. Equal seeds and heard-of files give byte-identical traces.
Outcome determinism(const std::vector<CorpusEntry>& corpus) {
  const CorpusEntry& e = corpus_entry(corpus, "leader-election");
  auto dir = std::filesystem::temp_directory_path() / "hoc-acceptance";
  std::filesystem::create_directories(dir);
  std::ostringstream why;
  std::size_t compared = 0;

  auto same = [&](const std::string& what, const std::filesystem::path& x, const std::filesystem::path& y) {
    ++compared;
    std::string a = slurp(x), b = slurp(y);
    if (a.empty()) why << what << ": empty trace; ";
    if (a != b) why << what << ": traces differ; ";
  };

  // Library path.
  Protocol p = e.load();
  TagAnnotation tags = e.load_tags();
  Program prog = lower(p);
  AsyncMachine m(prog, bounded(3, 3));
  for (int run = 0; run < 2; ++run)
    write_file((dir / ("lib-async-" + std::to_string(run) + ".jsonl")).string(),
               async_trace(m, run_async(m, random_scheduler(2024), 2000)));
  same("async library", dir / "lib-async-0.jsonl", dir / "lib-async-1.jsonl");

  CompHOProtocol c = make_compho(p, tags).compho;
  ComphoMachine cm(c, ComphoConfig{.n = 3, .coord = {}, .inputs = {}});
  std::string ho_text = "default: full\n0 1: {}\n1 2: {0}\n3 0: {1,2}\n";
  write_file((dir / "run.ho").string(), ho_text);
  for (int run = 0; run < 2; ++run) {
    HOAssignment ho = HOAssignment::parse(read_file((dir / "run.ho").string()));
    write_file((dir / ("lib-compho-" + std::to_string(run) + ".jsonl")).string(), compho_trace(cm, run_compho(cm, ho, 6)));
  }
  same("compho library", dir / "lib-compho-0.jsonl", dir / "lib-compho-1.jsonl");

#ifdef HOC_CLI
  // Command-line path.
  for (int run = 0; run < 2; ++run) {
    std::string r = std::to_string(run);
    std::string async_cmd = std::string(HOC_CLI) + " simulate leader-election --mode async --n 3 --seed 99 " +
                            "--max-rounds 3 -o " + (dir / ("cli-async-" + r + ".jsonl")).string() + " > /dev/null";
    std::string compho_cmd = std::string(HOC_CLI) + " simulate leader-election --mode compho --n 3 --ho-file " +
                             (dir / "run.ho").string() + " --max-rounds 6 -o " +
                             (dir / ("cli-compho-" + r + ".jsonl")).string() + " > /dev/null";
    if (std::system(async_cmd.c_str()) != 0) why << "cli async run failed; ";
    if (std::system(compho_cmd.c_str()) != 0) why << "cli compho run failed; ";
  }
  same("async cli", dir / "cli-async-0.jsonl", dir / "cli-async-1.jsonl");
  same("compho cli", dir / "cli-compho-0.jsonl", dir / "cli-compho-1.jsonl");
#endif

  bool ok = why.str().empty();
  return {ok, ok ? std::to_string(compared) + " trace pairs byte-identical" : why.str()};
}

}  // namespace

int main() {
  std::vector<CorpusEntry> corpus;
  try {
    corpus = load_corpus();
  } catch (const std::exception& e) {
    std::cout << "FAIL corpus: " << e.what() << "\n";
    return 1;
  }
  struct Criterion {
    const char* name;
    std::function<Outcome(const std::vector<CorpusEntry>&)> run;
  };
  const Criterion criteria[] = {
      {"golden-rewrite", golden_rewrite}, {"corpus-breadth", corpus_breadth},
      {"falsification", falsification},   {"reduction", reduction},
      {"swap-theorem", swap_theorem},     {"agreement", agreement},
      {"jump-fidelity", jump_fidelity},   {"determinism", determinism},
  };
  const char* only = std::getenv("HOC_ACCEPTANCE_ONLY");  // e.g. "1,5,7"
  int failed = 0, k = 0;
  for (const auto& c : criteria) {
    ++k;
    if (only && ("," + std::string(only) + ",").find("," + std::to_string(k) + ",") == std::string::npos) continue;
    Outcome o;
    try {
      o = c.run(corpus);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << k << " " << c.name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
