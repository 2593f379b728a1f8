#include "hoc/rewriter.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "hoc/cfg.hpp"
#include "hoc/printer.hpp"
#include "hoc/validate.hpp"

namespace hoc {

namespace {

bool is_timeout_call(const ExprPtr& e) {
  return e->kind == Expr::Kind::Call && e->text == "timeout" && e->args.empty();
}

void disjuncts(const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (e->kind == Expr::Kind::Binary && e->text == "||") {
    disjuncts(e->args[0], out);
    disjuncts(e->args[1], out);
  } else {
    out.push_back(e);
  }
}

ExprPtr disjunction(const std::vector<ExprPtr>& xs) {
  if (xs.empty()) return Expr::boolean(false);
  ExprPtr r = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) r = Expr::binary("||", r, xs[i]);
  return r;
}

ExprPtr replace_call(const ExprPtr& e, const std::string& fn, const ExprPtr& by) {
  if (e->kind == Expr::Kind::Call && e->text == fn && e->args.empty()) return by;
  if (e->args.empty()) return e;
  auto c = std::make_shared<Expr>(*e);
  bool changed = false;
  for (auto& a : c->args) {
    auto b = replace_call(a, fn, by);
    changed |= b != a;
    a = b;
  }
  if (!changed) return e;
  // keep double negation out of the printed form
  if (c->kind == Expr::Kind::Unary && c->text == "!") return Expr::negate(c->args[0]);
  return c;
}

std::vector<Stmt> items_of(const Stmt& s) {
  Stmt f = flatten(s);
  if (f.kind == Stmt::Kind::Seq) return f.body;
  return {f};
}

bool is_single_break(const Stmt& s) {
  auto xs = items_of(s);
  return xs.size() == 1 && xs[0].kind == Stmt::Kind::Break;
}

bool direct_recv(const Stmt& body) {
  bool found = false;
  std::function<void(const Stmt&)> go = [&](const Stmt& s) {
    if (s.kind == Stmt::Kind::Recv) found = true;
    if (s.kind == Stmt::Kind::While) return;
    for (const auto& c : s.body) go(c);
  };
  go(body);
  return found;
}

void assigned_vars(const Stmt& s, std::set<std::string>& out) {
  visit_stmts(s, [&](const Stmt& x) {
    if (x.kind == Stmt::Kind::Assign || x.kind == Stmt::Kind::In || x.kind == Stmt::Kind::Recv)
      for (const auto& t : x.targets) out.insert(t.var);
    if (x.kind == Stmt::Kind::Havoc)
      for (const auto& t : x.targets) out.insert(t.var);
  });
}

void stmt_reads(const Stmt& s, std::set<std::string>& out) {
  visit_stmts(s, [&](const Stmt& x) {
    for (const auto& e : x.exprs)
      if (e) collect_names(*e, out);
    for (const auto& t : x.targets)
      if (t.index) collect_names(*t.index, out);
  });
}

ReceptionLoop analyze_loop(const Protocol& p, const Stmt& loop, std::vector<Diagnostic>& diags) {
  ReceptionLoop r;
  r.loop = &loop;
  r.loc = loop.loc;
  std::set<std::string> bound;
  visit_stmts(loop.body[0], [&](const Stmt& x) {
    if (x.kind == Stmt::Kind::Recv)
      for (const auto& t : x.targets) bound.insert(t.var);
  });
  std::set<std::string> written;
  assigned_vars(loop.body[0], written);
  for (const auto& v : written) {
    if (bound.count(v)) continue;
    if (!p.decls.is_message_typed(v)) {
      diags.push_back({Diagnostic::Severity::Error, loop.loc,
                       "reception loop writes non-message variable '" + v + "'"});
    }
    r.written_vars.insert(v);
  }
  for (const Stmt& s : items_of(loop.body[0])) {
    if (s.kind == Stmt::Kind::If && is_single_break(s.body[0]) && s.body[1].is_empty_seq()) {
      std::vector<ExprPtr> ds;
      disjuncts(s.exprs[0], ds);
      for (const auto& d : ds) {
        if (is_timeout_call(d)) {
          r.has_timeout_exit = true;
          continue;
        }
        std::set<std::string> names;
        collect_names(*d, names);
        for (const auto& nm : names) {
          if (p.decls.var(nm) && !r.written_vars.count(nm)) {
            diags.push_back({Diagnostic::Severity::Error, s.loc,
                             "exit condition reads '" + nm + "', which the loop does not write"});
          }
        }
        r.exit_conds.push_back(d);
      }
      continue;
    }
    bool stray = false;
    visit_stmts(s, [&](const Stmt& x) {
      if (x.kind == Stmt::Kind::Break || x.kind == Stmt::Kind::Continue) stray = true;
    });
    if (stray)
      diags.push_back({Diagnostic::Severity::Error, s.loc,
                       "reception loop exits outside an `if cond { break; }` statement"});
  }
  if (r.exit_conds.empty() && !r.has_timeout_exit)
    diags.push_back({Diagnostic::Severity::Error, loop.loc, "reception loop has no exit"});
  return r;
}

void find_loops(const Protocol& p, const Stmt& s, bool in_loop, std::vector<ReceptionLoop>& out,
                std::vector<Diagnostic>& diags) {
  if (s.kind == Stmt::Kind::Recv && !in_loop)
    diags.push_back({Diagnostic::Severity::Error, s.loc, "recv outside a loop"});
  if (s.kind == Stmt::Kind::While) {
    if (direct_recv(s.body[0])) {
      out.push_back(analyze_loop(p, s, diags));
      return;
    }
    find_loops(p, s.body[0], true, out, diags);
    return;
  }
  for (const auto& c : s.body) find_loops(p, c, in_loop, out, diags);
}

// Replaces timeout() in `xs` up to the next reset_timeout on each path.
bool substitute_timeout(std::vector<Stmt>& xs, const ExprPtr& by) {
  for (auto& x : xs) {
    if (x.kind == Stmt::Kind::ResetTimeout) return true;
    for (auto& e : x.exprs)
      if (e) e = replace_call(e, "timeout", by);
    for (auto& l : x.targets)
      if (l.index) l.index = replace_call(l.index, "timeout", by);
    if (x.kind == Stmt::Kind::If) {
      for (auto& b : x.body) {
        auto items = items_of(b);
        substitute_timeout(items, by);
        b = Stmt::seq(std::move(items));
      }
    }
  }
  return false;
}

// Rewrites one block; siblings after a reception loop see its exit condition.
std::vector<Stmt> replace_in_block(const Protocol& p, std::vector<Stmt> items) {
  std::vector<Stmt> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    Stmt s = std::move(items[i]);
    if (s.kind == Stmt::Kind::While && direct_recv(s.body[0])) {
      std::vector<Diagnostic> diags;
      ReceptionLoop r = analyze_loop(p, s, diags);
      if (!diags.empty()) throw RewriteError("replace_reception_loops", diags[0].loc, diags[0].message);
      Stmt h = Stmt::havoc({r.written_vars.begin(), r.written_vars.end()});
      h.loc = s.loc;
      out.push_back(std::move(h));
      std::vector<Stmt> rest(std::make_move_iterator(items.begin() + i + 1),
                             std::make_move_iterator(items.end()));
      ExprPtr exit = disjunction(r.exit_conds);
      if (r.has_timeout_exit) {
        auto tail = replace_in_block(p, std::move(rest));
        substitute_timeout(tail, Expr::negate(exit));
        for (auto& t : tail) out.push_back(std::move(t));
      } else {
        auto tail = replace_in_block(p, std::move(rest));
        if (!tail.empty()) {
          Stmt w = Stmt::if_(exit, Stmt::seq(std::move(tail)));
          w.loc = s.loc;
          out.push_back(std::move(w));
        }
      }
      return out;
    }
    for (auto& c : s.body) c = Stmt::seq(replace_in_block(p, items_of(c)));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<ReceptionLoop> find_reception_loops(const Protocol& p, std::vector<Diagnostic>* diags) {
  std::vector<ReceptionLoop> out;
  std::vector<Diagnostic> ds;
  find_loops(p, p.body, false, out, ds);
  if (diags) *diags = std::move(ds);
  return out;
}

Protocol replace_reception_loops(const Protocol& p) {
  std::vector<Diagnostic> diags;
  find_reception_loops(p, &diags);
  if (!diags.empty()) throw RewriteError("replace_reception_loops", diags[0].loc, diags[0].message);
  Protocol q = p;
  q.body = flatten(Stmt::seq(replace_in_block(p, items_of(p.body))));
  return q;
}

}  // namespace hoc

namespace hoc {

namespace {

struct TagPair {
  std::string ph, rd;  // protocol variables
  int slot = -1;       // slot of the phase sync var
};

/// The tag pair owned by a loop labeled `label` ("" for the main loop).
TagPair pair_for(const TagAnnotation& a, const std::string& label, SourceLoc loc, const char* stage) {
  auto it = a.tags.find(label);
  if (label.empty() || it == a.tags.end()) it = a.tags.find("*");
  if (it == a.tags.end()) throw RewriteError(stage, loc, "no tag map for this loop");
  for (std::size_t j = 0; j + 1 < a.sync_vars.size(); j += 2) {
    auto ph = it->second.find(a.sync_vars[j].name);
    auto rd = it->second.find(a.sync_vars[j + 1].name);
    if (ph != it->second.end() && rd != it->second.end())
      return {ph->second, rd->second, static_cast<int>(j)};
  }
  throw RewriteError(stage, loc, "loop has no (phase, round) tag pair");
}

bool is_increment(const ExprPtr& e, const std::string& var) {
  return e->kind == Expr::Kind::Binary && e->text == "+" && e->args[0]->kind == Expr::Kind::Name &&
         e->args[0]->text == var && e->args[1]->kind == Expr::Kind::Int && e->args[1]->ival == 1;
}

void jump_sites_in(const TagAnnotation& a, const Stmt& s, const std::string& scope,
                   std::vector<JumpSite>& out) {
  if (s.kind == Stmt::Kind::While) {
    std::string inner = s.label.empty() ? scope : s.label;
    jump_sites_in(a, s.body[0], inner, out);
    return;
  }
  if (s.kind == Stmt::Kind::Assign && !scope.empty()) {
    auto map = a.location_map(scope == "<main>" ? std::string() : scope);
    for (std::size_t j = 0; j < a.sync_vars.size(); j += 2) {
      auto it = map.find(a.sync_vars[j].name);
      if (it == map.end()) continue;
      for (std::size_t k = 0; k < s.targets.size(); ++k) {
        if (s.targets[k].var == it->second && !is_increment(s.exprs[k], it->second))
          out.push_back({s.loc, it->second, s.exprs[k]});
      }
    }
  }
  for (const auto& c : s.body) jump_sites_in(a, c, scope, out);
}

std::string camel(const std::string& label) {
  std::string r;
  bool up = true;
  for (char c : label) {
    if (c == '_') {
      up = true;
      continue;
    }
    r += up ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
    up = false;
  }
  return r;
}

struct Site {
  Stmt* loop;
  std::vector<Stmt>* block;
  std::size_t index;
};

void collect_sites(std::vector<Stmt>& block, std::vector<Site>& out) {
  for (std::size_t i = 0; i < block.size(); ++i) {
    Stmt& s = block[i];
    if (s.kind == Stmt::Kind::While) {
      out.push_back({&s, &block, i});
      continue;
    }
    for (auto& c : s.body) {
      if (c.kind != Stmt::Kind::Seq) c = Stmt::seq({c});
      collect_sites(c.body, out);
    }
  }
}

}  // namespace

std::vector<JumpSite> find_jump_sites(const Protocol& p, const TagAnnotation& a) {
  std::vector<JumpSite> out;
  // only locations inside some loop carry tags
  for (const Stmt& s : items_of(p.body))
    if (s.kind == Stmt::Kind::While)
      jump_sites_in(a, s.body[0], s.label.empty() ? "<main>" : s.label, out);
  return out;
}

Protocol normalize_jumps(const Protocol& p, const TagAnnotation& a, std::vector<JumpSite>* sites) {
  auto js = find_jump_sites(p, a);
  // a jump must open its block: nothing of the skipped rounds may run before it
  std::function<void(const Stmt&)> go = [&](const Stmt& s) {
    auto xs = items_of(s);
    bool before = false;
    for (const auto& x : xs) {
      if (x.kind == Stmt::Kind::Assign) {
        for (const auto& j : js) {
          if (j.loc.line == x.loc.line && j.loc.col == x.loc.col && before)
            throw RewriteError("normalize_jumps", x.loc, "jump to '" + j.var + "' does not open its block");
        }
      }
      if (x.kind != Stmt::Kind::If && x.kind != Stmt::Kind::While) before = true;
      for (const auto& c : x.body) go(c);
    }
  };
  go(p.body);
  if (sites) *sites = js;
  return p;
}

Protocol lift_nested_loops(const Protocol& p, const TagAnnotation& a, std::vector<LiftedLoop>* subs) {
  const char* stage = "lift_nested_loops";
  Protocol q = p;
  q.body = flatten(q.body);
  if (q.body.kind != Stmt::Kind::Seq) q.body = Stmt::seq({q.body});
  Stmt* main = nullptr;
  for (auto& s : q.body.body)
    if (s.kind == Stmt::Kind::While) main = &s;
  if (!main) throw RewriteError(stage, p.body.loc, "protocol has no main loop");
  Stmt& mb = main->body[0];
  if (mb.kind != Stmt::Kind::Seq) mb = Stmt::seq({mb});
  std::vector<Site> sites;
  collect_sites(mb.body, sites);
  if (sites.empty()) return q;

  std::map<std::set<std::string>, std::vector<Site>> groups;
  for (const auto& s : sites) {
    const Stmt& l = *s.loop;
    if (l.label.empty() || !a.tags.count(l.label))
      throw RewriteError(stage, l.loc, "nested loop has no sync vars of its own");
    std::set<std::string> key;
    for (const auto& kv : a.tags.at(l.label)) key.insert(kv.first);
    for (auto& inner : items_of(l.body[0]))
      if (inner.kind == Stmt::Kind::While)
        throw RewriteError(stage, inner.loc, "loops nested more than two deep");
    groups[key].push_back(s);
  }

  std::vector<LiftedLoop> lifted;
  for (auto& [key, group] : groups) {
    const std::string scope = group[0].loop->label;
    TagPair tp = pair_for(a, scope, group[0].loop->loc, stage);
    LiftedLoop L;
    L.name = camel(scope);
    L.scope = scope;
    L.body.name = L.name;
    L.body.decls = p.decls;
    const bool merged = group.size() > 1;
    if (merged) L.body.decls.vars.push_back({"role", TypeRef{TypeRef::Kind::Int, {}}, nullptr, true});

    std::vector<std::vector<Stmt>> bodies;
    std::optional<Stmt> pre;
    for (std::size_t g = 0; g < group.size(); ++g) {
      Site& s = group[g];
      bodies.push_back(items_of(s.loop->body[0]));
      L.sites.push_back(s.loop->loc);
      for (std::size_t k = s.index; k-- > 0;) {
        const Stmt& x = (*s.block)[k];
        bool sets_ph = false;
        for (const auto& t : x.targets) sets_ph |= x.kind == Stmt::Kind::Assign && t.var == tp.ph;
        if (sets_ph) {
          if (pre && !same_stmt(*pre, x))
            throw RewriteError(stage, x.loc, "merged loops start from different tags");
          pre = x;
          break;
        }
      }
    }
    std::vector<Stmt> loop_body;
    if (merged) {
      for (std::size_t g = 1; g < bodies.size(); ++g)
        if (bodies[g].empty() || bodies[0].empty() || !same_stmt(bodies[g][0], bodies[0][0]))
          throw RewriteError(stage, group[g].loop->loc, "merged loops do not start with the same increment");
      loop_body.push_back(bodies[0][0]);
      Stmt chain = Stmt::seq(std::vector<Stmt>(bodies.back().begin() + 1, bodies.back().end()));
      for (std::size_t g = bodies.size() - 1; g-- > 0;) {
        chain = Stmt::if_(Expr::binary("==", Expr::name("role"), Expr::integer(static_cast<std::int64_t>(g))),
                          Stmt::seq(std::vector<Stmt>(bodies[g].begin() + 1, bodies[g].end())), std::move(chain));
      }
      loop_body.push_back(std::move(chain));
    } else {
      loop_body = bodies[0];
    }
    std::vector<Stmt> sub_items;
    if (pre) sub_items.push_back(*pre);
    sub_items.push_back(Stmt::while_(Stmt::seq(std::move(loop_body)), scope));
    sub_items.back().loc = group[0].loop->loc;
    L.body.body = Stmt::seq(std::move(sub_items));

    std::set<std::string> written;
    assigned_vars(L.body.body, written);
    auto msg_vars = p.message_class_vars();
    auto tvars = a.tag_vars();
    for (const auto& v : p.decls.vars) {
      if (written.count(v.name) && !msg_vars.count(v.name) && !tvars.count(v.name)) L.returns.push_back(v.name);
    }
    std::set<std::string> read;
    stmt_reads(L.body.body, read);
    const TagPair outer = pair_for(a, "", main->loc, stage);
    if (read.count(outer.ph)) L.params.push_back(outer.ph);
    for (std::size_t g = 0; g < group.size(); ++g) {
      Stmt call = Stmt::simple(Stmt::Kind::Call);
      call.label = L.name;
      call.loc = group[g].loop->loc;
      if (merged) {
        call.names.push_back("role");
        call.exprs.push_back(Expr::integer(static_cast<std::int64_t>(g)));
      }
      for (const auto& v : L.params) {
        call.names.push_back(v);
        call.exprs.push_back(Expr::name(v));
      }
      *group[g].loop = std::move(call);
    }
    lifted.push_back(std::move(L));
  }
  q.body = flatten(q.body);
  if (subs) *subs = std::move(lifted);
  return q;
}

}  // namespace hoc

namespace hoc {

namespace {

using Code = std::vector<std::vector<Stmt>>;  // statements per round

bool ends_path(Stmt::Kind k) {
  return k == Stmt::Kind::Break || k == Stmt::Kind::Continue || k == Stmt::Kind::Exit;
}

// Pushes the statements after each If into both of its branches, so that
// every node of the result has one position in the round sequence.
std::vector<Stmt> absorb(std::vector<Stmt> seq) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (ends_path(seq[i].kind)) {
      seq.resize(i + 1);
      break;
    }
  }
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i].kind != Stmt::Kind::If) continue;
    std::vector<Stmt> rest(seq.begin() + i + 1, seq.end());
    for (int b = 0; b < 2; ++b) {
      auto xs = items_of(seq[i].body[b]);
      xs.insert(xs.end(), rest.begin(), rest.end());
      seq[i].body[b] = Stmt::seq(absorb(std::move(xs)));
    }
    seq.resize(i + 1);
    break;
  }
  return seq;
}

bool code_empty(const Code& c, std::size_t from) {
  for (std::size_t i = from; i < c.size(); ++i)
    if (!c[i].empty()) return false;
  return true;
}

struct Extractor {
  const Protocol& p;
  const TagAnnotation& a;
  bool sub;
  TagPair tp;
  std::shared_ptr<const EnumDecl> rounds;
  std::set<std::string> foreign;
  std::vector<VarDecl> aux;
  std::map<std::string, int> aux_count;
  static constexpr const char* stage = "extract_rounds";

  ExprPtr x(const ExprPtr& e, int cur, SourceLoc loc) const {
    if (!e) return e;
    std::map<std::string, ExprPtr> sub_map{{tp.ph, Expr::call("phase", {})}};
    if (cur >= 0) sub_map[tp.rd] = Expr::name(rounds->literals[static_cast<std::size_t>(cur)]);
    ExprPtr r = substitute(e, sub_map);
    std::set<std::string> names;
    collect_names(*r, names);
    for (const auto& nm : names) {
      if (foreign.count(nm) || nm == tp.rd)
        throw RewriteError(stage, loc, "tag variable '" + nm + "' is read outside its rounds");
    }
    if (mentions_call(*r, "timeout"))
      throw RewriteError(stage, loc, "timeout() read outside the scope of a reception loop");
    return r;
  }

  std::string fresh_old(const ExprPtr& cond) {
    std::set<std::string> names;
    collect_names(*cond, names);
    std::string base = "c";
    for (const auto& nm : names) {
      if (p.decls.var(nm)) {
        base = nm;
        break;
      }
    }
    std::string name;
    do {
      name = "old_" + base + std::to_string(++aux_count[base]);
    } while (p.decls.var(name));
    aux.push_back({name, TypeRef{TypeRef::Kind::Bool, {}}, Expr::boolean(false), true});
    return name;
  }

  void emit(Code& out, int cur, Stmt s) const {
    if (cur < 0) throw RewriteError(stage, s.loc, "statement runs before the first round is entered");
    out[static_cast<std::size_t>(cur)].push_back(std::move(s));
  }

  void walk(const std::vector<Stmt>& seq, int cur, Code& out) {
    for (const Stmt& s : seq) {
      switch (s.kind) {
        case Stmt::Kind::Assign: {
          int next = cur;
          std::vector<LValue> lt;
          std::vector<ExprPtr> le;
          for (std::size_t k = 0; k < s.targets.size(); ++k) {
            const LValue& t = s.targets[k];
            const ExprPtr& e = s.exprs[k];
            if (t.var == tp.rd) {
              int idx = e->kind == Expr::Kind::Name ? rounds->ordinal_of(e->text) : -1;
              if (idx < 0) throw RewriteError(stage, s.loc, "round tag assigned a non-literal value");
              if (idx < cur) throw RewriteError(stage, s.loc, "round tag moves backwards");
              next = idx;
            } else if (t.var == tp.ph || foreign.count(t.var)) {
              continue;
            } else if (!t.index && p.decls.var(t.var) && p.decls.var(t.var)->type.kind == TypeRef::Kind::Mbox &&
                       e->kind == Expr::Kind::EmptySet) {
              continue;  // mailbox clear
            } else {
              lt.push_back({t.var, x(t.index, cur, s.loc)});
              le.push_back(x(e, cur, s.loc));
            }
          }
          if (!lt.empty()) {
            Stmt o = Stmt::assign(std::move(lt), std::move(le));
            o.loc = s.loc;
            emit(out, cur, std::move(o));
          }
          cur = next;
          break;
        }
        case Stmt::Kind::Havoc:
          for (const auto& t : s.targets) {
            Stmt o = Stmt::assign1(t.var, Expr::name("mb"));
            o.loc = s.loc;
            emit(out, cur, std::move(o));
          }
          break;
        case Stmt::Kind::ResetTimeout:
          break;
        case Stmt::Kind::Send:
        case Stmt::Kind::Out:
        case Stmt::Kind::Call:
        case Stmt::Kind::In: {
          Stmt o = s;
          for (auto& e : o.exprs) e = x(e, cur, s.loc);
          for (auto& t : o.targets) t.index = x(t.index, cur, s.loc);
          emit(out, cur, std::move(o));
          break;
        }
        case Stmt::Kind::If: {
          Code A(out.size()), B(out.size());
          walk(items_of(s.body[0]), cur, A);
          walk(items_of(s.body[1]), cur, B);
          ExprPtr c = x(s.exprs[0], cur, s.loc);
          if (cur < 0) throw RewriteError(stage, s.loc, "branch before the first round is entered");
          const auto uc = static_cast<std::size_t>(cur);
          if (!code_empty(A, uc + 1) || !code_empty(B, uc + 1)) {
            std::string v = fresh_old(s.exprs[0]);
            Stmt o = Stmt::assign1(v, c);
            o.loc = s.loc;
            out[uc].push_back(std::move(o));
            for (std::size_t l = uc + 1; l < out.size(); ++l) {
              if (A[l].empty() && B[l].empty()) continue;
              Stmt g = Stmt::if_(Expr::name(v), Stmt::seq(std::move(A[l])), Stmt::seq(std::move(B[l])));
              g.loc = s.loc;
              out[l].push_back(std::move(g));
            }
          }
          if (!A[uc].empty() || !B[uc].empty()) {
            Stmt g = Stmt::if_(c, Stmt::seq(std::move(A[uc])), Stmt::seq(std::move(B[uc])));
            g.loc = s.loc;
            out[uc].push_back(std::move(g));
          }
          return;  // absorb() moved the rest inside
        }
        case Stmt::Kind::Break:
          if (!sub) throw RewriteError(stage, s.loc, "break out of the main loop");
          {
            Stmt o = Stmt::simple(Stmt::Kind::Exit);
            o.loc = s.loc;
            emit(out, cur, std::move(o));
          }
          return;
        case Stmt::Kind::Continue:
          return;
        case Stmt::Kind::Exit:
          emit(out, cur, s);
          return;
        case Stmt::Kind::Recv:
          throw RewriteError(stage, s.loc, "recv left after reception loops were replaced");
        case Stmt::Kind::While:
          throw RewriteError(stage, s.loc, "nested loop left after lifting");
        case Stmt::Kind::Seq:
          walk(items_of(s), cur, out);
          break;
      }
    }
  }
};

std::vector<Stmt> prune(const std::vector<Stmt>& xs, bool keep_send) {
  std::vector<Stmt> r;
  for (const Stmt& s : xs) {
    if (s.kind == Stmt::Kind::If) {
      auto a = prune(items_of(s.body[0]), keep_send);
      auto b = prune(items_of(s.body[1]), keep_send);
      if (a.empty() && b.empty()) continue;
      Stmt g = Stmt::if_(s.exprs[0], Stmt::seq(std::move(a)), Stmt::seq(std::move(b)));
      g.loc = s.loc;
      r.push_back(std::move(g));
    } else if ((s.kind == Stmt::Kind::Send) == keep_send) {
      r.push_back(s);
    }
  }
  return r;
}

// A send may not depend on anything the same round updated before it.
void check_send_first(const std::vector<Stmt>& code, const std::string& round) {
  Stmt body = Stmt::seq(code);
  for (const CfgPath& path : cfg_paths(body)) {
    std::set<std::string> written;
    bool tainted = false;
    for (const PathStep& st : path.steps) {
      const Stmt& s = *st.stmt;
      std::set<std::string> reads;
      for (const auto& e : s.exprs)
        if (e) collect_names(*e, reads);
      bool hit = std::any_of(reads.begin(), reads.end(), [&](const std::string& v) { return written.count(v) > 0; });
      if (s.kind == Stmt::Kind::If) {
        tainted |= hit;
      } else if (s.kind == Stmt::Kind::Send) {
        if (hit || tainted)
          throw RewriteError("extract_rounds", s.loc, "send in round " + round + " follows an update it depends on");
      } else {
        for (const auto& t : s.targets) written.insert(t.var);
      }
    }
  }
}

std::string payload_type_of(const std::vector<Stmt>& code, const Protocol& p) {
  std::string r;
  for (const auto& s : code) {
    visit_stmts(s, [&](const Stmt& x) {
      if (!r.empty()) return;
      if (x.kind == Stmt::Kind::Send && x.exprs[0]->kind == Expr::Kind::Call) r = x.exprs[0]->text;
      if (x.kind == Stmt::Kind::Assign && x.exprs.size() == 1 && x.exprs[0]->kind == Expr::Kind::Name &&
          x.exprs[0]->text == "mb") {
        if (const VarDecl* v = p.decls.var(x.targets[0].var)) r = v->type.name;
      }
    });
    if (!r.empty()) break;
  }
  if (r.empty() && !p.decls.msgs.empty()) r = p.decls.msgs[0]->name;
  return r;
}

void stmt_names(const Stmt& s, std::set<std::string>& out) {
  visit_stmts(s, [&](const Stmt& x) {
    for (const auto& e : x.exprs)
      if (e) collect_names(*e, out);
    for (const auto& t : x.targets) {
      out.insert(t.var);
      if (t.index) collect_names(*t.index, out);
    }
    for (const auto& n : x.names) out.insert(n);
  });
}

void report_lines(const Stmt& s, const std::string& proto, std::size_t pos, const std::string& round,
                  const std::string& part, std::vector<ReportLine>& out) {
  std::set<int> lines;
  visit_stmts(s, [&](const Stmt& x) {
    if (x.kind != Stmt::Kind::Seq && x.loc.line > 0) lines.insert(x.loc.line);
  });
  for (int l : lines) out.push_back({l, proto, pos, round, part});
}

}  // namespace

CompHOProtocol extract_rounds(const Protocol& p, const TagAnnotation& a, std::vector<ReportLine>* report,
                              bool sub, const std::set<std::string>& params) {
  const char* stage = "extract_rounds";
  auto items = items_of(p.body);
  std::vector<Stmt> pre;
  const Stmt* loop = nullptr;
  for (const auto& s : items) {
    if (loop) throw RewriteError(stage, s.loc, "statement after the main loop");
    if (s.kind == Stmt::Kind::While)
      loop = &s;
    else
      pre.push_back(s);
  }
  if (!loop) throw RewriteError(stage, p.body.loc, "protocol has no main loop");

  Extractor ex{p, a, sub, pair_for(a, sub ? loop->label : std::string(), loop->loc, stage), nullptr, {}, {}, {}};
  const VarDecl* rdv = p.decls.var(ex.tp.rd);
  if (!rdv || rdv->type.kind != TypeRef::Kind::Enum)
    throw RewriteError(stage, loop->loc, "round tag '" + ex.tp.rd + "' is not enum-typed");
  ex.rounds = p.decls.enum_type(rdv->type.name);
  for (const auto& v : a.tag_vars())
    if (v != ex.tp.ph && v != ex.tp.rd && !params.count(v)) ex.foreign.insert(v);

  auto body = items_of(loop->body[0]);
  if (body.empty() || body[0].kind != Stmt::Kind::Assign)
    throw RewriteError(stage, loop->loc, "loop does not start by incrementing the phase tag");
  bool inc = false, rd_set = false;
  for (std::size_t k = 0; k < body[0].targets.size(); ++k) {
    inc |= body[0].targets[k].var == ex.tp.ph && is_increment(body[0].exprs[k], ex.tp.ph);
    rd_set |= body[0].targets[k].var == ex.tp.rd;
  }
  if (!inc || !rd_set)
    throw RewriteError(stage, body[0].loc, "loop does not start with `" + ex.tp.ph + ", " + ex.tp.rd +
                                               " = " + ex.tp.ph + " + 1, <first round>`");

  const std::size_t R = ex.rounds->literals.size();
  Code code(R);
  ex.walk(absorb(std::move(body)), -1, code);

  CompHOProtocol out;
  out.name = p.name;
  out.decls.enums = p.decls.enums;
  out.decls.msgs = p.decls.msgs;

  std::int64_t ph_init = 0;
  if (const VarDecl* v = p.decls.var(ex.tp.ph); v && v->init) {
    if (v->init->kind != Expr::Kind::Int) throw RewriteError(stage, loop->loc, "phase tag starts from a non-constant");
    ph_init = v->init->ival;
  }
  std::vector<Stmt> init;
  for (const auto& s : pre) {
    if (s.kind != Stmt::Kind::Assign) {
      init.push_back(s);
      continue;
    }
    std::vector<LValue> lt;
    std::vector<ExprPtr> le;
    for (std::size_t k = 0; k < s.targets.size(); ++k) {
      const auto& t = s.targets[k];
      if (t.var == ex.tp.ph) {
        if (s.exprs[k]->kind != Expr::Kind::Int)
          throw RewriteError(stage, s.loc, "phase tag starts from a non-constant");
        ph_init = s.exprs[k]->ival;
      } else if (t.var != ex.tp.rd && !ex.foreign.count(t.var)) {
        lt.push_back(t);
        le.push_back(s.exprs[k]);
      }
    }
    if (!lt.empty()) {
      Stmt o = Stmt::assign(std::move(lt), std::move(le));
      o.loc = s.loc;
      init.push_back(std::move(o));
    }
  }
  out.init = Stmt::seq(std::move(init));
  out.phase_base = Expr::integer(ph_init + 1);

  for (std::size_t l = 0; l < R; ++l) {
    const std::string& rn = ex.rounds->literals[l];
    check_send_first(code[l], rn);
    Round r;
    r.name = rn;
    r.payload_type = payload_type_of(code[l], p);
    r.send = Stmt::seq(prune(code[l], true));
    r.update = Stmt::seq(prune(code[l], false));
    if (report) {
      report_lines(r.send, p.name, l, rn, "send", *report);
      report_lines(r.update, p.name, l, rn, "update", *report);
    }
    out.rounds.push_back(std::move(r));
  }
  if (report) report_lines(out.init, p.name, 0, "", "init", *report);

  std::set<std::string> used;
  stmt_names(out.init, used);
  for (const auto& r : out.rounds) {
    stmt_names(r.send, used);
    stmt_names(r.update, used);
  }
  for (const auto& v : p.decls.vars) {
    if (v.name == ex.tp.ph || v.name == ex.tp.rd || ex.foreign.count(v.name)) continue;
    if (used.count(v.name)) out.decls.vars.push_back(v);
  }
  for (auto& v : ex.aux) out.decls.vars.push_back(std::move(v));
  return out;
}

}  // namespace hoc

namespace hoc {

RewriteResult make_compho(const Protocol& p, const TagAnnotation& a) {
  RewriteResult r;
  std::vector<Diagnostic> diags;
  r.reception_loops = find_reception_loops(p, &diags);
  if (!diags.empty()) throw RewriteError("find_reception_loops", diags[0].loc, diags[0].message);
  diags = check_annotation(a, p.decls);
  if (!diags.empty()) throw RewriteError("check_annotation", diags[0].loc, diags[0].message);

  Protocol q = replace_reception_loops(p);
  q = normalize_jumps(q, a, &r.jumps);
  std::vector<LiftedLoop> lifted;
  q = lift_nested_loops(q, a, &lifted);
  r.compho = extract_rounds(q, a, &r.report, false);

  const auto tvars = a.tag_vars();
  std::set<std::string> needed;
  for (const auto& v : r.compho.decls.vars) needed.insert(v.name);
  for (auto& L : lifted) {
    CompHOProtocol s = extract_rounds(L.body, a, &r.report, true, {L.params.begin(), L.params.end()});
    s.name = L.name;
    s.returns = L.returns;
    for (const auto& ret : L.returns) {
      if (s.decls.var(ret)) continue;
      if (const VarDecl* v = p.decls.var(ret)) s.decls.vars.push_back(*v);
    }
    for (const auto& v : s.decls.vars)
      if (!v.aux && p.decls.var(v.name) && !tvars.count(v.name)) needed.insert(v.name);
    r.compho.subs.push_back(std::move(s));
  }
  // Sub-protocols copy caller locals by name, so the caller keeps them.
  std::vector<VarDecl> vars;
  for (const auto& v : p.decls.vars)
    if (needed.count(v.name)) vars.push_back(v);
  for (const auto& v : r.compho.decls.vars)
    if (v.aux && !p.decls.var(v.name)) vars.push_back(v);
  r.compho.decls.vars = std::move(vars);

  diags = validate(r.compho);
  if (!diags.empty()) throw RewriteError("make_compho", diags[0].loc, diags[0].message);
  std::sort(r.report.begin(), r.report.end(), [](const ReportLine& x, const ReportLine& y) {
    return std::tie(x.line, x.protocol, x.position, x.part) < std::tie(y.line, y.protocol, y.position, y.part);
  });
  return r;
}

std::string format_report(const std::vector<ReportLine>& r) {
  std::ostringstream os;
  for (const auto& l : r) {
    os << "line " << l.line << ": " << l.protocol;
    if (l.part == "init")
      os << " init\n";
    else
      os << " round " << l.position << " (" << l.round << ") " << l.part << "\n";
  }
  return os.str();
}

}  // namespace hoc
