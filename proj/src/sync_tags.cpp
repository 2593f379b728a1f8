#include "hoc/sync_tags.hpp"

#include <algorithm>
#include <sstream>

namespace hoc {

namespace {

std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && issp(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw std::invalid_argument("annotation line " + std::to_string(line) + ": " + msg);
}

SyncVar parse_domain(const std::string& name, const std::string& text, int line) {
  SyncVar v;
  v.name = name;
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  if (kind == "enum") {
    v.domain = SyncVar::Domain::Enum;
    if (!(in >> v.enum_name)) fail(line, "enum domain needs a type name");
  } else if (kind == "int") {
    std::string range;
    if (in >> range) {
      auto dots = range.find("..");
      if (dots == std::string::npos) fail(line, "expected a range lo..hi");
      try {
        v.lo = std::stoll(range.substr(0, dots));
        v.hi = std::stoll(range.substr(dots + 2));
      } catch (const std::exception&) {
        fail(line, "bad range '" + range + "'");
      }
      if (*v.lo > *v.hi) fail(line, "empty range");
    }
  } else {
    fail(line, "unknown domain '" + kind + "'");
  }
  return v;
}

}  // namespace

TagAnnotation TagAnnotation::parse(const std::string& text) {
  TagAnnotation a;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "sync" && section != "tags" && section.rfind("tags.", 0) != 0 &&
          section.rfind("tagm.", 0) != 0)
        fail(line, "unknown section '" + section + "'");
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (key.empty() || val.empty()) fail(line, "expected key = value");
    if (section.empty()) fail(line, "entry outside a section");
    if (section == "sync") {
      if (a.slot(key) >= 0) fail(line, "duplicate sync var '" + key + "'");
      a.sync_vars.push_back(parse_domain(key, val, line));
      continue;
    }
    if (a.slot(key) < 0) fail(line, "unknown sync var '" + key + "'");
    std::map<std::string, std::string>* target;
    if (section == "tags")
      target = &a.tags["*"];
    else if (section.rfind("tags.", 0) == 0)
      target = &a.tags[section.substr(5)];
    else
      target = &a.tagm[section.substr(5)];
    for (const auto& [k, v] : *target)
      if (v == val) fail(line, "map is not injective: '" + val + "' is already mapped");
    if (!target->emplace(key, val).second) fail(line, "duplicate entry for '" + key + "'");
  }
  if (a.sync_vars.empty()) fail(line, "no [sync] variables declared");
  return a;
}

int TagAnnotation::slot(const std::string& sync_var) const {
  for (std::size_t i = 0; i < sync_vars.size(); ++i)
    if (sync_vars[i].name == sync_var) return static_cast<int>(i);
  return -1;
}

std::map<std::string, std::string> TagAnnotation::location_map(const std::string& scope) const {
  std::map<std::string, std::string> out;
  if (auto it = tags.find("*"); it != tags.end()) out = it->second;
  if (!scope.empty())
    if (auto it = tags.find(scope); it != tags.end())
      for (const auto& [k, v] : it->second) out[k] = v;
  return out;
}

std::set<std::string> TagAnnotation::tag_vars() const {
  std::set<std::string> out;
  for (const auto& [loc, m] : tags)
    for (const auto& [k, v] : m) out.insert(v);
  return out;
}

std::vector<int> TagAnnotation::msg_slots(const std::string& type) const {
  std::vector<int> out;
  auto it = tagm.find(type);
  if (it == tagm.end()) return out;
  for (const auto& [k, v] : it->second) out.push_back(slot(k));
  std::sort(out.begin(), out.end());
  return out;
}

std::string tag_to_string(const TagValue& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) s += ", ";
    s += t[i].is_none() ? "_" : t[i].to_string();
  }
  return s + ")";
}

std::vector<Diagnostic> check_annotation(const TagAnnotation& a, const Decls& d) {
  std::vector<Diagnostic> out;
  auto err = [&](std::string msg) {
    out.push_back(Diagnostic{Diagnostic::Severity::Error, {}, std::move(msg)});
  };
  for (const auto& sv : a.sync_vars)
    if (sv.domain == SyncVar::Domain::Enum && !d.enum_type(sv.enum_name))
      err("sync var '" + sv.name + "' uses unknown enum '" + sv.enum_name + "'");
  for (const auto& [loc, m] : a.tags)
    for (const auto& [k, v] : m) {
      const VarDecl* var = d.var(v);
      if (!var) {
        err("tags: '" + k + "' maps to undeclared variable '" + v + "'");
        continue;
      }
      const auto& sv = a.sync_vars[static_cast<std::size_t>(a.slot(k))];
      bool ok = sv.domain == SyncVar::Domain::Enum
                    ? var->type.kind == TypeRef::Kind::Enum && var->type.name == sv.enum_name
                    : var->type.kind == TypeRef::Kind::Int;
      if (!ok) err("tags: type of '" + v + "' does not match the domain of '" + k + "'");
    }
  for (const auto& [type, m] : a.tagm) {
    auto msg = d.msg(type);
    if (!msg) {
      err("tagm: unknown message type '" + type + "'");
      continue;
    }
    for (const auto& [k, f] : m)
      if (msg->index_of(f) < 0) err("tagm: message " + type + " has no field '" + f + "'");
  }
  return out;
}

TagValue eval_state_tag(const TagAnnotation& a, const Decls& d, const std::vector<Value>& vars,
                        const std::string& scope) {
  TagValue t(a.sync_vars.size());
  for (const auto& [k, v] : a.location_map(scope)) {
    int i = d.var_index(v);
    if (i >= 0) t[static_cast<std::size_t>(a.slot(k))] = vars[static_cast<std::size_t>(i)];
  }
  return t;
}

TagValue eval_msg_tag(const TagAnnotation& a, const Value& payload) {
  if (payload.kind() != Value::Kind::Msg) throw EvalError("not a message: " + payload.to_string());
  auto it = a.tagm.find(payload.msg_type().name);
  if (it == a.tagm.end())
    throw EvalError("message type " + payload.msg_type().name + " has no tagm entry");
  TagValue t(a.sync_vars.size());
  for (const auto& [k, f] : it->second) t[static_cast<std::size_t>(a.slot(k))] = payload.field(f);
  return t;
}

std::pair<Value, Value> next_tag(const std::pair<Value, Value>& tag, const SyncVar& rd) {
  const auto& [a, b] = tag;
  if (b.kind() == Value::Kind::Enum) {
    auto type = b.enum_type_ptr();
    int last = static_cast<int>(type->literals.size()) - 1;
    if (b.ordinal() < last) return {a, Value::enumeration(type, b.ordinal() + 1)};
    return {Value::integer(a.as_int() + 1), Value::enumeration(type, 0)};
  }
  if (!rd.lo || !rd.hi) throw std::invalid_argument("round tag '" + rd.name + "' is unbounded");
  if (b.as_int() < *rd.hi) return {a, Value::integer(b.as_int() + 1)};
  return {Value::integer(a.as_int() + 1), Value::integer(*rd.lo)};
}

const char* condition_name(Violation::Condition c) {
  switch (c) {
    case Violation::Condition::I: return "I";
    case Violation::Condition::II: return "II";
    case Violation::Condition::III: return "III";
    case Violation::Condition::IV: return "IV";
    case Violation::Condition::Shape: return "compho-shape";
    case Violation::Condition::Incremental: return "incremental";
  }
  return "?";
}

namespace {

bool defined(const Value& v) { return !v.is_none(); }

TagValue restrict(const TagValue& t, const std::vector<int>& slots) {
  TagValue out;
  for (int i : slots) out.push_back(t[static_cast<std::size_t>(i)]);
  return out;
}

// Slots mapped for `type` that are also defined in the state tag.
std::vector<int> shared_slots(const TagAnnotation& a, const std::string& type, const TagValue& st) {
  std::vector<int> out;
  for (int i : a.msg_slots(type))
    if (defined(st[static_cast<std::size_t>(i)])) out.push_back(i);
  return out;
}

bool surjective(const TagAnnotation& a, const std::string& type, const TagValue& st) {
  auto ms = a.msg_slots(type);
  for (std::size_t i = 0; i < st.size(); ++i)
    if (defined(st[i]) && std::find(ms.begin(), ms.end(), static_cast<int>(i)) == ms.end())
      return false;
  return true;
}

struct Monitor {
  const AsyncMachine& m;
  const TagAnnotation& a;
  std::set<std::string> msg_class;
  std::set<std::string> tag_vars;

  Monitor(const AsyncMachine& mm, const TagAnnotation& aa)
      : m(mm), a(aa), msg_class(mm.program().protocol->message_class_vars()),
        tag_vars(aa.tag_vars()) {}

  const Decls& d() const { return m.decls(); }

  Violation make(Violation::Condition c, int p, const Instr& in, std::string why) const {
    Violation v;
    v.condition = c;
    v.process = p;
    v.loc = in.loc;
    v.explanation = std::move(why);
    return v;
  }

  void run(const AsyncState& before, const Action& act, const AsyncState& after,
           std::vector<Violation>& out) const {
    if (act.process < 0 || act.kind == Action::Kind::Crash) return;
    const int p = act.process;
    const auto& pb = before.procs[static_cast<std::size_t>(p)];
    const auto& pa = after.procs[static_cast<std::size_t>(p)];
    const Instr& in = m.program().code[static_cast<std::size_t>(pb.pc)];
    const Instr& in_after = m.program().code[static_cast<std::size_t>(pa.pc)];
    TagValue tb = eval_state_tag(a, d(), pb.vars, in.scope);
    TagValue ta = eval_state_tag(a, d(), pa.vars, in_after.scope);

    // I: monotonic on the common defined prefix.
    std::size_t k = 0;
    while (k < tb.size() && defined(tb[k]) && defined(ta[k])) ++k;
    if (std::lexicographical_compare(ta.begin(), ta.begin() + static_cast<long>(k), tb.begin(),
                                     tb.begin() + static_cast<long>(k)))
      out.push_back(make(Violation::Condition::I, p, in,
                         "state tag decreased from " + tag_to_string(tb) + " to " +
                             tag_to_string(ta)));

    // II: a sent message carries the state tag.
    if (act.kind == Action::Kind::Send) {
      Value payload = eval(*in.stmt->exprs[0], m.env_for(pb, p));
      TagValue mt = eval_msg_tag(a, payload);
      // slots the sending location leaves untagged are free
      std::vector<int> slots;
      for (int k : a.msg_slots(payload.msg_type().name))
        if (defined(tb[static_cast<std::size_t>(k)])) slots.push_back(k);
      if (restrict(mt, slots) != restrict(tb, slots))
        out.push_back(make(Violation::Condition::II, p, in,
                           "sent message tag " + tag_to_string(mt) + " differs from state tag " +
                               tag_to_string(tb)));
      else if (ta != tb)
        out.push_back(make(Violation::Condition::II, p, in, "send changed the state tag"));
    }

    // III: mailbox insertions.
    for (std::size_t i = 0; i < d().vars.size(); ++i) {
      if (d().vars[i].type.kind != TypeRef::Kind::Mbox) continue;
      const Value& vb = pb.vars[i];
      const Value& va = pa.vars[i];
      if (va.kind() != Value::Kind::Mbox || va == vb) continue;
      for (const auto& [key, msg] : va.entries()) {
        if (vb.kind() == Value::Kind::Mbox && !vb.get(key).is_none()) continue;
        const std::string& type = msg.msg_type().name;
        auto slots = shared_slots(a, type, tb);
        TagValue rm = restrict(eval_msg_tag(a, msg), slots);
        TagValue rs = restrict(tb, slots);
        bool surj = surjective(a, type, tb);
        if (surj ? rm < rs : rm != rs) {
          out.push_back(make(Violation::Condition::III, p, in,
                             "received message tag " + tag_to_string(eval_msg_tag(a, msg)) +
                                 (surj ? " is below" : " differs from") + " state tag " +
                                 tag_to_string(tb)));
          continue;
        }
        std::set<TagValue> future;
        for (const auto& [k2, m2] : va.entries()) {
          TagValue r = restrict(eval_msg_tag(a, m2), slots);
          if (r != rs) future.insert(r);
        }
        if (future.size() > 1)
          out.push_back(make(Violation::Condition::III, p, in,
                             "mailbox " + d().vars[i].name + " mixes more than one future tag"));
      }
    }

    // IV: observable steps happen at the tag of the received messages.
    bool trigger = act.kind == Action::Kind::Send || act.kind == Action::Kind::Out;
    if (in.op == Instr::Op::Jump &&
        (in.jump == Instr::JumpKind::Break || in.jump == Instr::JumpKind::Continue) &&
        in.reception < 0 && !m.program().is_reception[static_cast<std::size_t>(in.loop)])
      trigger = true;
    for (std::size_t i = 0; !trigger && i < d().vars.size(); ++i) {
      const auto& name = d().vars[i].name;
      if (msg_class.count(name) || tag_vars.count(name)) continue;
      if (!(pb.vars[i] == pa.vars[i])) trigger = true;
    }
    if (!trigger) return;
    for (std::size_t i = 0; i < d().vars.size(); ++i) {
      if (d().vars[i].type.kind != TypeRef::Kind::Mbox) continue;
      const Value& box = pb.vars[i];
      if (box.kind() != Value::Kind::Mbox || box.size() == 0) continue;
      const std::string& type = box.entries().front().second.msg_type().name;
      auto slots = shared_slots(a, type, tb);
      TagValue best;
      for (const auto& [key, msg] : box.entries()) {
        TagValue r = restrict(eval_msg_tag(a, msg), slots);
        if (best.empty() || best < r) best = r;
      }
      if (best != restrict(tb, slots))
        out.push_back(make(Violation::Condition::IV, p, in,
                           "state tag " + tag_to_string(tb) +
                               " is not the maximal tag in mailbox " + d().vars[i].name));
    }
  }

  // CompHO tag: at most one pair advances, by next or by a jump.
  // next, a later round of the same phase, or `ph = ph + 1` back to the first round
  bool incremental_step(const std::pair<Value, Value>& b, const std::pair<Value, Value>& c, std::size_t j,
                        const Instr& in) const {
    const SyncVar& rd = a.sync_vars[2 * j + 1];
    if (c == next_tag(b, rd)) return true;
    if (c.first == b.first) return true;
    if (c.first.kind() != Value::Kind::Int || c.first.as_int() != b.first.as_int() + 1) return false;
    const bool first_round = rd.domain == SyncVar::Domain::Enum ? c.second.ordinal() == 0
                                                                : c.second.as_int() == rd.lo.value_or(0);
    if (!first_round || !in.stmt || in.stmt->kind != Stmt::Kind::Assign) return false;
    auto map = a.location_map(in.scope);
    auto it = map.find(a.sync_vars[2 * j].name);
    if (it == map.end()) return false;
    for (std::size_t k = 0; k < in.stmt->targets.size(); ++k) {
      const auto& e = in.stmt->exprs[k];
      if (in.stmt->targets[k].var == it->second && e->kind == Expr::Kind::Binary && e->text == "+" &&
          e->args[0]->kind == Expr::Kind::Name && e->args[0]->text == it->second &&
          e->args[1]->kind == Expr::Kind::Int && e->args[1]->ival == 1)
        return true;
    }
    return false;
  }

  void run_compho(const AsyncState& before, const Action& act, const AsyncState& after,
                  std::vector<Violation>& out, std::size_t& jumps) const {
    if (act.process < 0 || act.kind == Action::Kind::Crash) return;
    const int p = act.process;
    const auto& pb = before.procs[static_cast<std::size_t>(p)];
    const auto& pa = after.procs[static_cast<std::size_t>(p)];
    const Instr& in = m.program().code[static_cast<std::size_t>(pb.pc)];
    TagValue tb = eval_state_tag(a, d(), pb.vars, in.scope);
    TagValue ta =
        eval_state_tag(a, d(), pa.vars, m.program().code[static_cast<std::size_t>(pa.pc)].scope);
    if (tb == ta) return;
    std::size_t pairs = tb.size() / 2;
    for (std::size_t j = 0; j < pairs; ++j) {
      std::pair<Value, Value> b{tb[2 * j], tb[2 * j + 1]}, c{ta[2 * j], ta[2 * j + 1]};
      if (b == c) continue;
      if (!defined(c.first) || !defined(c.second) || !defined(b.first) || !defined(b.second))
        return;  // entering or leaving the scope of this pair
      if (c < b) {
        out.push_back(make(Violation::Condition::Incremental, p, in,
                           "tag pair moved backwards from " + tag_to_string(tb) + " to " +
                               tag_to_string(ta)));
        return;
      }
      if (!incremental_step(b, c, j, in)) ++jumps;
      for (std::size_t r = j + 1; r < pairs; ++r) {
        bool reset = !defined(ta[2 * r]) && !defined(ta[2 * r + 1]);
        bool frozen = ta[2 * r] == tb[2 * r] && ta[2 * r + 1] == tb[2 * r + 1];
        if (!reset && !frozen)
          out.push_back(make(Violation::Condition::Incremental, p, in,
                             "inner tag pair changed while an outer pair advanced"));
      }
      return;
    }
  }
};

struct SyncVisitor : AsyncVisitor {
  const Monitor& mon;
  bool compho;
  std::map<Violation::Condition, Violation> first;
  std::size_t jumps = 0;
  bool first_only = false;

  SyncVisitor(const Monitor& m, bool c, bool f = false) : mon(m), compho(c), first_only(f) {}

  bool on_transition(const std::vector<Action>& path, const std::vector<AsyncState>&,
                     const AsyncState& before, const Action& a, const AsyncState& after) override {
    std::vector<Violation> found;
    if (compho)
      mon.run_compho(before, a, after, found, jumps);
    else
      mon.run(before, a, after, found);
    for (auto& v : found) {
      if (first.count(v.condition)) continue;
      v.witness = path;
      v.step = path.size() - 1;
      first.emplace(v.condition, std::move(v));
    }
    if (first_only) return first.empty();
    return compho ? first.empty() : first.size() < 4;
  }
};

TagVerdict finish(SyncVisitor& vis, EnumStats st, bool budget) {
  TagVerdict out;
  out.stats = st;
  out.budget_exceeded = budget;
  for (auto& [c, v] : vis.first) out.violations.push_back(std::move(v));
  out.pass = out.violations.empty() && !budget;
  out.jumps = vis.jumps;
  out.incremental = vis.jumps == 0;
  return out;
}

}  // namespace

std::vector<Violation> monitor_transition(const AsyncMachine& m, const TagAnnotation& a,
                                          const AsyncState& before, const Action& act,
                                          const AsyncState& after) {
  Monitor mon(m, a);
  std::vector<Violation> out;
  mon.run(before, act, after, out);
  return out;
}

namespace {

// The monitors read tags and mailboxes; every other dead variable is merged.
EnumOptions monitored(const AsyncMachine& m, const TagAnnotation& a, EnumOptions opt) {
  if (!opt.memo) return opt;
  opt.dead_vars = true;
  opt.keep = a.tag_vars();
  for (const auto& v : m.decls().vars)
    if (v.type.kind == TypeRef::Kind::Mbox) opt.keep.insert(v.name);
  return opt;
}

}  // namespace

EnumOptions tag_check_options() {
  EnumOptions opt;
  opt.reduce = true;
  opt.memo = true;
  opt.budget = 20'000'000;
  return opt;
}

TagVerdict check_sync_tag(const AsyncMachine& m, const TagAnnotation& a, const EnumOptions& opt) {
  Monitor mon(m, a);
  SyncVisitor vis(mon, false, opt.first_violation);
  EnumStats st;
  bool budget = false;
  try {
    st = enumerate_async(m, vis, monitored(m, a, opt));
  } catch (const BudgetExceeded&) {
    budget = true;
  }
  return finish(vis, st, budget);
}

TagVerdict check_compho_tag(const AsyncMachine& m, const TagAnnotation& a, const EnumOptions& opt) {
  TagVerdict out;
  auto shape = [&](std::string why) {
    Violation v;
    v.condition = Violation::Condition::Shape;
    v.explanation = std::move(why);
    out.violations.push_back(std::move(v));
    out.pass = false;
  };
  if (a.sync_vars.size() % 2 != 0) shape("sync vars must come in (phase, round) pairs");
  for (std::size_t i = 1; i < a.sync_vars.size(); i += 2)
    if (!a.sync_vars[i].bounded()) shape("round tag '" + a.sync_vars[i].name + "' is unbounded");
  if (!out.pass) return out;
  Monitor mon(m, a);
  SyncVisitor vis(mon, true, opt.first_violation);
  EnumStats st;
  bool budget = false;
  try {
    st = enumerate_async(m, vis, monitored(m, a, opt));
  } catch (const BudgetExceeded&) {
    budget = true;
  }
  return finish(vis, st, budget);
}

bool replay_violation(const AsyncMachine& m, const TagAnnotation& a, const Violation& v) {
  if (v.witness.empty()) return false;
  Execution ex;
  try {
    ex = run_async(m, v.witness);
  } catch (const std::exception&) {
    return false;
  }
  const AsyncState& before = ex.states.size() >= 2 ? ex.states[ex.states.size() - 2] : ex.init;
  Monitor mon(m, a);
  std::vector<Violation> found;
  std::size_t jumps = 0;
  if (v.condition == Violation::Condition::Incremental)
    mon.run_compho(before, v.witness.back(), ex.states.back(), found, jumps);
  else
    mon.run(before, v.witness.back(), ex.states.back(), found);
  return std::any_of(found.begin(), found.end(),
                     [&](const Violation& f) { return f.condition == v.condition; });
}

}  // namespace hoc
