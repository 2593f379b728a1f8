#include "hoc/trace.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hoc {

namespace {

using Json = nlohmann::ordered_json;

Json to_json(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::None: return nullptr;
    case Value::Kind::Int: return v.as_int();
    case Value::Kind::Bool: return v.as_bool();
    default: return v.to_string();
  }
}

Json delta(const Decls& d, const std::vector<Value>& before, const std::vector<Value>& after) {
  Json out = Json::object();
  for (std::size_t i = 0; i < after.size() && i < d.vars.size(); ++i)
    if (i >= before.size() || !(before[i] == after[i])) out[d.vars[i].name] = to_json(after[i]);
  return out;
}

Json event(const Observable& o) {
  Json vals = Json::array();
  for (const auto& v : o.values) vals.push_back(to_json(v));
  return Json{{"dir", o.input ? "in" : "out"}, {"values", vals}};
}

}  // namespace

std::string async_trace(const AsyncMachine& m, const Execution& e) {
  std::string out;
  std::size_t next_obs = 0;
  for (std::size_t i = 0; i < e.actions.size(); ++i) {
    const Action& a = e.actions[i];
    const AsyncState& before = i == 0 ? e.init : e.states[i - 1];
    const AsyncState& after = e.states[i];
    Json r;
    r["step"] = i;
    r["process"] = a.process;
    r["action"] = a.to_string();
    if (a.process >= 0) {
      const auto p = static_cast<std::size_t>(a.process);
      r["delta"] = delta(m.decls(), before.procs[p].vars, after.procs[p].vars);
    } else {
      r["delta"] = Json::object();
    }
    Json obs = nullptr;
    while (next_obs < e.observables.size() && e.observables[next_obs].step == i)
      obs = event(e.observables[next_obs++]);
    r["observable"] = obs;
    out += r.dump() + "\n";
  }
  return out;
}

std::string compho_trace(const ComphoMachine& m, const ComphoExecution& e) {
  std::string out;
  for (std::size_t k = 0; k < e.states.size(); ++k) {
    const ComphoState& before = k == 0 ? e.init : e.states[k - 1];
    const ComphoState& after = e.states[k];
    const std::string round = m.current_round(before).name;
    for (int p : m.active(before)) {
      const auto up = static_cast<std::size_t>(p);
      const auto& fb = before.procs[up].frames;
      const auto& fa = after.procs[up].frames;
      if (fb.empty() || fa.empty()) continue;
      Json r;
      r["step"] = k;
      r["process"] = p;
      r["action"] = "update " + round;
      Json ho = Json::array();
      if (k < e.ho.size() && up < e.ho[k].size())
        for (int q : e.ho[k][up]) ho.push_back(q);
      r["ho"] = ho;
      // A call or return changes the frame; report the whole top frame then.
      const Frame& top = fa.back();
      bool same = fb.size() == fa.size() && fb.back().proto == top.proto;
      r["protocol"] = top.proto ? top.proto->name : std::string();
      r["delta"] = delta(top.proto->decls, same ? fb.back().vars : std::vector<Value>{}, top.vars);
      Json obs = Json::array();
      for (const auto& o : e.observables)
        if (o.step == static_cast<std::size_t>(after.r - 1) && o.process == p) obs.push_back(event(o));
      r["observable"] = obs;
      out += r.dump() + "\n";
    }
  }
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path);
}

}  // namespace hoc
