#include "hoc/value.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "hoc/ast.hpp"

namespace hoc {

Value Value::integer(std::int64_t v) {
  Value r;
  r.kind_ = Kind::Int;
  r.num_ = v;
  return r;
}

Value Value::boolean(bool v) {
  Value r;
  r.kind_ = Kind::Bool;
  r.num_ = v ? 1 : 0;
  return r;
}

Value Value::enumeration(std::shared_ptr<const EnumDecl> type, int ordinal) {
  Value r;
  r.kind_ = Kind::Enum;
  r.num_ = ordinal;
  r.enum_ = std::move(type);
  return r;
}

Value Value::message(std::shared_ptr<const MsgTypeDecl> type, std::vector<Value> fields,
                     int from) {
  Value r;
  r.kind_ = Kind::Msg;
  r.msg_ = std::move(type);
  r.items_ = std::make_shared<const std::vector<Value>>(std::move(fields));
  r.from_ = from;
  return r;
}

namespace {
std::shared_ptr<const Value::Entries> sorted(Value::Entries e) {
  std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return std::make_shared<const Value::Entries>(std::move(e));
}
}  // namespace

Value Value::mailbox(Entries entries) {
  Value r;
  r.kind_ = Kind::Mbox;
  r.entries_ = sorted(std::move(entries));
  return r;
}

Value Value::map(Entries entries) {
  Value r;
  r.kind_ = Kind::Map;
  r.entries_ = sorted(std::move(entries));
  return r;
}

std::int64_t Value::as_int() const {
  if (kind_ == Kind::Int || kind_ == Kind::Enum) return num_;
  throw EvalError("expected an integer, got " + to_string());
}

bool Value::as_bool() const {
  if (kind_ == Kind::Bool) return num_ != 0;
  throw EvalError("expected a boolean, got " + to_string());
}

int Value::ordinal() const {
  if (kind_ != Kind::Enum) throw EvalError("expected an enum literal, got " + to_string());
  return static_cast<int>(num_);
}

const EnumDecl& Value::enum_type() const {
  if (kind_ != Kind::Enum) throw EvalError("expected an enum literal, got " + to_string());
  return *enum_;
}

const MsgTypeDecl& Value::msg_type() const {
  if (kind_ != Kind::Msg) throw EvalError("expected a message, got " + to_string());
  return *msg_;
}

const std::vector<Value>& Value::fields() const {
  if (kind_ != Kind::Msg) throw EvalError("expected a message, got " + to_string());
  return *items_;
}

Value Value::with_from(int sender) const {
  Value r = *this;
  r.from_ = sender;
  return r;
}

Value Value::field(const std::string& name) const {
  if (kind_ == Kind::Msg) {
    if (name == "from") return from_ < 0 ? Value::none() : Value::integer(from_);
    int i = msg_->index_of(name);
    if (i < 0) throw EvalError("message type " + msg_->name + " has no field " + name);
    return (*items_)[static_cast<std::size_t>(i)];
  }
  if (kind_ == Kind::Mbox) {
    // Projection of a mailbox on one field: sender -> field value.
    Entries out;
    for (const auto& [k, m] : *entries_) out.emplace_back(k, m.field(name));
    return Value::map(std::move(out));
  }
  if (kind_ == Kind::None) return Value::none();
  throw EvalError("field access ." + name + " on " + to_string());
}

const Value::Entries& Value::entries() const {
  if (kind_ != Kind::Mbox && kind_ != Kind::Map)
    throw EvalError("expected a mailbox or map, got " + to_string());
  return *entries_;
}

std::size_t Value::size() const {
  if (kind_ == Kind::None) return 0;
  return entries().size();
}

Value Value::get(const Value& key) const {
  const auto& es = entries();
  auto it = std::lower_bound(es.begin(), es.end(), key,
                             [](const auto& e, const Value& k) { return e.first < k; });
  if (it != es.end() && it->first == key) return it->second;
  return Value::none();
}

Value Value::put(const Value& key, Value v) const {
  Entries es = entries();
  auto it = std::lower_bound(es.begin(), es.end(), key,
                             [](const auto& e, const Value& k) { return e.first < k; });
  if (it != es.end() && it->first == key)
    it->second = std::move(v);
  else
    es.insert(it, {key, std::move(v)});
  Value r = *this;
  r.entries_ = std::make_shared<const Entries>(std::move(es));
  return r;
}

std::string Value::to_string() const {
  switch (kind_) {
    case Kind::None:
      return "none";
    case Kind::Int:
      return std::to_string(num_);
    case Kind::Bool:
      return num_ ? "true" : "false";
    case Kind::Enum:
      return enum_->literals.at(static_cast<std::size_t>(num_));
    case Kind::Msg: {
      std::string s = msg_->name + "(";
      for (std::size_t i = 0; i < items_->size(); ++i) {
        if (i) s += ", ";
        s += (*items_)[i].to_string();
      }
      s += ")";
      if (from_ >= 0) s += "@" + std::to_string(from_);
      return s;
    }
    case Kind::Mbox:
    case Kind::Map: {
      std::string s = "{";
      bool first = true;
      for (const auto& [k, v] : *entries_) {
        if (!first) s += ", ";
        first = false;
        s += k.to_string() + ": " + v.to_string();
      }
      return s + "}";
    }
  }
  return "?";
}

std::size_t Value::hash() const {
  std::size_t h = static_cast<std::size_t>(kind_) * 0x9e3779b97f4a7c15ULL;
  auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  mix(std::hash<std::int64_t>{}(num_));
  if (kind_ == Kind::Msg) {
    mix(std::hash<std::string>{}(msg_->name));
    mix(static_cast<std::size_t>(from_ + 1));
    for (const auto& f : *items_) mix(f.hash());
  } else if (kind_ == Kind::Mbox || kind_ == Kind::Map) {
    for (const auto& [k, v] : *entries_) {
      mix(k.hash());
      mix(v.hash());
    }
  }
  return h;
}

bool operator==(const Value& a, const Value& b) { return (a <=> b) == 0; }

std::strong_ordering operator<=>(const Value& a, const Value& b) {
  using K = Value::Kind;
  // Ints and enum ordinals compare numerically; None sorts below everything.
  auto rank = [](K k) { return k == K::Enum ? static_cast<int>(K::Int) : static_cast<int>(k); };
  if (auto c = rank(a.kind_) <=> rank(b.kind_); c != 0) return c;
  switch (a.kind_) {
    case K::None:
      return std::strong_ordering::equal;
    case K::Int:
    case K::Bool:
    case K::Enum:
      if (auto c = a.num_ <=> b.num_; c != 0) return c;
      if (a.kind_ == K::Enum && b.kind_ == K::Enum) return a.enum_->name <=> b.enum_->name;
      return a.kind_ <=> b.kind_;
    case K::Msg: {
      if (auto c = a.msg_->name <=> b.msg_->name; c != 0) return c;
      if (auto c = *a.items_ <=> *b.items_; c != 0) return c;
      return a.from_ <=> b.from_;
    }
    case K::Mbox:
    case K::Map:
      return *a.entries_ <=> *b.entries_;
  }
  return std::strong_ordering::equal;
}

}  // namespace hoc
