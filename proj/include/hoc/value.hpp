#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hoc {

struct EnumDecl;
struct MsgTypeDecl;

/// Dynamically typed runtime value shared by both semantics.
///
/// Message fields and container entries are immutable and shared between
/// copies.
/// `None` doubles as the bottom value returned by an empty receive and as the
/// undefined slot of a tag.
class Value {
 public:
  enum class Kind : std::uint8_t { None, Int, Bool, Enum, Msg, Mbox, Map };
  using Entries = std::vector<std::pair<Value, Value>>;

  Value() = default;

  static Value none() { return {}; }
  static Value integer(std::int64_t v);
  static Value boolean(bool v);
  static Value enumeration(std::shared_ptr<const EnumDecl> type, int ordinal);
  static Value message(std::shared_ptr<const MsgTypeDecl> type,
                       std::vector<Value> fields, int from = -1);
  static Value mailbox(Entries entries = {});
  static Value map(Entries entries = {});

  Kind kind() const { return kind_; }
  bool is_none() const { return kind_ == Kind::None; }

  std::int64_t as_int() const;
  bool as_bool() const;
  int ordinal() const;
  const EnumDecl& enum_type() const;
  const std::shared_ptr<const EnumDecl>& enum_type_ptr() const { return enum_; }

  const MsgTypeDecl& msg_type() const;
  const std::shared_ptr<const MsgTypeDecl>& msg_type_ptr() const { return msg_; }
  const std::vector<Value>& fields() const;
  int from() const { return from_; }
  Value with_from(int sender) const;
  /// Field lookup by name; `from` is the implicit sender field.
  Value field(const std::string& name) const;

  /// Entries of a mailbox (keyed by sender) or a map, sorted by key.
  const Entries& entries() const;
  std::size_t size() const;
  /// Lookup for maps and mailboxes; None when absent.
  Value get(const Value& key) const;
  /// Copy with `key` bound to `v` (overwrites).
  Value put(const Value& key, Value v) const;

  std::string to_string() const;
  std::size_t hash() const;

  friend bool operator==(const Value& a, const Value& b);
  friend std::strong_ordering operator<=>(const Value& a, const Value& b);

 private:
  Kind kind_ = Kind::None;
  std::int64_t num_ = 0;
  int from_ = -1;
  std::shared_ptr<const EnumDecl> enum_;
  std::shared_ptr<const MsgTypeDecl> msg_;
  std::shared_ptr<const std::vector<Value>> items_;
  std::shared_ptr<const Entries> entries_;
};

/// Raised when evaluation gets stuck (type mismatch, bad field, missing input).
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hoc
