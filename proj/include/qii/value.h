#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace qii {

enum class DataType { kText, kInteger, kBoolean, kDate, kEnum };

DataType parse_datatype(std::string_view name);
std::string_view datatype_name(DataType type);

// Generality rank used when two matched fields disagree on type:
// text > date > enum > integer > boolean.
int generality(DataType type);
DataType more_general(DataType a, DataType b);

// A typed cell. Text, enum and date values share the string alternative;
// dates are always ISO-8601 (YYYY-MM-DD) once inside the mediator.
// The monostate alternative is the explicit null.
class Value {
 public:
  using Storage = std::variant<std::monostate, bool, std::int64_t, std::string>;

  Value() = default;
  Value(bool b) : v_(b) {}
  Value(std::int64_t i) : v_(i) {}
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char *s) : v_(std::string(s)) {}

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }

  bool as_bool() const { return std::get<bool>(v_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  const std::string &as_string() const { return std::get<std::string>(v_); }

  const Storage &storage() const { return v_; }

  // Display form; null prints as the empty string.
  std::string str() const;

  friend bool operator==(const Value &, const Value &) = default;
  friend std::strong_ordering operator<=>(const Value &a, const Value &b) {
    return a.v_ <=> b.v_;
  }

 private:
  Storage v_;
};

using Record = std::map<std::string, Value>;

bool is_null_token(std::string_view raw);

// Parses raw text as a value of `type`; nullopt when it does not conform.
// Enum values are matched case-insensitively and returned in the allowed
// spelling. Date input must already be ISO-8601.
std::optional<Value> coerce(std::string_view raw, DataType type,
                            const std::vector<std::string> &allowed = {});

// Converts an already-typed value to `type` (text → integer etc).
std::optional<Value> coerce(const Value &value, DataType type,
                            const std::vector<std::string> &allowed = {});
inline std::optional<Value> coerce(const char *raw, DataType type,
                                   const std::vector<std::string> &allowed = {}) {
  return coerce(std::string_view(raw), type, allowed);
}
inline std::optional<Value> coerce(const std::string &raw, DataType type,
                                   const std::vector<std::string> &allowed = {}) {
  return coerce(std::string_view(raw), type, allowed);
}

bool is_valid_date(int year, int month, int day);
bool is_iso_date(std::string_view s);
std::string iso_date(int year, int month, int day);

nlohmann::json to_json(const Value &value);
Value value_from_json(const nlohmann::json &j);

std::string record_to_string(const Record &record);

}  // namespace qii
