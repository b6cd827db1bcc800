#include "qii/value.h"

#include <charconv>
#include <cstdio>

#include "qii/error.h"
#include "qii/text.h"

namespace qii {

DataType parse_datatype(std::string_view name) {
  auto key = name_key(name);
  if (key == "text" || key == "string") return DataType::kText;
  if (key == "integer" || key == "int") return DataType::kInteger;
  if (key == "boolean" || key == "bool") return DataType::kBoolean;
  if (key == "date") return DataType::kDate;
  if (key == "enum") return DataType::kEnum;
  throw ArgumentError("unknown datatype '" + std::string(name) + "'");
}

std::string_view datatype_name(DataType type) {
  switch (type) {
    case DataType::kText: return "text";
    case DataType::kInteger: return "integer";
    case DataType::kBoolean: return "boolean";
    case DataType::kDate: return "date";
    case DataType::kEnum: return "enum";
  }
  return "text";
}

int generality(DataType type) {
  switch (type) {
    case DataType::kBoolean: return 0;
    case DataType::kInteger: return 1;
    case DataType::kEnum: return 2;
    case DataType::kDate: return 3;
    case DataType::kText: return 4;
  }
  return 4;
}

DataType more_general(DataType a, DataType b) {
  return generality(a) >= generality(b) ? a : b;
}

std::string Value::str() const {
  return std::visit(
      [](const auto &x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else {
          return x;
        }
      },
      v_);
}

bool is_null_token(std::string_view raw) {
  auto t = trim(raw);
  return t.empty() || t == "-" || t == "\xE2\x80\x94" || t == "\xE2\x80\x93";
}

bool is_valid_date(int year, int month, int day) {
  if (year < 1 || year > 9999 || month < 1 || month > 12 || day < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  int max_day = kDays[month - 1] + (month == 2 && leap ? 1 : 0);
  return day <= max_day;
}

namespace {

bool parse_digits(std::string_view s, int &out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && s.front() != '-' &&
         s.front() != '+';
}

}  // namespace

bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  int y, m, d;
  return parse_digits(s.substr(0, 4), y) && parse_digits(s.substr(5, 2), m) &&
         parse_digits(s.substr(8, 2), d) && is_valid_date(y, m, d);
}

std::string iso_date(int year, int month, int day) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::optional<Value> coerce(std::string_view raw, DataType type,
                            const std::vector<std::string> &allowed) {
  auto t = trim(raw);
  switch (type) {
    case DataType::kText:
      return Value(std::string(raw));
    case DataType::kInteger: {
      std::int64_t i = 0;
      if (t.empty()) return std::nullopt;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), i);
      if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
      return Value(i);
    }
    case DataType::kBoolean: {
      auto k = to_lower(t);
      if (k == "true" || k == "yes" || k == "y" || k == "1") return Value(true);
      if (k == "false" || k == "no" || k == "n" || k == "0") return Value(false);
      return std::nullopt;
    }
    case DataType::kDate:
      if (!is_iso_date(t)) return std::nullopt;
      return Value(std::string(t));
    case DataType::kEnum:
      for (const auto &a : allowed) {
        if (names_equal(a, t)) return Value(a);
      }
      if (allowed.empty()) return Value(std::string(t));
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Value> coerce(const Value &value, DataType type,
                            const std::vector<std::string> &allowed) {
  if (value.is_null()) return value;
  if (value.is_int() && type == DataType::kInteger) return value;
  if (value.is_bool() && type == DataType::kBoolean) return value;
  if (type == DataType::kText) return Value(value.str());
  return coerce(std::string_view(value.str()), type, allowed);
}

nlohmann::json to_json(const Value &value) {
  return std::visit(
      [](const auto &x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return x;
        }
      },
      value.storage());
}

Value value_from_json(const nlohmann::json &j) {
  if (j.is_null()) return Value();
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_number_integer()) return Value(j.get<std::int64_t>());
  if (j.is_string()) return Value(j.get<std::string>());
  throw ArgumentError("unsupported JSON value " + j.dump());
}

std::string record_to_string(const Record &record) {
  std::string out = "{";
  bool first = true;
  for (const auto &[k, v] : record) {
    if (!first) out += ", ";
    first = false;
    out += k + "=" + (v.is_null() ? "null" : v.str());
  }
  return out + "}";
}

}  // namespace qii
