#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qii {

// Base class for every error raised by the mediator. The CLI maps the
// concrete subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string &what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string &what, std::string attribute = {})
      : Error(what), attribute_(std::move(attribute)) {}
  const std::string &attribute() const { return attribute_; }

 private:
  std::string attribute_;
};

class DomainMismatchError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  LoadError(const std::string &what, std::size_t row, std::size_t column)
      : Error(what + " (row " + std::to_string(row) + ", column " +
              std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class UnknownAttributeError : public Error {
 public:
  explicit UnknownAttributeError(std::string attribute)
      : Error("unknown attribute '" + attribute + "'"),
        attribute_(std::move(attribute)) {}
  const std::string &attribute() const { return attribute_; }

 private:
  std::string attribute_;
};

class StructuralError : public Error {
 public:
  using Error::Error;
};

// Query rejections: syntax, privilege and integrity failures.
class QueryRejected : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public QueryRejected {
 public:
  using QueryRejected::QueryRejected;
};

class AuthorizationError : public QueryRejected {
 public:
  AuthorizationError(std::vector<std::string> attributes);
  const std::vector<std::string> &attributes() const { return attributes_; }

 private:
  std::vector<std::string> attributes_;
};

class IntegrityError : public QueryRejected {
 public:
  IntegrityError(std::string constraint)
      : QueryRejected("integrity constraint violated: " + constraint),
        constraint_(std::move(constraint)) {}
  const std::string &constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

class PlanningError : public Error {
 public:
  using Error::Error;
};

class DispatchError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  NormalizationError(const std::string &what, std::string raw_value)
      : Error(what + ": '" + raw_value + "'"), raw_value_(std::move(raw_value)) {}
  const std::string &raw_value() const { return raw_value_; }

 private:
  std::string raw_value_;
};

}  // namespace qii
