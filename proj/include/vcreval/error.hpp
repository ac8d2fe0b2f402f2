#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vcreval {

// Base for every error the library raises on bad input or violated
// preconditions. Callers that only need a message can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed interchange data. line() is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : Error("duplicate id '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

// A required input (embedding, channel value, detection list, ...) is absent.
class MissingInputError : public Error {
 public:
  MissingInputError(const std::string& input, const std::string& key)
      : Error("missing " + input + " for '" + key + "'"), input_(input), key_(key) {}
  const std::string& input() const noexcept { return input_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::string input_;
  std::string key_;
};

// A quantity is mathematically undefined for the given data (zero variance,
// zero expected disagreement, empty denominators).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace vcreval
