#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kbq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown field, bad KB shape.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Token sequence does not follow the query grammar.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at token " + std::to_string(position) + ")"), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Grammatical but semantically invalid (e.g. a field constrained twice).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed corpus or KB file.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in a state that does not admit it.
class StateError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Checkpoint written for a different feature template or schema.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace kbq
