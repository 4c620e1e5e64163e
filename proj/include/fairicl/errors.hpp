#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairicl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing columns, malformed schema files.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Transport or protocol failure talking to an LLM or embedding service,
// raised once the retry budget is exhausted.
class BackendError : public Error {
 public:
  BackendError(const std::string& message, int attempts = 1)
      : Error(message), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// A same-z neighbourhood query asked for more entries than the store holds.
class InsufficientSupportError : public Error {
 public:
  InsufficientSupportError(const std::string& message, std::size_t requested,
                           std::size_t available)
      : Error(message), requested_(requested), available_(available) {}
  std::size_t requested() const { return requested_; }
  std::size_t available() const { return available_; }
  std::size_t shortfall() const { return requested_ - available_; }

 private:
  std::size_t requested_;
  std::size_t available_;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairicl
