#pragma once

#include <stdexcept>
#include <string>

namespace promptforge {

// base for everything thrown by this library
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// malformed input documents (bad JSON, bad line); CLI maps these to exit 1
class ParseError : public Error {
 public:
  using Error::Error;
};

// well-formed input violating a contract (missing field, bad range); exit 1
class ValidationError : public Error {
 public:
  using Error::Error;
};

// LM transport/endpoint failures; exit 2
class LMError : public Error {
 public:
  explicit LMError(const std::string& msg, int status = 0, bool retryable = false)
      : Error(msg), status(status), retryable(retryable) {}
  int status;
  bool retryable;
};

}  // namespace promptforge
