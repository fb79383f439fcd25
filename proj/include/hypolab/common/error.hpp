#pragma once

#include <stdexcept>
#include <string>

namespace hypolab {

/// Base for every error raised by the library. Callers that only need to
/// report a failure can catch this; specific subclasses carry structure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: table files, plan records, agent responses.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A precondition on arguments was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace hypolab
