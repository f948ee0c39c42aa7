#pragma once

#include <stdexcept>
#include <string>

namespace twophase {

/// A precondition on an operation's arguments was violated.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to produce a trustworthy answer
/// (eigensolver non-convergence, residual check failure).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
[[noreturn]] inline void fail(const std::string& what) { throw InvalidArgument(what); }
inline void require(bool ok, const std::string& what) {
  if (!ok) fail(what);
}
}  // namespace detail

}  // namespace twophase
