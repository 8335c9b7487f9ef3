#pragma once

#include <stdexcept>
#include <string>

namespace betacantor {

// Exit codes shared by the command line front end.
enum class ExitCode : int {
  ok = 0,
  invalid_config = 2,
  exhausted = 3,
  invariant = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Bad arguments or configuration.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ExitCode::invalid_config, what) {}
};

// Schedule too short, or a work budget was exceeded.
class ResourceExhausted : public Error {
 public:
  explicit ResourceExhausted(const std::string& what)
      : Error(ExitCode::exhausted, what) {}
};

// A structural guarantee failed to hold. Always a bug.
class InvariantViolation : public Error {
 public:
  explicit InvariantViolation(const std::string& what)
      : Error(ExitCode::invariant, what) {}
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

inline void ensure(bool ok, const std::string& what) {
  if (!ok) throw InvariantViolation(what);
}

}  // namespace betacantor
