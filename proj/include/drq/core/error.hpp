#pragma once

#include <stdexcept>
#include <string>

namespace drq {

// Broken precondition on the caller's side: bad shapes, out-of-range
// indices, calling operations in the wrong state.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid run or agent configuration, detected before any work starts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A loss, Q-value or metric went non-finite.
class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (checkpoints, episode files, metrics CSV).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void contract_failure(const std::string& what) { throw ContractViolation(what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) contract_failure(what);
}

}  // namespace drq
