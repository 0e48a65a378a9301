#pragma once

#include <stdexcept>
#include <string>

namespace spam {

/// Bad input data: malformed files, schema violations, failed invariants.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an operation's contract (bad arguments, wrong shapes).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure while running (I/O, divergence).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spam
