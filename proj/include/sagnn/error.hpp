#pragma once

#include <stdexcept>
#include <string>

namespace sagnn {

// Bad input: malformed files, out-of-range arguments, inconsistent configs.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure while doing work on valid input (I/O, numerical blow-up).
// The CLI maps this to exit code 3.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sagnn
