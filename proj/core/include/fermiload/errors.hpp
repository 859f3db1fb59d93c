#pragma once

#include <stdexcept>
#include <string>

namespace fermiload {

// Invalid physical or numerical configuration (bad parameters, violated invariants).
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Integration produced non-finite values or otherwise broke down.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fermiload
