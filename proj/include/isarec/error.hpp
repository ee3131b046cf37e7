#pragma once

#include <stdexcept>
#include <string>

namespace isarec {

// Malformed files, missing data or a dataset that cannot satisfy a stage's
// preconditions. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// W·Wᵀ is singular, so the symmetric orthogonalization is undefined.
class DegenerateFilterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace isarec
