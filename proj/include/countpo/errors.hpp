#pragma once

#include <stdexcept>
#include <string>

namespace countpo {

// Malformed or inconsistent input data (bad CSV cell, shape mismatch,
// negative count, ...).  The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-SPD matrix, overflowing linear predictor,
// divergent sampler, ...).  The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace countpo
