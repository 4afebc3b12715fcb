#pragma once

#include <stdexcept>
#include <string>

namespace cfmimo {

// Invalid scenario or model parameters (bad counts, gamma out of range, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an API contract (index out of range, dimension mismatch, ...).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precoder cannot be built, e.g. a rank-deficient ZF Gram matrix.
class PrecodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cfmimo
