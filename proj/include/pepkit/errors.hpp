#pragma once

#include <stdexcept>
#include <string>

namespace pepkit {

// Bad configuration or misuse of the API: wrong widths, empty masks,
// nonsense hyperparameters. Maps to CLI exit code 1.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/layout disagreement (a kind of configuration problem).
class shape_error : public config_error {
 public:
  using config_error::config_error;
};

// Unreadable or malformed input data. Maps to CLI exit code 2.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown at runtime: divergence, non-finite values.
// Maps to CLI exit code 3.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

}  // namespace pepkit
