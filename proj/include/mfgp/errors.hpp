#pragma once

#include <stdexcept>
#include <string>

namespace mfgp {

// Malformed or missing experiment configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that cannot be ingested or violates a data invariant. Exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Factorization or optimization failure. Exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes a warning line to stderr unless warnings are muted.
void warn(const std::string& message);
void set_warnings_muted(bool muted);

}  // namespace mfgp
