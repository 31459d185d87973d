#pragma once

#include <stdexcept>
#include <string>

namespace l4semu {

// Invalid scenario, preset, or parameter. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The equivalence test has no defined value for the given groups (for
// example a group with a single run has no within-group distances).
// Maps to CLI exit code 3.
class UndefinedTestError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace l4semu
