#pragma once

#include <stdexcept>
#include <string>

namespace owl {

/// Bad or inconsistent input data (exit code 2 at the CLI).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration shape (exit code 1 at the CLI).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace owl
