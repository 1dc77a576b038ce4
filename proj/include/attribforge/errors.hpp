#pragma once

#include <stdexcept>
#include <string>

namespace attribforge {

// Bad input data, schema, or configuration values. The CLI maps this
// to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Command-line misuse (unknown flag, missing argument). Exit code 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace attribforge
