#ifndef HAWKES_ERRORS_HPP
#define HAWKES_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hawkes {

/// Bad user input: malformed config, invalid region map, unreadable files.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally invalid data: unsorted streams, shape mismatches, broken masks.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure at run time: supercritical simulation request,
/// non-finite losses, exhausted noise budgets, diverged optimizers.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hawkes

#endif
