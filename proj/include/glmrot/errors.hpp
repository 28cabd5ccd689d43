#pragma once
#include <stdexcept>
#include <string>

namespace glmrot {

/** @brief Bad argument or configuration value. */
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/** @brief A numerical routine produced a non-finite or degenerate quantity. */
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/** @brief Iterative scheme failed to reach its tolerance. */
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInput(msg);
}

}  // namespace glmrot
