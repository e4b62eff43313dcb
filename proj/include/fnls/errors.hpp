#pragma once

#include <stdexcept>
#include <string>

namespace fnls {

/// Invalid arguments or violated preconditions.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative method stopped without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Profiles living on different grids were combined.
class GridMismatch : public std::invalid_argument {
 public:
  GridMismatch() : std::invalid_argument("profiles live on different grids") {}
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}

}  // namespace fnls
