#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace labmarket {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mean was requested from a pool with zero mass.
class EmptyPool : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class InvalidThreshold : public Error {
 public:
  using Error::Error;
};

/// Iteration budget exhausted. Carries the best residuals seen so callers can
/// still report diagnostics.
class NoConvergence : public Error {
 public:
  explicit NoConvergence(const std::string& what,
                         std::vector<double> best_residuals = {})
      : Error(what), best_residuals_(std::move(best_residuals)) {}

  const std::vector<double>& best_residuals() const noexcept {
    return best_residuals_;
  }

 private:
  std::vector<double> best_residuals_;
};

/// An intermediate market of a multi-period system emptied or collapsed.
class DegenerateSystem : public Error {
 public:
  using Error::Error;
};

/// No sharing rule on the wage grid meets the participation constraint.
class Infeasible : public Error {
 public:
  using Error::Error;
};

}  // namespace labmarket
