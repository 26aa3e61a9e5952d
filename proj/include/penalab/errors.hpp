#pragma once

#include <cstdio>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace penalab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration; maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double residual)
      : Error(what + " (residual " + format(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }
  double residual_;
};

class InversionError : public Error {
 public:
  InversionError(const std::string& what, double condition)
      : Error(what + " (condition " + std::to_string(condition) + ")"), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

// Rejection or harvesting gave up; carries the work spent.
class SamplingError : public Error {
 public:
  SamplingError(const std::string& what, std::size_t budget_used)
      : Error(what + " (budget used " + std::to_string(budget_used) + ")"),
        budget_used_(budget_used) {}
  std::size_t budget_used() const { return budget_used_; }

 private:
  std::size_t budget_used_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace penalab
