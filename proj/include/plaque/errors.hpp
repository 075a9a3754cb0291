#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace plaque {

/// Base of every error raised by the simulator. Callers up the stack may
/// prepend where the failure happened (step index, macro step, study cell)
/// without changing the dynamic type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what), message_(what) {}

  const char* what() const noexcept override { return message_.c_str(); }
  void add_context(const std::string& where) { message_ = where + ": " + message_; }

 private:
  std::string message_;
};

/// The wall moved far enough to close the channel.
class DomainCollapse : public Error {
 public:
  DomainCollapse(double peak, double half_height)
      : Error("domain collapse: wall displacement " + std::to_string(peak) +
              " reaches half-height " + std::to_string(half_height)),
        peak_(peak) {}
  double peak() const noexcept { return peak_; }

 private:
  double peak_;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ConnectivityMismatch : public Error {
 public:
  using Error::Error;
};

class NonlinearDivergence : public Error {
 public:
  NonlinearDivergence(int iterations, double increment)
      : Error("Picard iteration did not converge in " + std::to_string(iterations) +
              " iterations (last increment " + std::to_string(increment) + ")"),
        iterations_(iterations),
        increment_(increment) {}
  int iterations() const noexcept { return iterations_; }
  double increment() const noexcept { return increment_; }

 private:
  int iterations_;
  double increment_;
};

class PeriodicityNotReached : public Error {
 public:
  PeriodicityNotReached(double residual, int max_cycles)
      : Error("periodicity not reached after " + std::to_string(max_cycles) +
              " cycles (residual " + std::to_string(residual) + ")"),
        residual_(residual),
        max_cycles_(max_cycles) {}
  double residual() const noexcept { return residual_; }
  int max_cycles() const noexcept { return max_cycles_; }

 private:
  double residual_;
  int max_cycles_;
};

class NegativeConcentration : public Error {
 public:
  explicit NegativeConcentration(double u)
      : Error("negative concentration " + std::to_string(u)) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnknownKey : public Error {
 public:
  explicit UnknownKey(const std::string& key) : Error("unknown key '" + key + "'"), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace plaque
