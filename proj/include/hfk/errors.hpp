#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hfk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix or vector does not have the shape its role requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A simulated state left the finite region (non-finite or |x_i| > 1e12).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int step, std::int64_t trial = -1)
      : Error(what), step_(step), trial_(trial) {}
  int step() const { return step_; }
  std::int64_t trial() const { return trial_; }

 private:
  int step_;
  std::int64_t trial_;
};

/// A documented precondition on the inputs does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is singular within tolerance.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Gain recovery from an ill-conditioned P2.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

/// Ratio requested on a report whose disturbance energy is zero.
class UndefinedRatioError : public Error {
 public:
  using Error::Error;
};

/// The SDP solver did not find a certified point. This is never a proof of
/// infeasibility.
class SdpNotFoundError : public Error {
 public:
  SdpNotFoundError(const std::string& what, double best_max_eig)
      : Error(what), best_max_eig_(best_max_eig) {}
  double best_max_eig() const { return best_max_eig_; }

 private:
  double best_max_eig_;
};

/// Bisection was called with an upper end that is not feasible.
class NoBracketError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace hfk
