#ifndef TSCHPG_ERRORS_HPP
#define TSCHPG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tschpg {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (bad dimensions, empty power list,
// weights that do not form a valid combination, malformed config files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A well-formed call received argument values outside their domain
// (probabilities outside [0,1], negative fading, mismatched array lengths).
class InputError : public Error {
 public:
  using Error::Error;
};

// The physical model cannot be evaluated (e.g. two entities at zero distance).
class ModelError : public Error {
 public:
  using Error::Error;
};

// An action index falls outside the declared action space.
class ActionError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked in the wrong object state
// (e.g. stepping an episode that already finished).
class LifecycleError : public Error {
 public:
  using Error::Error;
};

// Non-finite values reached a numeric kernel (NaN/inf gradients or losses).
class NumericError : public Error {
 public:
  using Error::Error;
};

// A schedule violated a structural constraint and was refused.
class ConstraintError : public Error {
 public:
  using Error::Error;
};

// Energy efficiency requested for a schedule that spends no energy.
class UndefinedEfficiencyError : public Error {
 public:
  using Error::Error;
};

// Filesystem interaction failed (unwritable directory, missing checkpoint).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tschpg

#endif  // TSCHPG_ERRORS_HPP
