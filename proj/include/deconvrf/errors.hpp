#pragma once

#include <stdexcept>
#include <string>

namespace deconvrf {

/// Raised when a requested option exists in principle but is not supported
/// (e.g. a moment order with no analytic norm for the innovation law).
class Unsupported : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A named admissibility condition (A3, A5, condition (7), ...) failed.
/// `condition()` carries the short name so callers can report it verbatim.
class ConditionViolation : public std::invalid_argument
{
public:
  ConditionViolation(std::string condition, const std::string& message)
    : std::invalid_argument(message)
    , condition_(std::move(condition))
  {
  }

  const std::string& condition() const noexcept { return condition_; }

private:
  std::string condition_;
};

} // namespace deconvrf
