#ifndef RDC_ERRORS_HPP
#define RDC_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace rdc {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Misconfiguration detected at startup or on first use (unknown place id,
/// bad launcher flags, ...). Not recoverable within a run.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// API misuse: preconditions violated by the caller (root outside the group,
/// destination outside the move manager's group, bad tiling parameters, ...).
class UsageError : public Error {
public:
  using Error::Error;
};

/// An index or range that is not present where it was required to be.
class RangeError : public Error {
public:
  using Error::Error;
};

/// Wire-level disagreement between places: mismatched collective kinds at one
/// epoch, phase-1/phase-2 length disagreement, unknown deserializer tag.
class ProtocolError : public Error {
public:
  using Error::Error;
};

/// A collective did not complete within the configured timeout. Usually means
/// one member of the group never made the matching call.
class TimeoutError : public Error {
public:
  using Error::Error;
};

/// A GlobalId that cannot be resolved on this place (no handle, no descriptor).
class UnresolvedIdError : public Error {
public:
  using Error::Error;
};

/// Failures collected from asynchronous activities, rethrown when their
/// enclosing finish scope exits.
class AggregateError : public Error {
public:
  AggregateError(std::string summary, std::vector<std::string> causes)
      : Error(std::move(summary)), causes_(std::move(causes)) {}

  const std::vector<std::string>& causes() const { return causes_; }

private:
  std::vector<std::string> causes_;
};

}  // namespace rdc

#endif  // RDC_ERRORS_HPP
