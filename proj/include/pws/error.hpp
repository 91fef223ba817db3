#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pws {

enum class ErrorKind {
  NonPositiveDepth,
  ShapeMismatch,
  DegenerateInterval,
  NegativeMargin,
  InvalidDelta,
  DegenerateDataset,
  DomainError,
  InvalidRange,
  EmptyFrame,
  InvalidArgument,
  IoError,
  FormatError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can print a machine-parsable `kind: message` line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pws
