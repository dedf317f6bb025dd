#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rttseg {

/// Base of every error raised by the library. Callers that only need to
/// distinguish "bad input" from "bug" can catch this and std::logic_error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RTTSEG_DEFINE_ERROR(Name)            \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

RTTSEG_DEFINE_ERROR(EmptyWindow);
RTTSEG_DEFINE_ERROR(InvalidTick);
RTTSEG_DEFINE_ERROR(SchemaError);
RTTSEG_DEFINE_ERROR(NotFound);
RTTSEG_DEFINE_ERROR(TransportError);
RTTSEG_DEFINE_ERROR(DimensionError);
RTTSEG_DEFINE_ERROR(InconsistentState);
RTTSEG_DEFINE_ERROR(EmptyData);
RTTSEG_DEFINE_ERROR(InvalidArgument);
RTTSEG_DEFINE_ERROR(TooShort);
RTTSEG_DEFINE_ERROR(AllMissing);
RTTSEG_DEFINE_ERROR(DomainError);
RTTSEG_DEFINE_ERROR(DegenerateComponent);
RTTSEG_DEFINE_ERROR(LengthMismatch);
RTTSEG_DEFINE_ERROR(TooFew);

#undef RTTSEG_DEFINE_ERROR

/// Malformed input file. `line()` is 1-based and counts the header line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rttseg
