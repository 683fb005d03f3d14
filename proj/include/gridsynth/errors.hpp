#pragma once

#include <stdexcept>
#include <string>

namespace gridsynth {

// Base of every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GRIDSYNTH_ERROR(Name)                       \
  class Name : public Error {                       \
   public:                                          \
    explicit Name(const std::string& what)          \
        : Error(std::string(#Name ": ") + what) {}  \
  };

GRIDSYNTH_ERROR(SyntaxError)
GRIDSYNTH_ERROR(UnboundVariable)
GRIDSYNTH_ERROR(UnknownPrimitive)
GRIDSYNTH_ERROR(OutOfBoundsGet)
GRIDSYNTH_ERROR(DepthUnsatisfiable)
GRIDSYNTH_ERROR(NotDerivable)
GRIDSYNTH_ERROR(IllegalAction)
GRIDSYNTH_ERROR(MultiDigitCode)
GRIDSYNTH_ERROR(UnknownTaskId)
GRIDSYNTH_ERROR(UnknownAbstraction)
GRIDSYNTH_ERROR(FormatError)

#undef GRIDSYNTH_ERROR

class TypeMismatch : public Error {
 public:
  TypeMismatch(std::string expected, std::string found, std::string location)
      : Error("TypeMismatch: expected " + expected + ", found " + found +
              " at " + location),
        expected_(std::move(expected)),
        found_(std::move(found)),
        location_(std::move(location)) {}

  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }
  const std::string& location() const { return location_; }

 private:
  std::string expected_;
  std::string found_;
  std::string location_;
};

}  // namespace gridsynth
