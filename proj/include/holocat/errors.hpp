#pragma once

#include <stdexcept>
#include <string>

namespace holocat {

/// Broad failure class; the CLI maps these onto exit codes.
enum class ErrorKind {
  Validation,  // bad input, bad config, violated precondition
  Numerical,   // the computation itself could not be trusted
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define HOLOCAT_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what)                                \
        : Error(ErrorKind::Kind, std::string(#Name ": ") + what) {}       \
  };

HOLOCAT_DEFINE_ERROR(TruncationError, Numerical)
HOLOCAT_DEFINE_ERROR(DimensionMismatch, Validation)
HOLOCAT_DEFINE_ERROR(DegenerateInput, Validation)
HOLOCAT_DEFINE_ERROR(InvalidSpec, Validation)
HOLOCAT_DEFINE_ERROR(SeparationViolation, Validation)
HOLOCAT_DEFINE_ERROR(ConfigError, Validation)
HOLOCAT_DEFINE_ERROR(StepUnstable, Numerical)
HOLOCAT_DEFINE_ERROR(StepTooCoarse, Numerical)
HOLOCAT_DEFINE_ERROR(IllConditioned, Numerical)
HOLOCAT_DEFINE_ERROR(LeakageExcess, Numerical)
HOLOCAT_DEFINE_ERROR(CoherenceLost, Numerical)

#undef HOLOCAT_DEFINE_ERROR

}  // namespace holocat
