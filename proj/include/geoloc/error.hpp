#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geoloc {

enum class ErrorCode {
  NearPiRotation,
  NonPositiveDepth,
  ParseError,
  NonUnitQuaternion,
  DuplicateObservation,
  IoError,
  DimensionMismatch,
  EmptyInput,
  MissingDescriptor,
  MissingPose,
  UnknownSeed,
  DegenerateGeometry,
  InsufficientObservations,
  NoConvergence,
  SingularInformation,
  NegativeVariance,
  InsufficientHistory,
  SingularCovariance,
  NoInput,
  GenerationFailure,
  InvalidArgument,
  LocalizationFailure,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace geoloc
