#include "geoloc/scene.hpp"

#include <Eigen/Eigenvalues>
#include <string>

#include "geoloc/error.hpp"

namespace geoloc {

std::string_view to_string(EstimateSource source) {
  switch (source) {
    case EstimateSource::Geometric:
      return "geometric";
    case EstimateSource::Motion:
      return "motion";
    case EstimateSource::Fused:
      return "fused";
  }
  return "unknown";
}

EstimateSource parse_source(std::string_view text) {
  if (text == "geometric") return EstimateSource::Geometric;
  if (text == "motion") return EstimateSource::Motion;
  if (text == "fused") return EstimateSource::Fused;
  throw Error(ErrorCode::ParseError, "unknown estimate source '" + std::string(text) + "'");
}

bool is_psd(const Covariance6& c, double tol) {
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Covariance6> eig(c, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NearPiRotation: return "NearPiRotation";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::DuplicateObservation: return "DuplicateObservation";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingDescriptor: return "MissingDescriptor";
    case ErrorCode::MissingPose: return "MissingPose";
    case ErrorCode::UnknownSeed: return "UnknownSeed";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InsufficientObservations: return "InsufficientObservations";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::NegativeVariance: return "NegativeVariance";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::NoInput: return "NoInput";
    case ErrorCode::GenerationFailure: return "GenerationFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::LocalizationFailure: return "LocalizationFailure";
  }
  return "Unknown";
}

}  // namespace geoloc
