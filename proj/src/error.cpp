#include "posehar/error.hpp"

namespace posehar {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::AbsentLandmark: return "AbsentLandmark";
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::AbsentRoot: return "AbsentRoot";
    case Errc::DegenerateTorso: return "DegenerateTorso";
    case Errc::AbsentHip: return "AbsentHip";
    case Errc::EmptyActionViewpoint: return "EmptyActionViewpoint";
    case Errc::EmptySubset: return "EmptySubset";
    case Errc::MissingLibrary: return "MissingLibrary";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::Diverged: return "Diverged";
  }
  return "Unknown";
}

ErrorKind kind_of(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidConfig: return ErrorKind::Config;
    case Errc::NonFiniteLoss:
    case Errc::Diverged: return ErrorKind::Numeric;
    default: return ErrorKind::Data;
  }
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace posehar
