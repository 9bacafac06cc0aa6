#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace posehar {

enum class Errc {
  // data errors
  AbsentLandmark,
  MalformedFrame,
  IoError,
  ParseError,
  UnknownLabel,
  EmptySequence,
  AbsentRoot,
  DegenerateTorso,
  AbsentHip,
  EmptyActionViewpoint,
  EmptySubset,
  MissingLibrary,
  ShapeMismatch,
  TooFewSamples,
  InsufficientData,
  // configuration errors
  InvalidConfig,
  // numeric errors
  NonFiniteLoss,
  Diverged,
};

std::string_view to_string(Errc code) noexcept;

/// Coarse grouping used by the CLI to pick an exit code.
enum class ErrorKind { Config, Data, Numeric };

ErrorKind kind_of(Errc code) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }

private:
  Errc code_;
};

}  // namespace posehar
