#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace affpipe {

enum class ErrorCode {
  InvalidInput,
  FilteredBelowMinimum,
  DegenerateConfiguration,
  NoConsensus,
  EmptyChain,
  PointAtInfinity,
  EmptyIntersection,
  AllPointsOutOfFrame,
  TooFewPoints,
  DegenerateTrack,
  OutOfRange,
  DimensionMismatch,
  ZeroMassMap,
  ZeroVarianceMap,
  EmptyFixations,
  LengthMismatch,
  EmptySequence,
  ManifestInvalid,
  AnnotationInvalid,
  Io,
};

/// Stable machine-readable name, used as the skip reason in batch summaries.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace affpipe
