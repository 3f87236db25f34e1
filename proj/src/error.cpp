#include "affpipe/error.hpp"

namespace affpipe {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::FilteredBelowMinimum: return "FilteredBelowMinimum";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::AllPointsOutOfFrame: return "AllPointsOutOfFrame";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateTrack: return "DegenerateTrack";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroMassMap: return "ZeroMassMap";
    case ErrorCode::ZeroVarianceMap: return "ZeroVarianceMap";
    case ErrorCode::EmptyFixations: return "EmptyFixations";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::ManifestInvalid: return "ManifestInvalid";
    case ErrorCode::AnnotationInvalid: return "AnnotationInvalid";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace affpipe
