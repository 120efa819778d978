#include "seadet/error.hpp"

namespace seadet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::MissingMetadata: return "MissingMetadata";
    case ErrorCode::InconsistentCells: return "InconsistentCells";
    case ErrorCode::SecondaryCellNotAllowed: return "SecondaryCellNotAllowed";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::SingleClassData: return "SingleClassData";
    case ErrorCode::NoClutterSamples: return "NoClutterSamples";
    case ErrorCode::NoTargets: return "NoTargets";
    case ErrorCode::NoClutter: return "NoClutter";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace seadet
