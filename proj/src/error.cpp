#include "o2s/error.hpp"

namespace o2s {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::WrongVariant: return "WrongVariant";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingCategoryStats: return "MissingCategoryStats";
    case ErrorCode::NoAnchorAvailable: return "NoAnchorAvailable";
    case ErrorCode::NoTargetAvailable: return "NoTargetAvailable";
    case ErrorCode::PlacementFailed: return "PlacementFailed";
    case ErrorCode::AugmentationFailed: return "AugmentationFailed";
    case ErrorCode::InvalidExpression: return "InvalidExpression";
    case ErrorCode::AmbiguousSpans: return "AmbiguousSpans";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NoPositivePairs: return "NoPositivePairs";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::vector<std::string> details)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      details_(std::move(details)) {}

}  // namespace o2s
