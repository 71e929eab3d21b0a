#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace o2s {

enum class ErrorCode {
  EmptyInput,
  WrongVariant,
  InvalidConfig,
  ParseError,
  MissingCategoryStats,
  NoAnchorAvailable,
  NoTargetAvailable,
  PlacementFailed,
  AugmentationFailed,
  InvalidExpression,
  AmbiguousSpans,
  NotFound,
  NoPositivePairs,
};

std::string_view to_string(ErrorCode code);

/// Error raised by every fallible operation in the library. `details` carries
/// a structured payload where one exists (e.g. the categories lacking stats).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> details = {});

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace o2s
