#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace suntrack {

enum class ErrorCode {
  invalid_argument,
  zenith_out_of_range,
  outside_rim,
  dimension_mismatch,
  empty_image,
  not_visible,
  empty_input,
  numerical_failure,
  insufficient_estimates,
  no_coverage,
  length_mismatch,
  unparsable_filename,
  corrupt_image,
  store_conflict,
  day_without_model,
  io_failure,
  format_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::zenith_out_of_range: return "ZenithOutOfRange";
    case ErrorCode::outside_rim: return "OutsideRim";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::empty_image: return "EmptyImage";
    case ErrorCode::not_visible: return "NotVisible";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::numerical_failure: return "NumericalFailure";
    case ErrorCode::insufficient_estimates: return "InsufficientEstimates";
    case ErrorCode::no_coverage: return "NoCoverage";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::unparsable_filename: return "UnparsableFilename";
    case ErrorCode::corrupt_image: return "CorruptImage";
    case ErrorCode::store_conflict: return "StoreConflict";
    case ErrorCode::day_without_model: return "DayWithoutModel";
    case ErrorCode::io_failure: return "IoFailure";
    case ErrorCode::format_error: return "FormatError";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace suntrack
