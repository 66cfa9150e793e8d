#include "freqprint/error.hpp"

namespace freqprint {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownFrequency: return "UnknownFrequency";
    case ErrorCode::BadCluster: return "BadCluster";
    case ErrorCode::BadDuration: return "BadDuration";
    case ErrorCode::EmptyProfileList: return "EmptyProfileList";
    case ErrorCode::AliasedCarrier: return "AliasedCarrier";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace freqprint
