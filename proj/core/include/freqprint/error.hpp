#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace freqprint {

enum class ErrorCode {
  InvalidArgument,
  UnknownFrequency,
  BadCluster,
  BadDuration,
  EmptyProfileList,
  AliasedCarrier,
  ParseError,
  EmptyTrace,
  NonMonotonicTime,
  IoError,
  HeaderMismatch,
  LengthMismatch,
  ClassTooSmall,
  TooShort,
  LayoutMismatch,
  KTooLarge,
  SingleClass,
  WidthMismatch,
  EmptyInput,
  ConfigError,
  UnknownLabel,
  FormatError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure in the library is reported through this type; callers that
// need to branch on the cause inspect code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace freqprint
