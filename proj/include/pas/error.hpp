#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pas {

enum class ErrorCode {
  MissingAnswer,
  SchemaError,
  ValueError,
  DuplicateError,
  EmptyInput,
  LocatorError,
  VocabError,
  ConfigError,
  InsufficientData,
  SingleClassError,
  IntervalError,
  IoError,
  BindError,
  NotFound,
  NotAligned,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the toolkit carries a machine-readable code; the
/// HTTP layer reports `code` verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace pas
