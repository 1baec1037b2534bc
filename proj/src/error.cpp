#include "pas/error.hpp"

namespace pas {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingAnswer: return "MissingAnswer";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValueError: return "ValueError";
    case ErrorCode::DuplicateError: return "DuplicateError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LocatorError: return "LocatorError";
    case ErrorCode::VocabError: return "VocabError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SingleClassError: return "SingleClassError";
    case ErrorCode::IntervalError: return "IntervalError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BindError: return "BindError";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NotAligned: return "NotAligned";
  }
  return "Unknown";
}

}  // namespace pas
