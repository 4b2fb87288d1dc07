#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rangepta {

enum class ErrorCode {
  UnknownType,
  DuplicateType,
  InheritanceCycle,
  MultipleParents,
  InvalidRoot,
  SyntaxError,
  DuplicateName,
  UndeclaredVariable,
  InvalidParams,
  IndexOutOfRange,
  ConfigMismatch,
  ConfigConflict,
  UnsupportedKind,
  UniverseMismatch,
  IoError,
};

inline std::string_view toString(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::DuplicateType: return "DuplicateType";
    case ErrorCode::InheritanceCycle: return "InheritanceCycle";
    case ErrorCode::MultipleParents: return "MultipleParents";
    case ErrorCode::InvalidRoot: return "InvalidRoot";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UndeclaredVariable: return "UndeclaredVariable";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::ConfigConflict: return "ConfigConflict";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::UniverseMismatch: return "UniverseMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying an error category and, for parse errors, a 1-based
/// source position (0 when not applicable).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::uint32_t line = 0, std::uint32_t column = 0)
      : std::runtime_error(format(code, message, line, column)),
        code_(code),
        message_(message),
        line_(line),
        column_(column) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code and position prefix.
  const std::string& message() const noexcept { return message_; }
  std::uint32_t line() const noexcept { return line_; }
  std::uint32_t column() const noexcept { return column_; }

 private:
  static std::string format(ErrorCode code, const std::string& message, std::uint32_t line,
                            std::uint32_t column) {
    std::string out(toString(code));
    if (line != 0) {
      out += " at " + std::to_string(line) + ":" + std::to_string(column);
    }
    out += ": " + message;
    return out;
  }

  ErrorCode code_;
  std::string message_;
  std::uint32_t line_;
  std::uint32_t column_;
};

}  // namespace rangepta
