#ifndef BIASFORGE_ERROR_HPP
#define BIASFORGE_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace biasforge {

/// Every failure the library reports carries one of these codes. The CLI maps
/// them onto process exit codes (see pipeline/cli.hpp).
enum class ErrorCode {
  // corpus
  MalformedRecord,
  IntegrityError,
  UnsupportedLanguage,
  InsufficientData,
  // syntax
  ParseError,
  // transforms
  EmptyTemplateSet,
  GeneratorUnavailable,
  MaxAttemptsExceeded,
  NameSpaceExhausted,
  PoolTooSmall,
  // validation
  ToolchainMissing,
  SandboxError,
  Timeout,
  // judge
  TransportError,
  RateLimited,
  EmptyTestCaseSet,
  // metrics
  EmptyGroup,
  EmptyInput,
  MissingBaseline,
  InconsistentKeys,
  // plumbing
  ConfigError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::UnsupportedLanguage: return "UnsupportedLanguage";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyTemplateSet: return "EmptyTemplateSet";
    case ErrorCode::GeneratorUnavailable: return "GeneratorUnavailable";
    case ErrorCode::MaxAttemptsExceeded: return "MaxAttemptsExceeded";
    case ErrorCode::NameSpaceExhausted: return "NameSpaceExhausted";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::ToolchainMissing: return "ToolchainMissing";
    case ErrorCode::SandboxError: return "SandboxError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::EmptyTestCaseSet: return "EmptyTestCaseSet";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingBaseline: return "MissingBaseline";
    case ErrorCode::InconsistentKeys: return "InconsistentKeys";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Source location of the first syntax error (1-based line and column).
struct SourceLocation {
  std::uint32_t line = 0;
  std::uint32_t column = 0;
  std::uint32_t byte = 0;
};

class ParseError : public Error {
 public:
  ParseError(SourceLocation where, const std::string& what)
      : Error(ErrorCode::ParseError, "line " + std::to_string(where.line) + ", column " +
                                         std::to_string(where.column) + ": " + what),
        where_(where) {}

  [[nodiscard]] const SourceLocation& where() const noexcept { return where_; }

 private:
  SourceLocation where_;
};

/// Raised for corpus records; remembers the 1-based line of the JSONL file.
class RecordError : public Error {
 public:
  RecordError(ErrorCode code, std::size_t line, const std::string& reason)
      : Error(code, "line " + std::to_string(line) + ": " + reason), line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace biasforge

#endif  // BIASFORGE_ERROR_HPP
