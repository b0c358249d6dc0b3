#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace assertctl {

// Every failure the library reports carries one of these kinds so callers
// (the CLI in particular) can map them to exit codes without string matching.
enum class ErrorKind {
  UnknownLabel,
  UnknownDataset,
  UnknownEngine,
  MalformedRecord,
  SpanOutOfBounds,
  DuplicateId,
  StandoffParseError,
  CoordinateOutOfRange,
  TokenMismatch,
  MissingGold,
  MalformedLexiconLine,
  DuplicateTrigger,
  InvalidConfig,
  AuthFailure,
  RateLimited,
  Transport,
  ScriptExhausted,
  Unparseable,
  AllPathsUnparseable,
  RankTooLarge,
  ShapeMismatch,
  UnknownInstanceId,
  DuplicatePrediction,
  EmptyEvaluation,
  UnknownSlice,
  IoFailure,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Line-anchored parse failure; `line` is 1-based.
class LineError : public Error {
 public:
  LineError(ErrorKind kind, std::size_t line, const std::string& reason)
      : Error(kind, "line " + std::to_string(line) + ": " + reason), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace assertctl
