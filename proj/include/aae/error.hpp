#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aae {

enum class ErrorCode {
  kBounds,
  kDimension,
  kDegenerate,
  kBehindCamera,
  kIntrinsics,
  kFormat,
  kUnsupportedVersion,
  kParse,
  kEmptyGeometry,
  kIo,
  kConfig,
  kEmptyInput,
  kInsufficientData,
  kNoOverlap,
  kInsufficientOverlap,
  kDegenerateGeometry,
  kTrainingFailure,
};

const char* to_string(ErrorCode code);

// Numerical failures (as opposed to bad input data) map to a distinct CLI exit
// status.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Binary file decoding failure; `offset` is the byte position at which the
/// reader gave up.
class FormatError : public Error {
 public:
  FormatError(ErrorCode code, const std::string& what, std::size_t offset)
      : Error(code, what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Text file parse failure with a 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Failure inside an iterative solver; `iteration` is 0-based.
class IterationError : public Error {
 public:
  IterationError(ErrorCode code, const std::string& what, int iteration)
      : Error(code, what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace aae
