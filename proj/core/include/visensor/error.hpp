#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace visensor {

enum class ErrorCode {
  MalformedModel,
  UnsupportedFeature,
  UnsupportedMedia,
  CorruptImage,
  OutOfBounds,
  ImageTooSmall,
  InvalidArgument,
  UnknownCamera,
  SequenceOverflow,
  EmptySequence,
  IncompleteClassification,
  Unauthorized,
  StorageFailure,
  DuplicateReading,
  NoReadingsYet,
  EmptyCorpus,
  MissingLabel,
  InvalidOverride,
  DivisionByZero,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// callers (HTTP layer, CLI) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace visensor
