#include "visensor/error.hpp"

#include <cstdio>

#include "visensor/percent.hpp"

namespace visensor {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::UnsupportedMedia: return "UnsupportedMedia";
    case ErrorCode::CorruptImage: return "CorruptImage";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownCamera: return "UnknownCamera";
    case ErrorCode::SequenceOverflow: return "SequenceOverflow";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::IncompleteClassification: return "IncompleteClassification";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::DuplicateReading: return "DuplicateReading";
    case ErrorCode::NoReadingsYet: return "NoReadingsYet";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::InvalidOverride: return "InvalidOverride";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
  }
  return "Unknown";
}

std::int64_t percent_hundredths(std::int64_t numerator, std::int64_t denominator) {
  if (denominator == 0) throw Error(ErrorCode::DivisionByZero, "percentage with zero denominator");
  if (denominator < 0) {
    numerator = -numerator;
    denominator = -denominator;
  }
  // floor((20000 n + d) / 2d) == round-half-up(10000 n / d), also for n < 0.
  std::int64_t scaled = numerator * 20000 + denominator;
  std::int64_t q = scaled / (2 * denominator);
  if (scaled % (2 * denominator) != 0 && scaled < 0) --q;
  return q;
}

double percent_value(std::int64_t numerator, std::int64_t denominator) {
  return static_cast<double>(percent_hundredths(numerator, denominator)) / 100.0;
}

std::string format_hundredths(std::int64_t hundredths) {
  const bool negative = hundredths < 0;
  const std::int64_t mag = negative ? -hundredths : hundredths;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld%%", negative ? "-" : "",
                static_cast<long long>(mag / 100), static_cast<long long>(mag % 100));
  return buf;
}

std::string format_percent(std::int64_t numerator, std::int64_t denominator) {
  return format_hundredths(percent_hundredths(numerator, denominator));
}

}  // namespace visensor
