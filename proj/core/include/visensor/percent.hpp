#pragma once

#include <cstdint>
#include <string>

namespace visensor {

// numerator/denominator * 100 in hundredths of a percent, rounded half-up.
// Integer arithmetic only, so 65.625 becomes 6563 exactly.
// Throws Error(DivisionByZero) for a zero denominator.
std::int64_t percent_hundredths(std::int64_t numerator, std::int64_t denominator);

// Same value as a real, e.g. 218 hundredths -> 2.18.
double percent_value(std::int64_t numerator, std::int64_t denominator);

// "89.06%": two decimals, dot separator, trailing percent sign.
std::string format_percent(std::int64_t numerator, std::int64_t denominator);

// Formats hundredths without the division, e.g. 6563 -> "65.63%".
std::string format_hundredths(std::int64_t hundredths);

}  // namespace visensor
