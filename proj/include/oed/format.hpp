#pragma once

#include <string>

namespace oed {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);

/// Fixed-point text with `digits` decimals.
std::string format_fixed(double value, int digits);

}  // namespace oed
