#pragma once

#include <string>

namespace privi {

// Fixed-point with at most `decimals` decimals, trailing zeros trimmed
// ("1.5", "0", "-2.25"). Non-finite values become "null".
std::string format_decimal(double value, int decimals = 6);

}  // namespace privi
