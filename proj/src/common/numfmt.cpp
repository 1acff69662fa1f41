#include "privi/common/numfmt.hpp"

#include <fmt/format.h>

#include <cmath>

namespace privi {

std::string format_decimal(double value, int decimals) {
  if (!std::isfinite(value)) return "null";
  std::string s = fmt::format("{:.{}f}", value, decimals);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

}  // namespace privi
