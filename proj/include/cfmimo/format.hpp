#pragma once

#include <array>
#include <charconv>
#include <string>

namespace cfmimo {

// Locale-independent fixed-point rendering used by every CSV writer.
inline std::string fixed_str(double v, int precision) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::fixed, precision);
  if (ec != std::errc{}) return "nan";
  std::string s(buf.data(), end);
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

// Shortest round-trip representation; used where exact reproduction matters.
inline std::string exact_str(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

}  // namespace cfmimo
