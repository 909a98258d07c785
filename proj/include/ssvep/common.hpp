#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ssvep {

/// Thrown for every precondition violation or malformed input the library
/// detects. Message text is meant to be shown to the user as-is.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

inline std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

inline bool finite(double x) { return std::isfinite(x); }

/// Shortest round-trip decimal rendering ("7" for 7.0, "0.5", "1e+100").
/// Used wherever numbers become file names or CSV cells, so that identical
/// values always render to identical text.
inline std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace detail

}  // namespace ssvep
