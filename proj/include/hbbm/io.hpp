#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace hbbm {

// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_double(std::ostream& out, double v) { out << format_double(v); }

inline void write_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) write_double(out, *v);
}

}  // namespace hbbm
