#pragma once

#include <cstdio>
#include <string>

namespace cimsim {

/// Locale-independent numeric formatting for report files. %.17g for values
/// that must survive a parse round-trip, %.10g for human-facing columns.
inline std::string fmt_double(double v, int precision = 10) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

}  // namespace cimsim
