#pragma once

#include <cstdio>
#include <string>

namespace tvar {

/// Shortest-safe round-trip rendering used in every CSV the library writes.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace tvar
