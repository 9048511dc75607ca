#ifndef OWC_UTIL_TEXT_HPP
#define OWC_UTIL_TEXT_HPP

#include <charconv>
#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "util/error.hpp"

namespace owc {

inline std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, p - start));
    start = p + 1;
  }
  return out;
}

// Shortest round-trip double formatting; used everywhere values are written
// so that re-reading reproduces bit-identical doubles.
inline std::string fmt_double(double v) {
  char buf[40];
  int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string best(buf, static_cast<size_t>(n));
  // prefer the shortest form that round-trips ("10" over "1e+01")
  for (int prec = 1; prec < 17; ++prec) {
    char s[40];
    std::snprintf(s, sizeof s, "%.*g", prec, v);
    double back = 0;
    std::sscanf(s, "%lf", &back);
    if (back == v && std::strlen(s) < best.size()) best = s;
  }
  return best;
}

inline double parse_double(std::string_view s, const std::string& context) {
  std::string t = trim(s);
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  require(end == t.c_str() + t.size() && !t.empty(), ErrorCode::ParseError,
          "bad number '" + t + "' in " + context);
  return v;
}

inline long parse_long(std::string_view s, const std::string& context) {
  std::string t = trim(s);
  long v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc() && p == t.data() + t.size(), ErrorCode::ParseError,
          "bad integer '" + t + "' in " + context);
  return v;
}

}  // namespace owc

#endif
