#include "fshap/format.hpp"

#include <cstdio>
#include <cstdlib>

#include "fshap/errors.hpp"

namespace fshap {

std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf);
}

double parse_double(const std::string& text) {
  if (text.empty()) throw NumericError("empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw NumericError("not a number: '" + text + "'");
  }
  return v;
}

}  // namespace fshap
