#pragma once

#include <string>

namespace fshap {

// Shortest-within-17-significant-digits decimal form (printf %.17g). Round
// trips every finite double bit-exactly; used by every serializer so byte
// output is deterministic.
std::string format_g17(double value);

// Parses a decimal floating-point literal; NumericError on trailing garbage
// or non-finite results where finite is required.
double parse_double(const std::string& text);

}  // namespace fshap
