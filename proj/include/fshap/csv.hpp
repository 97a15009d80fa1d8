#pragma once

#include <istream>
#include <string>
#include <vector>

namespace fshap::csv {

// Minimal RFC-4180-ish reader: comma separator, double-quote quoting with ""
// escapes, tolerates \r\n. Returns one vector of cells per row; blank lines
// are skipped. Unterminated quotes raise DataError.
std::vector<std::vector<std::string>> read(std::istream& in);
std::vector<std::vector<std::string>> read_file(const std::string& path);

// Quotes a cell when it contains a comma, quote, or newline.
std::string escape(const std::string& cell);

}  // namespace fshap::csv
