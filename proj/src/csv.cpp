#include "fshap/csv.hpp"

#include <fstream>

#include "fshap/errors.hpp"

namespace fshap::csv {

std::vector<std::vector<std::string>> read(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool cell_started = false;
  int c;
  const auto end_cell = [&] {
    row.push_back(cell);
    cell.clear();
    cell_started = false;
  };
  const auto end_row = [&] {
    end_cell();
    // A lone empty cell means a blank line; skip it.
    if (row.size() != 1 || !row[0].empty()) rows.push_back(row);
    row.clear();
  };
  while ((c = in.get()) != EOF) {
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          cell += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        quoted = true;
        cell_started = true;
        break;
      case ',':
        end_cell();
        cell_started = true;  // next cell exists even if empty
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        cell += ch;
        cell_started = true;
        break;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted cell");
  if (cell_started || !cell.empty() || !row.empty()) end_row();
  return rows;
}

std::vector<std::vector<std::string>> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open csv file: " + path);
  return read(in);
}

std::string escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += "\"";
  return out;
}

}  // namespace fshap::csv
