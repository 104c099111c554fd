#pragma once

#include <istream>
#include <string>
#include <vector>

#include "rotvote/errors.hpp"

namespace rotvote::csv {

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (const char ch : line) {
    if (ch == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (ch != '\r' && ch != ' ' && ch != '\t') {
      cell.push_back(ch);
    }
  }
  out.push_back(cell);
  return out;
}

inline double to_double(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw DataError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
}

/// Reads the header row and returns the column names. Throws on empty input.
inline std::vector<std::string> header(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line != "\r") return split(line);
  }
  throw DataError("CSV input is empty");
}

inline void expect_header(const std::vector<std::string>& got, const std::vector<std::string>& want) {
  if (got != want) {
    std::string w;
    for (const auto& s : want) w += (w.empty() ? "" : ",") + s;
    throw DataError("unexpected CSV header, expected '" + w + "'");
  }
}

/// Calls fn(cells, line_no) for every non-empty data row, checking the cell count.
template <typename Fn>
void rows(std::istream& in, std::size_t columns, Fn&& fn) {
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != columns) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                      " columns, found " + std::to_string(cells.size()));
    }
    fn(cells, line_no);
  }
}

}  // namespace rotvote::csv
