#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qii {

struct CsvRow {
  std::size_t line = 0;  // 1-based line where the row starts
  std::vector<std::string> cells;
};

// RFC 4180 reader: quoted cells may hold commas, quotes ("") and newlines.
// Blank lines are skipped.
std::vector<CsvRow> parse_csv(std::string_view text);

std::string csv_escape(std::string_view cell);
std::string csv_line(const std::vector<std::string> &cells);

}  // namespace qii
