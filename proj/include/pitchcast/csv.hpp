#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace pitchcast::csv {

/// Splits one CSV line. Handles double-quoted fields with "" escapes;
/// quoted fields may not span lines.
std::vector<std::string> split_line(std::string_view line, char delimiter = ',');

/// Reads the next non-empty line, stripping a trailing '\r' and a leading
/// UTF-8 byte-order mark. Returns false at end of stream.
bool next_line(std::istream& in, std::string& line);

std::string escape(std::string_view field, char delimiter = ',');

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

/// Shortest decimal text that round-trips the double exactly; "" for NaN.
std::string format_double(double value);

}  // namespace pitchcast::csv
