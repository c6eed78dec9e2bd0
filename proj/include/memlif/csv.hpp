#pragma once

#include <string>
#include <vector>

namespace memlif::csv {

// Shortest round-trip decimal form (std::to_chars), so serialized doubles
// reparse bit-exactly and repeated runs emit identical bytes.
std::string format_double(double v);

// Strict double parse of a whole field. Throws std::runtime_error naming
// the offending text.
double parse_double(const std::string& field);

std::vector<std::string> split_line(const std::string& line, char sep = ',');

std::string join(const std::vector<std::string>& fields, char sep = ',');

// Whole-file helpers; loader skips blank lines.
std::vector<std::vector<std::string>> read_table(const std::string& path,
                                                 char sep = ',');
void write_lines(const std::string& path,
                 const std::vector<std::string>& lines);

} // namespace memlif::csv
