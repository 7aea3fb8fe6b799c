#pragma once

#include <string>
#include <vector>

namespace divband {

// Full-precision text form (%.17g): round-trips any double.
std::string format_double(double v);

// Escape a CSV field (quote + double inner quotes) only when needed.
std::string csv_field(const std::string& s);

// Write via temp file + rename so readers never see a partial file.
void atomic_write(const std::string& path, const std::string& content);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

} // namespace divband
