#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mindface {

// Shortest round-trip decimal for a double.
std::string format_number(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Reads one numeric column (by header name) from a CSV file.
std::vector<double> read_csv_column(const std::filesystem::path& path, const std::string& column);

}  // namespace mindface
