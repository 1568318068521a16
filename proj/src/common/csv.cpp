#include "mindface/common/csv.hpp"

#include "mindface/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mindface {

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
}

std::vector<double> read_csv_column(const std::filesystem::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty csv " + path.string());
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  const auto header = split(line);
  std::size_t idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) idx = i;
  if (idx == header.size()) throw FormatError("csv column not found: " + column);
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (idx >= cells.size()) throw FormatError("short csv row");
    values.push_back(std::stod(cells[idx]));
  }
  return values;
}

}  // namespace mindface
