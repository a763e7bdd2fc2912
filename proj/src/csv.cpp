#include "flexprice/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include "flexprice/errors.hpp"

namespace flexprice::csv {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw IoError("csv: cannot format number");
  return std::string(buf.data(), end);
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  row(header);
}

void Writer::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  row(cells);
}

void Writer::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw IoError("csv: row width " + std::to_string(cells.size()) + " != header width " +
                  std::to_string(columns_) + " in " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw IoError("write failed: " + path_.string());
}

void Writer::close() {
  out_.close();
  if (!out_) throw IoError("close failed: " + path_.string());
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ValidationError("csv: no column named '" + std::string(name) + "'");
}

std::vector<double> Table::numbers(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (c >= rows[r].size())
      throw ValidationError("csv: row " + std::to_string(r + 2) + " is missing column '" +
                            std::string(name) + "'");
    const std::string& cell = rows[r][c];
    if (cell == "nan") {
      out.push_back(std::nan(""));
      continue;
    }
    double v = 0.0;
    const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || end != cell.data() + cell.size())
      throw ValidationError("csv: row " + std::to_string(r + 2) + " column '" +
                            std::string(name) + "' is not a number: '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      t.header = split(line);
      first = false;
    } else {
      t.rows.push_back(split(line));
    }
  }
  if (first) throw ValidationError("csv: " + path.string() + " has no header");
  return t;
}

}  // namespace flexprice::csv
