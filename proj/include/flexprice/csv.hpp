#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace flexprice::csv {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Writes comma-separated rows with '\n' line endings. Throws IoError.
class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws ValidationError if absent.
  std::size_t column(std::string_view name) const;
  /// Parses a column as doubles; throws ValidationError on bad cells.
  std::vector<double> numbers(std::string_view name) const;
};

/// Reads a headered CSV file. Throws IoError when unreadable.
Table read(const std::filesystem::path& path);

}  // namespace flexprice::csv
