#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace rpinn::csv {

/// 17 significant digits: round-trips every 64-bit double.
[[nodiscard]] std::string format(double value);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a header column; throws ArgumentError when absent.
  [[nodiscard]] std::size_t column_index(const std::string& name) const;
  [[nodiscard]] std::vector<double> column(const std::string& name) const;
};

/// Throws ConfigError if the file cannot be written.
void write(const std::filesystem::path& path, const Table& table);
[[nodiscard]] Table read(const std::filesystem::path& path);

}  // namespace rpinn::csv
