#include "rpinn/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>

#include "rpinn/errors.hpp"

namespace rpinn::csv {

std::string format(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::size_t Table::column_index(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ArgumentError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> Table::column(const std::string& name) const {
  const std::size_t c = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.at(c));
  return out;
}

void write(const std::filesystem::path& path, const Table& table) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw OutputError("cannot write " + path.string());
  os << boost::algorithm::join(table.header, ",") << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << format(row[i]);
    }
    os << '\n';
  }
  if (!os) throw OutputError("failed while writing " + path.string());
}

Table read(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  Table table;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError(path.string() + " is empty");
  boost::algorithm::split(table.header, line, boost::is_any_of(","));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    boost::algorithm::split(cells, line, boost::is_any_of(","));
    if (cells.size() != table.header.size()) throw ConfigError(path.string() + ": ragged row");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ": bad number '" + c + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace rpinn::csv
