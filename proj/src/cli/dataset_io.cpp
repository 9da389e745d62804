#include "maternfit/cli/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <vector>

namespace maternfit::cli {

namespace {

std::string locate(const std::string& source, std::size_t line) {
  return line == 0 ? source : source + ":" + std::to_string(line);
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = s.find(',', start);
    out.push_back(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& v) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
}

}  // namespace

DatasetParseError::DatasetParseError(std::string source, std::size_t line, const std::string& what)
    : std::runtime_error(locate(source, line) + ": " + what), line_(line) {}

SpatialDataset read_dataset_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw DatasetParseError(source, 0, "empty file");
  ++lineno;
  {
    const auto cols = split(trim(line));
    if (cols.size() != 3 || trim(cols[0]) != "x" || trim(cols[1]) != "y" || trim(cols[2]) != "z")
      throw DatasetParseError(source, lineno, "expected header x,y,z");
  }

  std::vector<Point> locations;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto cols = split(row);
    if (cols.size() != 3)
      throw DatasetParseError(source, lineno, "expected 3 columns, found " + std::to_string(cols.size()));
    double x, y, z;
    if (!parse_double(cols[0], x) || !parse_double(cols[1], y) || !parse_double(cols[2], z))
      throw DatasetParseError(source, lineno, "not a finite number");
    locations.push_back({x, y});
    values.push_back(z);
  }
  if (locations.empty()) throw DatasetParseError(source, 0, "no observations");

  SpatialDataset data{std::move(locations), Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))};
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw DatasetParseError(source, 0, e.what());
  }
  return data;
}

SpatialDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetParseError(path, 0, "cannot open file");
  return read_dataset_csv(in, path);
}

void write_dataset_csv(std::ostream& out, const SpatialDataset& data) {
  out << "x,y,z\n";
  char buf[96];
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int len = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", data.locations[i].x, data.locations[i].y,
                                  data.values[static_cast<Eigen::Index>(i)]);
    out.write(buf, len);
  }
}

void write_dataset_csv(const std::string& path, const SpatialDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write_dataset_csv(out, data);
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace maternfit::cli
