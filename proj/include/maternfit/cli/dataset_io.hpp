#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "maternfit/matern.hpp"

namespace maternfit::cli {

/// Malformed dataset file. line() is 1-based; 0 when the problem is not tied to a line.
class DatasetParseError : public std::runtime_error {
 public:
  DatasetParseError(std::string source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// CSV with header `x,y,z`, one observation per line.
SpatialDataset read_dataset_csv(std::istream& in, const std::string& source = "<input>");
SpatialDataset read_dataset_csv(const std::string& path);

/// Writes `x,y,z` and one %.17g row per observation, LF line endings.
void write_dataset_csv(std::ostream& out, const SpatialDataset& data);
void write_dataset_csv(const std::string& path, const SpatialDataset& data);

}  // namespace maternfit::cli
