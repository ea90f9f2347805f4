#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace dpd {

struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or -1.
  int column(const std::string& name) const;
  double number(std::size_t row, int col) const;
};

/// Read a comma-separated file; lines starting with '#' before the header are
/// kept as comments.
CsvTable read_csv(const std::string& path);

/// Shortest round-trippable rendering of a double ("%.17g" trimmed).
std::string format_number(double v);

/// Writer for versioned tables: `#schema=v1`, then the header row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& cells);
  void close();

 private:
  std::ofstream out_;
  std::size_t width_;
};

}  // namespace dpd
