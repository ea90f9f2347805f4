#include <algorithm>
#include <string>

#include "dpd/csv.hpp"
#include "dpd/errors.hpp"
#include "dpd/models.hpp"

namespace dpd {

DesignData read_design_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  std::vector<int> xcols;
  for (int j = 1;; ++j) {
    const int c = t.column("x" + std::to_string(j));
    if (c < 0) break;
    xcols.push_back(c);
  }
  if (xcols.empty()) throw InvalidParameter(path + ": expected columns x1..xp");
  const int ycol = t.column("y");
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    const int jj = static_cast<int>(j);
    if (jj != ycol && std::find(xcols.begin(), xcols.end(), jj) == xcols.end())
      throw InvalidParameter(path + ": unexpected column '" + t.header[j] + "'");
  }
  if (t.rows.empty()) throw InvalidParameter(path + ": no data rows");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Matrix x(n, static_cast<Eigen::Index>(xcols.size()));
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < xcols.size(); ++j)
      x(i, static_cast<Eigen::Index>(j)) = t.number(static_cast<std::size_t>(i), xcols[j]);
    if (ycol >= 0) y[i] = t.number(static_cast<std::size_t>(i), ycol);
  }
  DesignData d{DesignMatrix(std::move(x)), std::nullopt};
  if (ycol >= 0) d.y = std::move(y);
  return d;
}

void write_design_csv(const std::string& path, const DesignMatrix& design, const std::optional<Vector>& y) {
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < design.p(); ++j) header.push_back("x" + std::to_string(j + 1));
  if (y) header.push_back("y");
  CsvWriter w(path, header);
  for (Eigen::Index i = 0; i < design.n(); ++i) {
    std::vector<double> r(design.row(i).begin(), design.row(i).end());
    if (y) r.push_back((*y)[i]);
    w.row(r);
  }
}

}  // namespace dpd
