#include "quadlab/csv.hpp"

#include "quadlab/common.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace quadlab {

int CsvTable::col(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) {
    throw CorruptFileError("csv: missing column '" + name + "'");
  }
  return static_cast<int>(it - columns.begin());
}

Eigen::VectorXd CsvTable::column(const std::string& name) const {
  return data.col(col(name));
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& columns,
               const Eigen::MatrixXd& data) {
  if (data.size() > 0 && static_cast<int>(columns.size()) != data.cols()) {
    throw DimensionMismatchError("csv: header has " + std::to_string(columns.size()) +
                                 " names for " + std::to_string(data.cols()) + " columns");
  }
  std::ofstream out(path);
  if (!out) throw Error("csv: cannot open '" + path.string() + "' for writing");
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (j) out << ',';
    out << columns[j];
  }
  out << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    std::string line;
    line.reserve(columns.size() * 24);
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j) line += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", data(i, j));
      line += buf;
    }
    line += '\n';
    out << line;
  }
  if (!out) throw Error("csv: write to '" + path.string() + "' failed");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("csv: cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw CorruptFileError("csv: empty file '" + path.string() + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) table.columns.push_back(name);
  }
  const int ncols = static_cast<int>(table.columns.size());
  std::vector<double> values;
  int nrows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    for (int j = 0; j < ncols; ++j) {
      values.push_back(std::strtod(p, &end));
      if (end == p) throw CorruptFileError("csv: bad number in '" + path.string() + "'");
      p = (*end == ',') ? end + 1 : end;
    }
    if (*end != '\0') throw CorruptFileError("csv: trailing junk in '" + path.string() + "'");
    ++nrows;
  }
  table.data.resize(nrows, ncols);
  for (int i = 0; i < nrows; ++i)
    for (int j = 0; j < ncols; ++j) table.data(i, j) = values[static_cast<std::size_t>(i) * ncols + j];
  return table;
}

}  // namespace quadlab
