#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace quadlab {

/// Numeric table with named columns, one row per record.
struct CsvTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd data;

  /// Index of a named column; throws CorruptFileError if absent.
  int col(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const;
};

/// Writes doubles with enough digits to round-trip bit-exactly.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& columns,
               const Eigen::MatrixXd& data);

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace quadlab
