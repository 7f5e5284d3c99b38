#pragma once

#include <string>

#include <Eigen/Dense>

namespace efs {

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

std::string read_file(const std::string& path);

/// Writes to a sibling temp file and renames it over `path`, so a failed run
/// never leaves a truncated file behind.
void write_file_atomic(const std::string& path, const std::string& contents);

struct RegressionData {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
};

/// Numeric CSV, first column y and the rest X. A non-numeric first line is taken as a header.
RegressionData parse_regression_csv(const std::string& text);

}  // namespace efs
