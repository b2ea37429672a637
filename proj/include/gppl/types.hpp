#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace gppl {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Raised when array shapes disagree. The CLI maps it to exit code 2.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised for malformed files or values that cannot be parsed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solver exhausted its budget. `row` is the CLIME row that
// failed, or -1 when not applicable.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Index row = -1)
      : std::runtime_error(what), row_(row) {}
  Index row() const noexcept { return row_; }

 private:
  Index row_;
};

}  // namespace gppl
