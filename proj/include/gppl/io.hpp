#pragma once

// Text formats: numeric CSV, 1-based edge lists and MatrixMarket export.

#include "gppl/graph.hpp"
#include "gppl/types.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gppl {

// Shortest text that reads back to the same double: %.17g.
std::string format_double(double x);

// Numeric CSV. A first line that does not parse as numbers is treated as a
// header. Throws FormatError on ragged rows, empty files, or NaN/Inf values.
Matrix read_csv_matrix(const std::filesystem::path& path);

// Accepts a single column or a single row.
Vector read_csv_vector(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const Matrix& M,
               const std::vector<std::string>& header = {});
void write_csv(const std::filesystem::path& path, const Vector& v, const std::string& header = {});

// "n <count>" on the first non-comment line, then "i j" pairs (1-based).
// '#' starts a comment anywhere on a line.
UndirectedGraph read_edge_list(const std::filesystem::path& path);
UndirectedGraph parse_edge_list(std::string_view text);
void write_edge_list(const std::filesystem::path& path, const UndirectedGraph& graph);

// MatrixMarket coordinate real general.
void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& M);
void write_matrix_market(const std::filesystem::path& path, const Matrix& M);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace gppl
