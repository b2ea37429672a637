#include "gppl/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gppl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_number(std::string_view field, double& out) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return false;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Matrix read_csv_matrix(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (auto f : fields) {
      double v;
      if (!parse_number(f, v)) {
        numeric = false;
        break;
      }
      if (!std::isfinite(v)) throw FormatError(where(path, lineno) + "non-finite value");
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw FormatError(where(path, lineno) + "unparsable field");
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError(where(path, lineno) + "expected " + std::to_string(rows.front().size()) +
                        " fields, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path.string() + ": no numeric rows");
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      M(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return M;
}

Vector read_csv_vector(const std::filesystem::path& path) {
  const Matrix M = read_csv_matrix(path);
  if (M.cols() == 1) return M.col(0);
  if (M.rows() == 1) return M.row(0).transpose();
  throw FormatError(path.string() + ": expected a single column or row, found " +
                    std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
}

void write_csv(const std::filesystem::path& path, const Matrix& M,
               const std::vector<std::string>& header) {
  std::string out;
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
    out += '\n';
  }
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out += ',';
      out += format_double(M(i, j));
    }
    out += '\n';
  }
  write_file(path, out);
}

void write_csv(const std::filesystem::path& path, const Vector& v, const std::string& header) {
  write_csv(path, Matrix(v), header.empty() ? std::vector<std::string>{} : std::vector{header});
}

UndirectedGraph parse_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  Index n = -1;
  std::vector<Edge> edges;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls{std::string(line)};
    std::string a, b, extra;
    ls >> a >> b;
    if (b.empty() || (ls >> extra))
      throw FormatError("edge list line " + std::to_string(lineno) + ": expected two fields");
    long long x = 0, y = 0;
    auto parse_int = [&](const std::string& s, long long& v) {
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc() && ptr == s.data() + s.size();
    };
    if (n < 0) {
      if (a != "n" || !parse_int(b, x) || x < 1)
        throw FormatError("edge list line " + std::to_string(lineno) + ": expected 'n <count>'");
      n = static_cast<Index>(x);
      continue;
    }
    if (!parse_int(a, x) || !parse_int(b, y))
      throw FormatError("edge list line " + std::to_string(lineno) + ": non-integer node");
    if (x < 1 || y < 1 || x > n || y > n)
      throw FormatError("edge list line " + std::to_string(lineno) + ": node out of range");
    edges.push_back({static_cast<Index>(x - 1), static_cast<Index>(y - 1)});
  }
  if (n < 0) throw FormatError("edge list has no 'n <count>' header");
  try {
    return UndirectedGraph(n, std::move(edges));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("edge list: ") + e.what());
  }
}

UndirectedGraph read_edge_list(const std::filesystem::path& path) {
  return parse_edge_list(read_file(path));
}

void write_edge_list(const std::filesystem::path& path, const UndirectedGraph& graph) {
  std::string out = "n " + std::to_string(graph.num_nodes()) + "\n";
  for (const Edge& e : graph.edges()) out += std::to_string(e.u + 1) + " " + std::to_string(e.v + 1) + "\n";
  write_file(path, out);
}

void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& matrix) {
  SparseMatrix M = matrix;
  M.prune(0.0);
  std::string out = "%%MatrixMarket matrix coordinate real general\n";
  out += std::to_string(M.rows()) + " " + std::to_string(M.cols()) + " " + std::to_string(M.nonZeros()) + "\n";
  for (Index r = 0; r < M.rows(); ++r)
    for (SparseMatrix::InnerIterator it(M, r); it; ++it)
      out += std::to_string(r + 1) + " " + std::to_string(it.col() + 1) + " " + format_double(it.value()) + "\n";
  write_file(path, out);
}

void write_matrix_market(const std::filesystem::path& path, const Matrix& M) {
  write_matrix_market(path, SparseMatrix(M.sparseView(0.0, 0.0)));
}

}  // namespace gppl
