#include "kaczmarz/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kaczmarz {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("matrix market: " + what);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Next line that is neither blank nor a % comment.
bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '%') continue;
    return true;
  }
  return false;
}

double parse_value(std::istringstream& ls) {
  double v;
  if (!(ls >> v)) fail("malformed numeric value");
  if (!std::isfinite(v)) fail("non-finite value");
  return v;
}

enum class Symmetry { General, Symmetric, Skew };

}  // namespace

CsrMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail("empty input");
  std::istringstream hs(lower(line));
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%matrixmarket") fail("missing %%MatrixMarket banner");
  if (object != "matrix") fail("unsupported object: " + object);
  if (format != "coordinate" && format != "array") fail("unsupported format: " + format);
  if (field == "pattern")
    fail("pattern field carries no values; convert to a real-valued file first");
  if (field != "real") fail("unsupported field: " + field);
  Symmetry sym;
  if (symmetry == "general")
    sym = Symmetry::General;
  else if (symmetry == "symmetric")
    sym = Symmetry::Symmetric;
  else if (symmetry == "skew-symmetric")
    sym = Symmetry::Skew;
  else
    fail("unsupported symmetry: " + symmetry);

  if (!next_content_line(in, line)) fail("missing size line");
  std::istringstream ss(line);

  if (format == "coordinate") {
    long long mll, nll, nnzll;
    if (!(ss >> mll >> nll >> nnzll) || mll <= 0 || nll <= 0 || nnzll < 0)
      fail("malformed coordinate size line");
    const auto m = static_cast<std::size_t>(mll);
    const auto n = static_cast<std::size_t>(nll);
    if (sym != Symmetry::General && m != n) fail("symmetric storage requires a square matrix");

    std::vector<std::size_t> ri, ci;
    Vector vals;
    ri.reserve(nnzll);
    ci.reserve(nnzll);
    vals.reserve(nnzll);
    for (long long e = 0; e < nnzll; ++e) {
      if (!next_content_line(in, line)) fail("fewer entries than the size line promises");
      std::istringstream ls(line);
      long long i, j;
      if (!(ls >> i >> j)) fail("malformed entry line");
      const double v = parse_value(ls);
      if (i < 1 || j < 1 || i > mll || j > nll) fail("entry index out of range");
      const auto iu = static_cast<std::size_t>(i - 1);
      const auto ju = static_cast<std::size_t>(j - 1);
      if (sym == Symmetry::Skew && i == j && v != 0.0)
        fail("skew-symmetric matrix with nonzero diagonal entry");
      ri.push_back(iu);
      ci.push_back(ju);
      vals.push_back(v);
      if (iu != ju && sym != Symmetry::General) {
        ri.push_back(ju);
        ci.push_back(iu);
        vals.push_back(sym == Symmetry::Symmetric ? v : -v);
      }
    }
    return CsrMatrix::from_triplets(m, n, ri, ci, vals);
  }

  // array: dense column-major values
  long long mll, nll;
  if (!(ss >> mll >> nll) || mll <= 0 || nll <= 0) fail("malformed array size line");
  const auto m = static_cast<std::size_t>(mll);
  const auto n = static_cast<std::size_t>(nll);
  if (sym != Symmetry::General && m != n) fail("symmetric storage requires a square matrix");

  DenseMatrix d(m, n);
  auto read_one = [&]() {
    if (!next_content_line(in, line)) fail("fewer values than the array shape needs");
    std::istringstream ls(line);
    return parse_value(ls);
  };
  switch (sym) {
    case Symmetry::General:
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) d(i, j) = read_one();
      break;
    case Symmetry::Symmetric:
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = j; i < m; ++i) {
          const double v = read_one();
          d(i, j) = v;
          d(j, i) = v;
        }
      break;
    case Symmetry::Skew:
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = j + 1; i < m; ++i) {
          const double v = read_one();
          d(i, j) = v;
          d(j, i) = -v;
        }
      break;
  }
  return CsrMatrix::from_dense(d);
}

CsrMatrix read_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const CsrMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  char buf[40];
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      std::snprintf(buf, sizeof buf, "%.17g", vals[p]);
      out << (i + 1) << ' ' << (cols[p] + 1) << ' ' << buf << '\n';
    }
  }
  if (!out) fail("write failed");
}

void write_matrix_market_file(const std::string& path, const CsrMatrix& a) {
  std::ofstream out(path);
  if (!out) fail("cannot open " + path + " for writing");
  write_matrix_market(out, a);
}

}  // namespace kaczmarz
