#pragma once

#include <iosfwd>
#include <string>

#include "kaczmarz/matrix.hpp"

namespace kaczmarz {

/// Matrix Market reader for real-valued matrices. Supports the
/// coordinate and array formats with general, symmetric and
/// skew-symmetric storage; symmetric halves are expanded and
/// duplicate coordinate entries are summed. Pattern, complex and
/// integer fields are rejected, as are malformed headers, out of
/// range indices and non-finite values.
CsrMatrix read_matrix_market(std::istream& in);
CsrMatrix read_matrix_market_file(const std::string& path);

/// Writes coordinate/real/general with 1-based indices and %.17g
/// values, so read(write(A)) reproduces A bit-exactly.
void write_matrix_market(std::ostream& out, const CsrMatrix& a);
void write_matrix_market_file(const std::string& path, const CsrMatrix& a);

}  // namespace kaczmarz
