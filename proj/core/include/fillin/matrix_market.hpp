#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "fillin/sparse.hpp"

namespace fillin {

/// Raised for malformed Matrix Market input. `line()` is 1-based, 0 when the
/// failure is not tied to a specific line (e.g. premature end of stream).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads "matrix coordinate {real|integer|pattern} {general|symmetric}".
/// Symmetric storage is expanded, duplicates are summed, pattern entries get
/// value 1.0. Rectangular and complex inputs are rejected.
CsrMatrix read_matrix_market(std::istream& in);
CsrMatrix read_matrix_market(const std::filesystem::path& path);

/// Always writes "coordinate real general" with round-trip exact values.
void write_matrix_market(const CsrMatrix& m, std::ostream& out);
void write_matrix_market(const CsrMatrix& m, const std::filesystem::path& path);

}  // namespace fillin
