#include "fillin/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace fillin {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <class T>
bool parse_number(std::string_view token, T& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

CsrMatrix read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw ParseError(0, "empty Matrix Market stream");
  ++line_no;
  const auto header = split_ws(line);
  if (header.size() != 5 || lowercase(std::string(header[0])) != "%%matrixmarket")
    throw ParseError(line_no, "missing %%MatrixMarket header");
  const std::string object = lowercase(std::string(header[1]));
  const std::string format = lowercase(std::string(header[2]));
  const std::string field = lowercase(std::string(header[3]));
  const std::string symmetry = lowercase(std::string(header[4]));
  if (object != "matrix") throw ParseError(line_no, "unsupported object '" + object + "'");
  if (format != "coordinate") throw ParseError(line_no, "only coordinate format is supported");
  if (field == "complex") throw ParseError(line_no, "complex matrices are not supported");
  if (field != "real" && field != "integer" && field != "pattern")
    throw ParseError(line_no, "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError(line_no, "unsupported symmetry '" + symmetry + "'");
  const bool pattern = field == "pattern";
  const bool symmetric = symmetry == "symmetric";

  // Skip comments to the size line.
  std::vector<std::string_view> size_tokens;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%' || is_blank(line)) continue;
    size_tokens = split_ws(line);
    break;
  }
  if (size_tokens.size() != 3) throw ParseError(line_no, "expected 'rows cols nnz' size line");
  long long rows = 0, cols = 0, entries = 0;
  if (!parse_number(size_tokens[0], rows) || !parse_number(size_tokens[1], cols) ||
      !parse_number(size_tokens[2], entries) || rows < 0 || cols < 0 || entries < 0)
    throw ParseError(line_no, "malformed size line");
  if (rows != cols) throw ParseError(line_no, "matrix is not square");
  const auto n = static_cast<Index>(rows);

  std::vector<CsrMatrix::Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(symmetric ? 2 * entries : entries));
  long long seen = 0;
  while (seen < entries && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%' || is_blank(line)) continue;
    const auto tok = split_ws(line);
    const std::size_t want = pattern ? 2 : 3;
    if (tok.size() < want) throw ParseError(line_no, "too few fields in entry");
    long long r = 0, c = 0;
    double v = 1.0;
    if (!parse_number(tok[0], r) || !parse_number(tok[1], c))
      throw ParseError(line_no, "malformed index");
    if (!pattern && !parse_number(tok[2], v)) throw ParseError(line_no, "malformed value");
    if (r < 1 || r > rows || c < 1 || c > cols) throw ParseError(line_no, "index out of range");
    const auto ri = static_cast<Index>(r - 1);
    const auto ci = static_cast<Index>(c - 1);
    triplets.push_back({ri, ci, v});
    if (symmetric && ri != ci) triplets.push_back({ci, ri, v});
    ++seen;
  }
  if (seen < entries) throw ParseError(line_no, "unexpected end of stream before all entries");
  return CsrMatrix::from_triplets(n, triplets);
}

CsrMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_matrix_market(in);
}

void write_matrix_market(const CsrMatrix& m, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.n() << ' ' << m.n() << ' ' << m.nnz() << '\n';
  char buf[64];
  for (Index r = 0; r < m.n(); ++r) {
    const auto cols = m.row_cols(r);
    const auto vals = m.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto res = std::to_chars(buf, buf + sizeof buf, vals[k]);
      out << (r + 1) << ' ' << (cols[k] + 1) << ' ' << std::string_view(buf, res.ptr - buf) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing Matrix Market stream");
}

void write_matrix_market(const CsrMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_matrix_market(m, out);
}

}  // namespace fillin
