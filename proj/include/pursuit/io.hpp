#pragma once

#include "pursuit/accel.hpp"
#include "pursuit/atoms.hpp"
#include "pursuit/objective.hpp"
#include "pursuit/solvers.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace pursuit::io {

/// printf("%.17g"): round-trips every double.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<double> parse_row(std::string_view line, std::size_t row) {
  std::vector<double> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t comma = line.find(',', pos);
    const std::string_view cell = trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    double v = 0;
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (!cell.empty() && *begin == '+') ++begin;
    const auto res = std::from_chars(begin, end, v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != end)
      throw ParseError("non-numeric cell '" + std::string(cell) + "'", row);
    if (!std::isfinite(v)) throw ParseError("non-finite cell '" + std::string(cell) + "'", row);
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

/// Dense numeric CSV; '#' lines and blank lines are skipped. Rows are
/// reported 1-based by file line.
template <typename Scalar = double>
Matrix<Scalar> read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    rows.push_back(detail::parse_row(t, lineno));
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      throw ParseError("row has " + std::to_string(rows.back().size()) + " columns, expected " +
                           std::to_string(rows.front().size()),
                       lineno);
  }
  if (rows.empty()) throw ParseError("no data rows");
  Matrix<Scalar> m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(Index(i), Index(j)) = Scalar(rows[i][j]);
  return m;
}

template <typename Scalar = double>
Matrix<Scalar> read_matrix_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_matrix_csv<Scalar>(in);
}

template <typename Derived>
void write_matrix_csv(std::ostream& out, const Eigen::MatrixBase<Derived>& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_real(static_cast<double>(m(i, j)));
    out << "\n";
  }
}

template <typename Scalar>
struct Dictionary {
  /// One atom per column.
  Matrix<Scalar> atoms;
  bool symmetric = false;
};

/// Dictionary file: header `# atoms=<m> dim=<n> symmetric=<0|1>` followed by
/// one atom per row.
template <typename Scalar = double>
Dictionary<Scalar> read_dictionary(std::istream& in) {
  std::string header;
  std::size_t lineno = 0;
  while (std::getline(in, header)) {
    ++lineno;
    if (!detail::trim(header).empty()) break;
  }
  if (lineno == 0 || detail::trim(header).empty()) throw ParseError("empty dictionary file");
  long m = -1, n = -1;
  int sym = -1;
  if (std::sscanf(std::string(detail::trim(header)).c_str(), "# atoms=%ld dim=%ld symmetric=%d", &m, &n, &sym) != 3 ||
      m < 1 || n < 1 || (sym != 0 && sym != 1))
    throw ParseError("missing or malformed header '# atoms=<m> dim=<n> symmetric=<0|1>'", lineno);

  Dictionary<Scalar> out;
  out.atoms.resize(n, m);
  out.symmetric = sym == 1;
  long count = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto row = detail::parse_row(t, lineno);
    if (static_cast<long>(row.size()) != n)
      throw ParseError("atom has " + std::to_string(row.size()) + " entries, header says dim=" + std::to_string(n),
                       lineno);
    if (count >= m) throw ParseError("more atoms than the header's atoms=" + std::to_string(m), lineno);
    for (long i = 0; i < n; ++i) out.atoms(i, count) = Scalar(row[static_cast<std::size_t>(i)]);
    ++count;
  }
  if (count != m)
    throw ParseError("header says atoms=" + std::to_string(m) + " but file has " + std::to_string(count));
  return out;
}

template <typename Scalar = double>
Dictionary<Scalar> read_dictionary(const std::string& path) {
  auto in = detail::open_input(path);
  return read_dictionary<Scalar>(in);
}

template <typename Scalar>
void write_dictionary(std::ostream& out, const Matrix<Scalar>& atoms, bool symmetric) {
  out << "# atoms=" << atoms.cols() << " dim=" << atoms.rows() << " symmetric=" << (symmetric ? 1 : 0) << "\n";
  write_matrix_csv(out, atoms.transpose());
}

/// Loads a dictionary as an AtomSet; files flagged symmetric=0 are
/// symmetrized.
template <typename Scalar = double>
AtomSet<Scalar> load_atom_set(const std::string& path) {
  Dictionary<Scalar> d = read_dictionary<Scalar>(path);
  try {
    if (d.symmetric) return AtomSet<Scalar>(std::move(d.atoms), true);
    return AtomSet<Scalar>::symmetrize(d.atoms);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid dictionary '") + path + "': " + e.what());
  }
}

/// Least-squares problem: M as a CSV matrix (one observation per row) and b
/// as a one-row CSV.
template <typename Scalar = double>
LeastSquares<Scalar> load_least_squares(const std::string& design_path, const std::string& target_path) {
  Matrix<Scalar> M = read_matrix_csv<Scalar>(design_path);
  const Matrix<Scalar> b = read_matrix_csv<Scalar>(target_path);
  if (b.rows() != 1) throw ParseError("target file must contain exactly one row", 2);
  if (b.cols() != M.rows())
    throw ParseError("target has " + std::to_string(b.cols()) + " entries but the design has " +
                     std::to_string(M.rows()) + " rows", 1);
  return LeastSquares<Scalar>(std::move(M), Vector<Scalar>(b.row(0).transpose()));
}

inline const char* kTraceHeader = "iter,method,seed,fval,gap,atom,gamma,delta";

/// One CSV row per record. The psi columns are appended when the trace has
/// accelerated diagnostics and `with_psi` is set.
template <typename Scalar>
void write_trace_csv(std::ostream& out, const SolverTrace<Scalar>& trace, bool with_psi = false) {
  const bool psi = with_psi && trace.accel.size() == trace.records.size();
  out << kTraceHeader << (psi ? ",psi_star,psi_min" : "") << "\n";
  for (std::size_t t = 0; t < trace.records.size(); ++t) {
    const auto& r = trace.records[t];
    out << r.iter << "," << trace.method << "," << trace.seed << "," << format_real(double(r.fval)) << ","
        << format_real(double(trace.gap(t))) << "," << r.atom << "," << format_real(double(r.gamma)) << ","
        << format_real(double(r.delta));
    if (psi)
      out << "," << format_real(double(trace.accel[t].psi_star)) << "," << format_real(double(trace.accel[t].psi_min));
    out << "\n";
  }
}

}  // namespace pursuit::io
