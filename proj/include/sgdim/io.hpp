/**
 * @file io.hpp
 * @brief Line-oriented text formats for arrangements, triple systems and
 * scaling records.
 *
 * Arrangement:
 *
 *     arrangement v1
 *     field real            (or: field complex)
 *     ambient <l>
 *     n <count>
 *     space <id> dim <k>    then k rows of l reals, or l pairs re,im
 *
 * System:
 *
 *     system v1
 *     n <n> alpha <alpha> delta <p/q>
 *     3 i j k               or: 2 i j
 *
 * Blank lines and lines starting with '#' are ignored. Writers emit 17
 * significant digits so a round trip reproduces every double exactly.
 */
#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sgdim/arrangement.hpp"
#include "sgdim/dependency.hpp"
#include "sgdim/error.hpp"
#include "sgdim/linalg.hpp"
#include "sgdim/rational.hpp"

namespace sgdim {

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

/// Reads non-blank, non-comment lines split into whitespace tokens.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next meaningful line; nullopt at end of input.
  std::optional<std::vector<std::string>> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string t; ss >> t;) tokens.push_back(t);
      if (tokens.empty() || tokens.front().front() == '#') continue;
      return tokens;
    }
    return std::nullopt;
  }

  std::vector<std::string> expect(const char* what) {
    auto t = next();
    if (!t) throw ParseError(line_no_ + 1, std::string("unexpected end of input, expected ") + what);
    return *t;
  }

  std::size_t line() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

inline double parse_real(const std::string& s, std::size_t line) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ParseError(line, "not a real number: '" + s + "'");
  if (errno == ERANGE && std::abs(v) > 1.0) throw ParseError(line, "real out of range: '" + s + "'");
  if (!std::isfinite(v)) throw ParseError(line, "non-finite real: '" + s + "'");
  return v;
}

inline std::size_t parse_count(const std::string& s, std::size_t line) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ParseError(line, "not a nonnegative integer: '" + s + "'");
  }
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ParseError(line, "integer out of range: '" + s + "'");
  return static_cast<std::size_t>(v);
}

/// `key value` with a fixed key.
inline std::string keyed(const std::vector<std::string>& t, const char* key, std::size_t line) {
  if (t.size() != 2 || t[0] != key) throw ParseError(line, std::string("expected '") + key + " <value>'");
  return t[1];
}

inline void header(LineReader& r, const char* kind) {
  const auto t = r.expect(kind);
  if (t.size() != 2 || t[0] != kind) throw ParseError(r.line(), std::string("expected '") + kind + " v1'");
  if (t[1] != "v1") throw ParseError(r.line(), "unsupported format version '" + t[1] + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Arrangements

/// One space as written, before any invariant is checked.
struct RawSpace {
  std::size_t id = 0;
  Matrix re;
  Matrix im;  ///< empty for real files
};

struct ArrangementFile {
  FieldOrigin field = FieldOrigin::real;
  std::size_t ambient = 0;
  std::vector<RawSpace> spaces;
};

/// Syntax only: shapes, numbers and ids are checked, bases are not.
inline ArrangementFile read_arrangement_file(std::istream& in) {
  detail::LineReader r(in);
  detail::header(r, "arrangement");
  ArrangementFile f;
  {
    const auto v = detail::keyed(r.expect("field"), "field", r.line());
    if (v == "real") {
      f.field = FieldOrigin::real;
    } else if (v == "complex") {
      f.field = FieldOrigin::complex;
    } else {
      throw ParseError(r.line(), "field must be 'real' or 'complex'");
    }
  }
  f.ambient = detail::parse_count(detail::keyed(r.expect("ambient"), "ambient", r.line()), r.line());
  const std::size_t n = detail::parse_count(detail::keyed(r.expect("n"), "n", r.line()), r.line());
  const bool cplx = f.field == FieldOrigin::complex;
  const auto l = static_cast<Index>(f.ambient);
  for (std::size_t i = 0; i < n; ++i) {
    const auto h = r.expect("space header");
    if (h.size() != 4 || h[0] != "space" || h[2] != "dim") throw ParseError(r.line(), "expected 'space <id> dim <k>'");
    RawSpace s;
    s.id = detail::parse_count(h[1], r.line());
    if (s.id != i) throw ParseError(r.line(), "space ids must run 0.." + std::to_string(n - 1) + " in order");
    const auto k = static_cast<Index>(detail::parse_count(h[3], r.line()));
    s.re = Matrix(k, l);
    if (cplx) s.im = Matrix(k, l);
    for (Index row = 0; row < k; ++row) {
      const auto t = r.expect("basis row");
      if (static_cast<Index>(t.size()) != l) {
        throw ParseError(r.line(), "expected " + std::to_string(l) + " entries, found " + std::to_string(t.size()));
      }
      for (Index c = 0; c < l; ++c) {
        const std::string& tok = t[static_cast<std::size_t>(c)];
        if (!cplx) {
          s.re(row, c) = detail::parse_real(tok, r.line());
          continue;
        }
        const auto comma = tok.find(',');
        if (comma == std::string::npos) throw ParseError(r.line(), "expected 're,im', found '" + tok + "'");
        s.re(row, c) = detail::parse_real(tok.substr(0, comma), r.line());
        s.im(row, c) = detail::parse_real(tok.substr(comma + 1), r.line());
      }
    }
    f.spaces.push_back(std::move(s));
  }
  if (r.next()) throw ParseError(r.line(), "trailing content after the last space");
  return f;
}

inline std::vector<ComplexSubspace> to_complex(const ArrangementFile& f) {
  if (f.field != FieldOrigin::complex) throw PreconditionError("to_complex: file holds a real arrangement");
  std::vector<ComplexSubspace> out;
  for (const auto& s : f.spaces) out.push_back({f.ambient, s.re, s.im});
  return out;
}

/// Real files must carry orthonormal rows; complex files are realified here.
inline Arrangement to_arrangement(const ArrangementFile& f, const Tolerance& tol = {}) {
  if (f.field == FieldOrigin::complex) {
    Arrangement a = complex_to_real(to_complex(f), tol);
    a.ambient = f.ambient;
    return a;
  }
  Arrangement a;
  a.ambient = f.ambient;
  for (const auto& s : f.spaces) {
    if (static_cast<std::size_t>(s.re.rows()) > f.ambient) {
      throw InvariantError("space " + std::to_string(s.id) + ": dimension exceeds ambient");
    }
    if (orthonormality_defect(s.re) > tol.residual_tol) {
      throw InvariantError("space " + std::to_string(s.id) + ": orthonormal basis rows violated (defect " +
                           format_real(orthonormality_defect(s.re)) + ")");
    }
    a.spaces.push_back(s.re.rows() == 0 ? Subspace::zero(f.ambient) : Subspace::from_orthonormal(s.re, tol));
  }
  return a;
}

inline Arrangement read_arrangement(std::istream& in, const Tolerance& tol = {}) {
  return to_arrangement(read_arrangement_file(in), tol);
}

namespace detail {

inline void write_rows(std::ostream& out, const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_real(m(r, c));
    out << '\n';
  }
}

}  // namespace detail

inline void write_arrangement(std::ostream& out, const Arrangement& arr) {
  out << "arrangement v1\nfield real\nambient " << arr.ambient << "\nn " << arr.size() << '\n';
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out << "space " << i << " dim " << arr[i].dim() << '\n';
    detail::write_rows(out, arr[i].basis());
  }
}

inline void write_complex_arrangement(std::ostream& out, const std::vector<ComplexSubspace>& spaces) {
  const std::size_t l = spaces.empty() ? 0 : spaces.front().ambient;
  out << "arrangement v1\nfield complex\nambient " << l << "\nn " << spaces.size() << '\n';
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    const auto& s = spaces[i];
    out << "space " << i << " dim " << s.dim() << '\n';
    for (Index r = 0; r < s.basis_re.rows(); ++r) {
      for (Index c = 0; c < s.basis_re.cols(); ++c) {
        out << (c ? " " : "") << format_real(s.basis_re(r, c)) << ',' << format_real(s.basis_im(r, c));
      }
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Systems

inline TripleSystem read_system(std::istream& in) {
  detail::LineReader r(in);
  detail::header(r, "system");
  TripleSystem sys;
  const auto h = r.expect("system parameters");
  if (h.size() != 6 || h[0] != "n" || h[2] != "alpha" || h[4] != "delta") {
    throw ParseError(r.line(), "expected 'n <n> alpha <alpha> delta <delta>'");
  }
  sys.n = detail::parse_count(h[1], r.line());
  sys.alpha = detail::parse_count(h[3], r.line());
  try {
    sys.delta = Rational::parse(h[5]);
  } catch (const Error& e) {
    throw ParseError(r.line(), std::string("bad delta: ") + e.what());
  }
  if (sys.delta < Rational(0)) throw ParseError(r.line(), "delta must be nonnegative");
  while (auto t = r.next()) {
    const std::size_t size = detail::parse_count(t->front(), r.line());
    if ((size != 2 && size != 3) || t->size() != size + 1) {
      throw ParseError(r.line(), "expected '3 i j k' or '2 i j'");
    }
    IndexSet s;
    for (std::size_t j = 1; j <= size; ++j) {
      const std::size_t idx = detail::parse_count((*t)[j], r.line());
      if (idx >= sys.n) throw ParseError(r.line(), "index " + std::to_string(idx) + " out of range");
      s.push_back(idx);
    }
    sys.sets.push_back(std::move(s));
  }
  return sys;
}

inline void write_system(std::ostream& out, const TripleSystem& sys) {
  out << "system v1\nn " << sys.n << " alpha " << sys.alpha << " delta " << sys.delta << '\n';
  for (const auto& s : sys.sets) {
    out << s.size();
    for (std::size_t i : s) out << ' ' << i;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Scaling records

/// M with the achieved operator gap. `augmented` is set when M came from the
/// augmented model, in which case the gap refers to that model.
struct ScalingRecord {
  Matrix M;
  double gap = 0.0;
  std::optional<std::size_t> augmented;
};

inline void write_scaling(std::ostream& out, const ScalingRecord& rec) {
  out << "scaling v1\nambient " << rec.M.rows() << '\n';
  detail::write_rows(out, rec.M);
  out << "gap " << format_real(rec.gap) << '\n';
  if (rec.augmented) out << "augmented " << *rec.augmented << '\n';
}

inline ScalingRecord read_scaling(std::istream& in) {
  detail::LineReader r(in);
  detail::header(r, "scaling");
  const auto l = static_cast<Index>(detail::parse_count(detail::keyed(r.expect("ambient"), "ambient", r.line()), r.line()));
  ScalingRecord rec;
  rec.M = Matrix(l, l);
  for (Index row = 0; row < l; ++row) {
    const auto t = r.expect("matrix row");
    if (static_cast<Index>(t.size()) != l) throw ParseError(r.line(), "expected " + std::to_string(l) + " entries");
    for (Index c = 0; c < l; ++c) rec.M(row, c) = detail::parse_real(t[static_cast<std::size_t>(c)], r.line());
  }
  rec.gap = detail::parse_real(detail::keyed(r.expect("gap"), "gap", r.line()), r.line());
  if (auto t = r.next()) rec.augmented = detail::parse_count(detail::keyed(*t, "augmented", r.line()), r.line());
  if (r.next()) throw ParseError(r.line(), "trailing content after the scaling record");
  return rec;
}

}  // namespace sgdim
