/**
 * @file arrangement.hpp
 * @brief Subspace arrangements: the data model, separation and intersection
 * tests, complex-to-real reduction and seeded example generators.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sgdim/error.hpp"
#include "sgdim/linalg.hpp"

namespace sgdim {

/// A subspace of R^ambient held as an orthonormal row basis. Zero rows
/// encode the zero space.
class Subspace {
 public:
  Subspace() = default;

  static Subspace zero(std::size_t ambient) {
    Subspace s;
    s.ambient_ = ambient;
    s.basis_ = Matrix(0, static_cast<Index>(ambient));
    return s;
  }

  /// Adopt rows that are already orthonormal; throws if they are not.
  static Subspace from_orthonormal(Matrix basis, const Tolerance& tol = {}) {
    require_finite(basis, "subspace basis");
    if (basis.rows() > basis.cols()) throw InvariantError("subspace: more basis rows than ambient dimension");
    if (orthonormality_defect(basis) > tol.residual_tol) {
      throw InvariantError("subspace: basis rows are not orthonormal");
    }
    Subspace s;
    s.ambient_ = static_cast<std::size_t>(basis.cols());
    s.basis_ = std::move(basis);
    return s;
  }

  /// Row span of arbitrary rows; `reference` as in orthonormalize.
  static Subspace span_of(const Matrix& rows, const Tolerance& tol = {}, double reference = 0.0) {
    require_finite(rows, "subspace rows");
    Subspace s;
    s.ambient_ = static_cast<std::size_t>(rows.cols());
    s.basis_ = orthonormalize(rows, tol, reference);
    return s;
  }

  std::size_t ambient() const noexcept { return ambient_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(basis_.rows()); }
  bool is_zero() const noexcept { return basis_.rows() == 0; }
  const Matrix& basis() const noexcept { return basis_; }

 private:
  std::size_t ambient_ = 0;
  Matrix basis_;
};

enum class FieldOrigin { real, complex };

struct Arrangement {
  std::size_t ambient = 0;
  std::vector<Subspace> spaces;
  FieldOrigin origin = FieldOrigin::real;

  std::size_t size() const noexcept { return spaces.size(); }
  const Subspace& operator[](std::size_t i) const { return spaces[i]; }
};

/// k rows of C^ambient stored as separate real and imaginary parts.
struct ComplexSubspace {
  std::size_t ambient = 0;
  Matrix basis_re;
  Matrix basis_im;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(basis_re.rows()); }
};

/// Rows (re, im) and (-im, re) for each complex row: the R-linear image of
/// the C-span inside R^{2 ambient}.
inline Matrix realification(const Matrix& re, const Matrix& im) {
  Matrix out(2 * re.rows(), 2 * re.cols());
  for (Index r = 0; r < re.rows(); ++r) {
    out.row(2 * r) << re.row(r), im.row(r);
    out.row(2 * r + 1) << -im.row(r), re.row(r);
  }
  return out;
}

inline void validate_complex(const ComplexSubspace& s, const Tolerance& tol = {}) {
  if (s.basis_re.rows() != s.basis_im.rows() || s.basis_re.cols() != s.basis_im.cols() ||
      static_cast<std::size_t>(s.basis_re.cols()) != s.ambient) {
    throw InvariantError("complex subspace: real and imaginary shapes differ");
  }
  require_finite(s.basis_re, "complex subspace");
  require_finite(s.basis_im, "complex subspace");
  if (rank(realification(s.basis_re, s.basis_im), tol) != 2 * s.dim()) {
    throw InvariantError("complex subspace: rows are not independent over C");
  }
}

/// dim over C of the sum of the given complex spaces.
inline std::size_t complex_dimension(const std::vector<ComplexSubspace>& spaces, const Tolerance& tol = {}) {
  if (spaces.empty()) return 0;
  Matrix all(0, 2 * static_cast<Index>(spaces.front().ambient));
  for (const auto& s : spaces) all = vstack(all, realification(s.basis_re, s.basis_im));
  return rank(all, tol) / 2;
}

// ---------------------------------------------------------------------------
// Basic queries

inline Matrix stack_bases(const Arrangement& arr) {
  Index rows = 0;
  for (const auto& s : arr.spaces) rows += static_cast<Index>(s.dim());
  Matrix out(rows, static_cast<Index>(arr.ambient));
  Index r = 0;
  for (const auto& s : arr.spaces) {
    out.middleRows(r, s.basis().rows()) = s.basis();
    r += s.basis().rows();
  }
  return out;
}

inline Matrix stack_bases(const Arrangement& arr, const std::vector<std::size_t>& which) {
  Matrix out(0, static_cast<Index>(arr.ambient));
  for (std::size_t i : which) out = vstack(out, arr.spaces.at(i).basis());
  return out;
}

/// dim(V_1 + ... + V_n).
inline std::size_t dimension(const Arrangement& arr, const Tolerance& tol = {}) {
  return rank(stack_bases(arr), tol);
}

inline std::size_t max_dim(const Arrangement& arr) {
  std::size_t k = 0;
  for (const auto& s : arr.spaces) k = std::max(k, s.dim());
  return k;
}

/// Human-readable list of violated arrangement invariants; empty when valid.
inline std::vector<std::string> arrangement_defects(const Arrangement& arr, const Tolerance& tol = {}) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& s = arr.spaces[i];
    const std::string id = "space " + std::to_string(i);
    if (s.ambient() != arr.ambient || static_cast<std::size_t>(s.basis().cols()) != arr.ambient) {
      out.push_back(id + ": ambient dimension differs from arrangement");
      continue;
    }
    if (!s.basis().allFinite()) {
      out.push_back(id + ": non-finite entry");
      continue;
    }
    if (s.dim() > arr.ambient) out.push_back(id + ": dimension exceeds ambient");
    if (orthonormality_defect(s.basis()) > tol.residual_tol) {
      out.push_back(id + ": orthonormal basis rows violated");
    }
  }
  return out;
}

inline void validate_arrangement(const Arrangement& arr, const Tolerance& tol = {}) {
  auto defects = arrangement_defects(arr, tol);
  if (!defects.empty()) throw InvariantError("arrangement: " + defects.front());
}

inline bool k_bounded_check(const Arrangement& arr, std::size_t k) {
  for (const auto& s : arr.spaces) {
    if (s.dim() > k) return false;
  }
  return true;
}

/// Pairs (i, j), i < j, with dim(V_i + V_j) < dim V_i + dim V_j.
inline std::vector<std::pair<std::size_t, std::size_t>> pairwise_zero_intersection(const Arrangement& arr,
                                                                                    const Tolerance& tol = {}) {
  std::vector<std::pair<std::size_t, std::size_t>> bad;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    for (std::size_t j = i + 1; j < arr.size(); ++j) {
      const auto& a = arr.spaces[i];
      const auto& b = arr.spaces[j];
      if (a.is_zero() || b.is_zero()) continue;
      if (rank(vstack(a.basis(), b.basis()), tol) < a.dim() + b.dim()) bad.emplace_back(i, j);
    }
  }
  return bad;
}

/// Cosine of the smallest principal angle between v and w (0 if either is zero).
inline double principal_cosine(const Subspace& v, const Subspace& w) {
  if (v.is_zero() || w.is_zero()) return 0.0;
  if (v.ambient() != w.ambient()) throw PreconditionError("principal_cosine: ambient mismatch");
  return spectral_norm(v.basis() * w.basis().transpose());
}

/// Absolute slack on the separation inequality; floating cosines of exact
/// boundary configurations land a few ulps either side of 1 - tau.
inline constexpr double kSeparationSlack = 1e-12;

/// |<u, u'>| <= 1 - tau for all unit u in v and u' in w. The boundary counts.
inline bool tau_separated(const Subspace& v, const Subspace& w, double tau) {
  if (!(tau > 0.0) || tau > 1.0) throw PreconditionError("tau_separated: tau must lie in (0, 1]");
  return principal_cosine(v, w) <= 1.0 - tau + kSeparationSlack;
}

/// V'_j = real span of Re and Im of the rows of V_j.
inline Arrangement complex_to_real(const std::vector<ComplexSubspace>& spaces, const Tolerance& tol = {}) {
  Arrangement out;
  out.origin = FieldOrigin::complex;
  if (spaces.empty()) return out;
  out.ambient = spaces.front().ambient;
  for (const auto& s : spaces) {
    if (s.ambient != out.ambient) throw PreconditionError("complex_to_real: ambient mismatch");
    validate_complex(s, tol);
    out.spaces.push_back(Subspace::span_of(vstack(s.basis_re, s.basis_im), tol));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators

/// n spaces of dimension k in ceil(1/delta) blocks, each block inside its own
/// random 2k-dimensional space.
struct GroupedSpec {
  std::size_t k = 1;
  double delta = 0.5;
  std::size_t n = 6;
  std::size_t ambient = 0;  ///< 0 means 2k * blocks
};

/// span{e_i, e_j} for all i < j.
struct GridSpec {
  std::size_t ambient = 4;
};

/// Random k-spaces with `triples` of them planted inside the sum of two
/// earlier ones.
struct PlantedSpec {
  std::size_t n = 10;
  std::size_t k = 2;
  std::size_t ambient = 20;
  std::size_t triples = 5;
};

using GeneratorSpec = std::variant<GroupedSpec, GridSpec, PlantedSpec>;

struct Generated {
  Arrangement arrangement;
  std::vector<std::array<std::size_t, 3>> planted;
  std::vector<std::vector<std::size_t>> groups;
};

namespace detail {

inline Matrix gaussian(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

inline std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

inline std::size_t block_count(double delta) {
  if (!(delta > 0.0)) throw PreconditionError("grouped: delta must be positive");
  return static_cast<std::size_t>(std::max(1.0, std::ceil(1.0 / delta - 1e-12)));
}

inline bool meets_trivially(const Subspace& s, const std::vector<Subspace>& others, const Tolerance& tol) {
  for (const auto& o : others) {
    if (rank(vstack(s.basis(), o.basis()), tol) < s.dim() + o.dim()) return false;
  }
  return true;
}

constexpr int kRedraws = 64;

inline Generated grouped(const GroupedSpec& spec, std::uint64_t seed, const Tolerance& tol) {
  const std::size_t g = block_count(spec.delta);
  const std::size_t k = spec.k;
  if (k == 0) throw PreconditionError("grouped: k must be positive");
  const std::size_t total = 2 * k * g;
  const std::size_t ambient = spec.ambient == 0 ? total : spec.ambient;
  if (ambient < total) throw PreconditionError("grouped: ambient smaller than 2k * blocks");
  if (spec.n < 3 * g) throw PreconditionError("grouped: need at least three spaces per block");

  auto rng = seeded(seed, 0x67726f7570ULL);
  Matrix frame;
  for (int attempt = 0;; ++attempt) {
    frame = orthonormalize(gaussian(rng, static_cast<Index>(total), static_cast<Index>(ambient)), tol);
    if (static_cast<std::size_t>(frame.rows()) == total) break;
    if (attempt > kRedraws) throw Error("grouped: could not draw independent blocks");
  }

  Generated out;
  out.arrangement.ambient = ambient;
  out.groups.resize(g);
  std::size_t next = 0;
  for (std::size_t b = 0; b < g; ++b) {
    const std::size_t members = spec.n / g + (b < spec.n % g ? 1 : 0);
    Matrix block = frame.middleRows(static_cast<Index>(2 * k * b), static_cast<Index>(2 * k));
    std::vector<Subspace> placed;
    for (std::size_t j = 0; j < members; ++j) {
      Subspace s;
      for (int attempt = 0;; ++attempt) {
        s = Subspace::span_of(gaussian(rng, static_cast<Index>(k), static_cast<Index>(2 * k)) * block, tol);
        if (s.dim() == k && meets_trivially(s, placed, tol)) break;
        if (attempt > kRedraws) throw Error("grouped: generic draw failed");
      }
      placed.push_back(s);
      out.groups[b].push_back(next++);
    }
    for (auto& s : placed) out.arrangement.spaces.push_back(std::move(s));
  }
  return out;
}

inline Generated grid(const GridSpec& spec) {
  if (spec.ambient < 2) throw PreconditionError("grid: ambient must be at least 2");
  Generated out;
  const auto l = static_cast<Index>(spec.ambient);
  out.arrangement.ambient = spec.ambient;
  for (Index i = 0; i < l; ++i) {
    for (Index j = i + 1; j < l; ++j) {
      Matrix b = Matrix::Zero(2, l);
      b(0, i) = 1.0;
      b(1, j) = 1.0;
      out.arrangement.spaces.push_back(Subspace::from_orthonormal(std::move(b)));
    }
  }
  return out;
}

/// Shared plan for the real and complex planted generators: which earlier
/// pair each planted space is drawn from.
inline std::vector<std::array<std::size_t, 3>> planted_plan(const PlantedSpec& spec, std::mt19937_64& rng) {
  if (spec.k == 0) throw PreconditionError("planted: k must be positive");
  if (2 * spec.k > spec.ambient) throw PreconditionError("planted: 2k exceeds ambient");
  if (spec.triples > 0 && spec.triples + 2 > spec.n) throw PreconditionError("planted: too many triples for n");
  std::vector<std::array<std::size_t, 3>> plan;
  for (std::size_t t = 0; t < spec.triples; ++t) {
    const std::size_t c = t + 2;
    if (t == 0) {
      plan.push_back({0, 1, 2});
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, c - 1);
    std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    plan.push_back({std::min(a, b), std::max(a, b), c});
  }
  return plan;
}

inline Generated planted(const PlantedSpec& spec, std::uint64_t seed, const Tolerance& tol) {
  auto rng = seeded(seed, 0x706c616e74ULL);
  const auto k = static_cast<Index>(spec.k);
  const auto l = static_cast<Index>(spec.ambient);
  Generated out;
  out.planted = planted_plan(spec, rng);
  out.arrangement.ambient = spec.ambient;
  auto& spaces = out.arrangement.spaces;
  std::size_t planted_next = 0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    Subspace s;
    for (int attempt = 0;; ++attempt) {
      if (planted_next < out.planted.size() && out.planted[planted_next][2] == i) {
        const auto& tr = out.planted[planted_next];
        Matrix parents = vstack(spaces[tr[0]].basis(), spaces[tr[1]].basis());
        s = Subspace::span_of(gaussian(rng, k, 2 * k) * parents, tol);
      } else {
        s = Subspace::span_of(gaussian(rng, k, l), tol);
      }
      if (s.dim() == spec.k && meets_trivially(s, spaces, tol)) break;
      if (attempt > kRedraws) throw Error("planted: generic draw failed");
    }
    if (planted_next < out.planted.size() && out.planted[planted_next][2] == i) ++planted_next;
    spaces.push_back(std::move(s));
  }
  return out;
}

}  // namespace detail

inline Generated generate_detailed(const GeneratorSpec& spec, std::uint64_t seed, const Tolerance& tol = {}) {
  return std::visit(
      [&](const auto& s) -> Generated {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GroupedSpec>) {
          return detail::grouped(s, seed, tol);
        } else if constexpr (std::is_same_v<T, GridSpec>) {
          return detail::grid(s);
        } else {
          return detail::planted(s, seed, tol);
        }
      },
      spec);
}

inline Arrangement generate(const GeneratorSpec& spec, std::uint64_t seed, const Tolerance& tol = {}) {
  return generate_detailed(spec, seed, tol).arrangement;
}

struct ComplexGenerated {
  std::vector<ComplexSubspace> spaces;
  std::vector<std::array<std::size_t, 3>> planted;
};

/// Complex analogue of the planted generator: planted spaces are generic
/// C-combinations of their two parents.
inline ComplexGenerated generate_complex_planted(const PlantedSpec& spec, std::uint64_t seed,
                                                 const Tolerance& tol = {}) {
  auto rng = detail::seeded(seed, 0x636f6d706cULL);
  const auto k = static_cast<Index>(spec.k);
  const auto l = static_cast<Index>(spec.ambient);
  ComplexGenerated out;
  out.planted = detail::planted_plan(spec, rng);
  std::size_t planted_next = 0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    ComplexSubspace s;
    s.ambient = spec.ambient;
    for (int attempt = 0;; ++attempt) {
      if (planted_next < out.planted.size() && out.planted[planted_next][2] == i) {
        const auto& tr = out.planted[planted_next];
        Matrix pre = vstack(out.spaces[tr[0]].basis_re, out.spaces[tr[1]].basis_re);
        Matrix pim = vstack(out.spaces[tr[0]].basis_im, out.spaces[tr[1]].basis_im);
        Matrix cre = detail::gaussian(rng, k, 2 * k);
        Matrix cim = detail::gaussian(rng, k, 2 * k);
        s.basis_re = cre * pre - cim * pim;
        s.basis_im = cre * pim + cim * pre;
      } else {
        s.basis_re = detail::gaussian(rng, k, l);
        s.basis_im = detail::gaussian(rng, k, l);
      }
      if (rank(realification(s.basis_re, s.basis_im), tol) == 2 * spec.k) break;
      if (attempt > detail::kRedraws) throw Error("complex planted: generic draw failed");
    }
    if (planted_next < out.planted.size() && out.planted[planted_next][2] == i) ++planted_next;
    out.spaces.push_back(std::move(s));
  }
  return out;
}

}  // namespace sgdim
