/**
 * @file dependency.hpp
 * @brief Dependent triples, special spaces, triple families and
 * (alpha, delta)-systems: construction, validation, pruning and images
 * under linear maps.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sgdim/arrangement.hpp"
#include "sgdim/error.hpp"
#include "sgdim/linalg.hpp"
#include "sgdim/rational.hpp"

namespace sgdim {

using IndexSet = std::vector<std::size_t>;

/// A list of 2- and 3-element index sets (a multiset) over [n]. Every index
/// should appear in at least delta * n sets and every pair together in at
/// most alpha sets.
struct TripleSystem {
  std::size_t n = 0;
  std::vector<IndexSet> sets;
  std::size_t alpha = 0;
  Rational delta;

  std::size_t w() const noexcept { return sets.size(); }
};

struct SpecialSpace {
  Matrix span_basis;
  IndexSet member_indices;

  std::size_t size() const noexcept { return member_indices.size(); }
};

inline bool is_dependent_triple(const Subspace& v1, const Subspace& v2, const Subspace& v3, const Tolerance& tol = {}) {
  if (v1.ambient() != v2.ambient() || v2.ambient() != v3.ambient()) {
    throw PreconditionError("is_dependent_triple: ambient mismatch");
  }
  const std::size_t all = rank(vstack(vstack(v1.basis(), v2.basis()), v3.basis()), tol);
  return rank(vstack(v2.basis(), v3.basis()), tol) == all && rank(vstack(v1.basis(), v3.basis()), tol) == all &&
         rank(vstack(v1.basis(), v2.basis()), tol) == all;
}

/// Equality of spaces decided by rank.
inline bool same_space(const Subspace& a, const Subspace& b, const Tolerance& tol = {}) {
  if (a.dim() != b.dim()) return false;
  if (a.is_zero()) return true;
  return rank(vstack(a.basis(), b.basis()), tol) == a.dim();
}

inline void require_zero_intersections(const Arrangement& arr, const char* who, const Tolerance& tol) {
  auto bad = pairwise_zero_intersection(arr, tol);
  if (!bad.empty()) {
    throw PreconditionError(std::string(who) + ": spaces " + std::to_string(bad.front().first) + " and " +
                            std::to_string(bad.front().second) + " intersect nontrivially");
  }
}

/// Spans V_a + V_b containing at least three members, each member set listed
/// once and maximal.
inline std::vector<SpecialSpace> find_special_spaces(const Arrangement& arr, std::size_t k, const Tolerance& tol = {}) {
  if (!k_bounded_check(arr, k)) throw PreconditionError("find_special_spaces: a space exceeds dimension k");
  require_zero_intersections(arr, "find_special_spaces", tol);
  const std::size_t n = arr.size();
  std::vector<std::vector<bool>> covered(n, std::vector<bool>(n, false));
  std::vector<SpecialSpace> out;
  for (std::size_t a = 0; a < n; ++a) {
    if (arr[a].is_zero()) continue;
    for (std::size_t b = a + 1; b < n; ++b) {
      if (arr[b].is_zero() || covered[a][b]) continue;
      Matrix span = orthonormalize(vstack(arr[a].basis(), arr[b].basis()), tol);
      IndexSet members;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == a || c == b) {
          members.push_back(c);
        } else if (!arr[c].is_zero() && residual_norm(arr[c].basis(), span) <= tol.residual_tol) {
          members.push_back(c);
        }
      }
      if (members.size() < 3) continue;
      for (std::size_t x : members)
        for (std::size_t y : members) covered[x][y] = true;
      out.push_back({std::move(span), std::move(members)});
    }
  }
  return out;
}

/// r^2 - r triples over {0..r-1}: every element in exactly 3(r-1) triples,
/// every pair together in at most 6.
///
/// Odd r: the blocks {x-d, x, x+d} over Z_r for d != 0. Each ordered way of
/// placing a pair into a block has exactly one solution (x, d), so every pair
/// occurs exactly 6 times. Even r: build the odd family on Z_{r-1}, drop the
/// d = 1 blocks and replace each {x-1, x, x+1} by the three blocks that pair
/// one of its edges with the extra point r-1.
inline std::vector<std::array<std::size_t, 3>> build_triple_family(std::size_t r) {
  if (r < 3) throw PreconditionError("build_triple_family: r must be at least 3");
  const bool even = r % 2 == 0;
  const std::size_t s = even ? r - 1 : r;
  const std::size_t inf = r - 1;
  auto mod = [s](std::size_t v) { return v % s; };
  std::vector<std::array<std::size_t, 3>> out;
  out.reserve(r * r - r);
  for (std::size_t x = 0; x < s; ++x) {
    for (std::size_t d = 1; d < s; ++d) {
      const std::size_t lo = mod(x + s - d);
      const std::size_t hi = mod(x + d);
      if (even && d == 1) {
        out.push_back({inf, lo, x});
        out.push_back({inf, x, hi});
        out.push_back({inf, lo, hi});
      } else {
        out.push_back({lo, x, hi});
      }
    }
  }
  for (auto& t : out) std::sort(t.begin(), t.end());
  return out;
}

/// Per-index appearance counts.
inline std::vector<std::size_t> degrees(const TripleSystem& sys) {
  std::vector<std::size_t> deg(sys.n, 0);
  for (const auto& s : sys.sets)
    for (std::size_t i : s)
      if (i < sys.n) ++deg[i];
  return deg;
}

/// count >= delta * n, exactly.
inline bool meets_degree(std::size_t count, const Rational& delta, std::size_t n) {
  return static_cast<__int128>(count) * delta.den() >= static_cast<__int128>(delta.num()) * static_cast<__int128>(n);
}

/// ceil(delta * n), the number of sets each row of a rank certificate uses.
inline std::size_t degree_requirement(const Rational& delta, std::size_t n) {
  return static_cast<std::size_t>(std::max<std::int64_t>(0, (delta * Rational(static_cast<std::int64_t>(n))).ceil()));
}

/// The (6, delta)-system obtained from the special spaces of arr, delta the
/// largest value the constructed system satisfies.
inline TripleSystem build_sg_system(const Arrangement& arr, std::size_t k, const Tolerance& tol = {}) {
  TripleSystem sys;
  sys.n = arr.size();
  sys.alpha = 6;
  for (const auto& sp : find_special_spaces(arr, k, tol)) {
    for (const auto& t : build_triple_family(sp.size())) {
      sys.sets.push_back({sp.member_indices[t[0]], sp.member_indices[t[1]], sp.member_indices[t[2]]});
    }
  }
  if (sys.sets.empty() || sys.n == 0) return sys;
  auto deg = degrees(sys);
  const std::size_t low = *std::min_element(deg.begin(), deg.end());
  sys.delta = Rational(static_cast<std::int64_t>(low), static_cast<std::int64_t>(sys.n));
  return sys;
}

struct Violation {
  int requirement;  ///< 1 set shape, 2 dependency, 3 degree, 4 pair multiplicity, 5 counting bounds
  std::string message;
};

struct SystemReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool ok_except_degree() const {
    return std::none_of(violations.begin(), violations.end(), [](const Violation& v) { return v.requirement != 3; });
  }
};

/// Combinatorial and counting checks that need no geometry.
inline void check_structure(const TripleSystem& sys, SystemReport& report) {
  auto add = [&](int req, std::string msg) { report.violations.push_back({req, std::move(msg)}); };
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pairs;
  for (std::size_t j = 0; j < sys.sets.size(); ++j) {
    const auto& s = sys.sets[j];
    const std::string id = "set " + std::to_string(j);
    if (s.size() != 2 && s.size() != 3) {
      add(1, id + ": size " + std::to_string(s.size()) + " is not 2 or 3");
      continue;
    }
    bool in_range = true;
    for (std::size_t i : s) in_range = in_range && i < sys.n;
    if (!in_range) {
      add(1, id + ": index out of range");
      continue;
    }
    IndexSet sorted = s;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      add(1, id + ": repeated index");
      continue;
    }
    for (std::size_t a = 0; a < sorted.size(); ++a)
      for (std::size_t b = a + 1; b < sorted.size(); ++b) ++pairs[{sorted[a], sorted[b]}];
  }
  const auto deg = degrees(sys);
  for (std::size_t i = 0; i < sys.n; ++i) {
    if (!meets_degree(deg[i], sys.delta, sys.n)) {
      add(3, "index " + std::to_string(i) + " appears in " + std::to_string(deg[i]) + " sets, fewer than delta*n = " +
                 (sys.delta * Rational(static_cast<std::int64_t>(sys.n))).str());
    }
  }
  for (const auto& [pair, count] : pairs) {
    if (count > sys.alpha) {
      add(4, "pair (" + std::to_string(pair.first) + ", " + std::to_string(pair.second) + ") appears together in " +
                 std::to_string(count) + " sets, more than alpha = " + std::to_string(sys.alpha));
    }
  }
  // delta n^2 / 3 <= w <= alpha n^2 / 2 and delta / alpha <= 3/2.
  const __int128 n2 = static_cast<__int128>(sys.n) * sys.n;
  const __int128 w = sys.w();
  if (static_cast<__int128>(sys.delta.num()) * n2 > 3 * w * sys.delta.den()) {
    add(5, "w = " + std::to_string(sys.w()) + " is below delta*n^2/3");
  }
  if (2 * w > static_cast<__int128>(sys.alpha) * n2) {
    add(5, "w = " + std::to_string(sys.w()) + " exceeds alpha*n^2/2");
  }
  if (sys.n > 0 && 2 * static_cast<__int128>(sys.delta.num()) > 3 * static_cast<__int128>(sys.alpha) * sys.delta.den()) {
    add(5, "delta/alpha exceeds 3/2");
  }
}

inline SystemReport validate_system(const Arrangement& arr, const TripleSystem& sys, const Tolerance& tol = {}) {
  SystemReport report;
  if (arr.size() != sys.n) {
    report.violations.push_back({1, "system has n = " + std::to_string(sys.n) + " but the arrangement has " +
                                        std::to_string(arr.size()) + " spaces"});
    return report;
  }
  check_structure(sys, report);
  for (std::size_t j = 0; j < sys.sets.size(); ++j) {
    const auto& s = sys.sets[j];
    if ((s.size() != 2 && s.size() != 3) || std::any_of(s.begin(), s.end(), [&](std::size_t i) { return i >= sys.n; })) {
      continue;
    }
    if (s.size() == 3 && !is_dependent_triple(arr[s[0]], arr[s[1]], arr[s[2]], tol)) {
      report.violations.push_back({2, "set " + std::to_string(j) + ": triple (" + std::to_string(s[0]) + ", " +
                                          std::to_string(s[1]) + ", " + std::to_string(s[2]) + ") is not dependent"});
    }
    if (s.size() == 2 && !same_space(arr[s[0]], arr[s[1]], tol)) {
      report.violations.push_back({2, "set " + std::to_string(j) + ": spaces " + std::to_string(s[0]) + " and " +
                                          std::to_string(s[1]) + " differ"});
    }
  }
  return report;
}

inline void require_valid(const Arrangement& arr, const TripleSystem& sys, const char* who, const Tolerance& tol) {
  auto report = validate_system(arr, sys, tol);
  if (!report.ok()) throw InconsistentSystemError(std::string(who) + ": " + report.violations.front().message);
}

struct SubProblem {
  Arrangement arrangement;
  TripleSystem system;
  std::vector<std::size_t> origin;  ///< new index -> old index
};

/// Keep the sets whose members all survive, relabelled through `keep`.
inline SubProblem restrict_to(const Arrangement& arr, const TripleSystem& sys, const std::vector<bool>& keep) {
  SubProblem out;
  out.arrangement.ambient = arr.ambient;
  out.arrangement.origin = arr.origin;
  std::vector<std::size_t> relabel(arr.size(), SIZE_MAX);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!keep[i]) continue;
    relabel[i] = out.origin.size();
    out.origin.push_back(i);
    out.arrangement.spaces.push_back(arr[i]);
  }
  out.system.n = out.origin.size();
  out.system.alpha = sys.alpha;
  for (const auto& s : sys.sets) {
    if (!std::all_of(s.begin(), s.end(), [&](std::size_t i) { return keep[i]; })) continue;
    IndexSet mapped;
    for (std::size_t i : s) mapped.push_back(relabel[i]);
    out.system.sets.push_back(std::move(mapped));
  }
  return out;
}

/// Repeatedly remove spaces appearing in fewer than delta*n/2 sets (n the
/// original count) together with their sets. The result is an
/// (alpha, delta/2)-system of the surviving spaces.
inline SubProblem prune_low_degree(const Arrangement& arr, const TripleSystem& sys, const Rational& delta,
                                   const Tolerance& tol = {}) {
  const __int128 n2 = static_cast<__int128>(sys.n) * sys.n;
  if (static_cast<__int128>(sys.w()) * delta.den() < static_cast<__int128>(delta.num()) * n2) {
    throw PreconditionError("prune_low_degree: fewer than delta*n^2 sets");
  }
  SystemReport pre;
  check_structure(sys, pre);
  for (const auto& v : pre.violations) {
    if (v.requirement == 1 || v.requirement == 4) throw PreconditionError("prune_low_degree: " + v.message);
  }
  const Rational half = delta / Rational(2);
  std::vector<bool> alive(sys.n, true);
  std::vector<bool> live_set(sys.sets.size(), true);
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::size_t> deg(sys.n, 0);
    for (std::size_t j = 0; j < sys.sets.size(); ++j)
      if (live_set[j])
        for (std::size_t i : sys.sets[j]) ++deg[i];
    for (std::size_t i = 0; i < sys.n; ++i) {
      if (alive[i] && !meets_degree(deg[i], half, sys.n)) {
        alive[i] = false;
        changed = true;
      }
    }
    for (std::size_t j = 0; j < sys.sets.size(); ++j) {
      if (live_set[j] && !std::all_of(sys.sets[j].begin(), sys.sets[j].end(), [&](std::size_t i) { return alive[i]; })) {
        live_set[j] = false;
      }
    }
  }
  SubProblem out = restrict_to(arr, sys, alive);
  out.system.delta = half;
  if (out.system.n == 0) throw InvariantError("prune_low_degree: every space was removed");
  // At least delta*n/(2 alpha) spaces survive.
  if (static_cast<__int128>(out.system.n) * 2 * sys.alpha * delta.den() <
      static_cast<__int128>(delta.num()) * sys.n) {
    throw InvariantError("prune_low_degree: fewer than delta*n/(2 alpha) spaces survive");
  }
  require_valid(out.arrangement, out.system, "prune_low_degree", tol);
  return out;
}

struct MappedProblem {
  Arrangement arrangement;
  TripleSystem system;
  std::vector<std::size_t> origin;  ///< new index -> old index
  Rational delta;
};

/// Images P(V_i) with zero images removed. Sets losing one member of a
/// triple become 2-sets of equal spaces; delta' = delta*n/n'.
inline MappedProblem map_and_clean(const Arrangement& arr, const TripleSystem& sys, const Matrix& p,
                                   const Tolerance& tol = {}) {
  if (p.rows() != static_cast<Index>(arr.ambient) || p.cols() != static_cast<Index>(arr.ambient)) {
    throw PreconditionError("map_and_clean: P must be ambient x ambient");
  }
  if (sys.n != arr.size()) throw PreconditionError("map_and_clean: system and arrangement sizes differ");
  MappedProblem out;
  out.arrangement.ambient = arr.ambient;
  out.arrangement.origin = arr.origin;
  // Images of unit vectors are measured against |P|, so a space inside the
  // kernel maps to zero rather than to rounding noise.
  const double scale = spectral_norm(p);
  std::vector<std::size_t> relabel(arr.size(), SIZE_MAX);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (arr[i].is_zero()) continue;
    Subspace image = Subspace::span_of(arr[i].basis() * p.transpose(), tol, scale);
    if (image.is_zero()) continue;
    relabel[i] = out.origin.size();
    out.origin.push_back(i);
    out.arrangement.spaces.push_back(std::move(image));
  }
  if (out.origin.empty()) throw PreconditionError("map_and_clean: every space maps to zero");

  out.system.n = out.origin.size();
  out.system.alpha = sys.alpha;
  for (std::size_t j = 0; j < sys.sets.size(); ++j) {
    const auto& s = sys.sets[j];
    IndexSet mapped;
    for (std::size_t i : s)
      if (relabel.at(i) != SIZE_MAX) mapped.push_back(relabel[i]);
    const std::size_t zeros = s.size() - mapped.size();
    if (mapped.empty()) continue;
    if (zeros == 0 || (s.size() == 3 && zeros == 1)) {
      out.system.sets.push_back(std::move(mapped));
      continue;
    }
    throw InconsistentSystemError("map_and_clean: set " + std::to_string(j) +
                                  " has a single nonzero image; the input is numerically inconsistent");
  }
  out.delta = sys.delta * Rational(static_cast<std::int64_t>(sys.n)) / Rational(static_cast<std::int64_t>(out.system.n));
  out.system.delta = out.delta;
  require_valid(out.arrangement, out.system, "map_and_clean", tol);
  return out;
}

}  // namespace sgdim
