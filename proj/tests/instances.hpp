// Hand-built arrangements shared by the certifier tests and the acceptance
// runner.
#pragma once

#include <cmath>
#include <random>

#include "sgdim/certifier.hpp"

namespace sgdim::testing {

inline Matrix random_orthogonal(std::uint64_t seed, Index k) {
  std::mt19937_64 rng(seed);
  Eigen::HouseholderQR<Matrix> qr(detail::gaussian(rng, k, k));
  return qr.householderQ();
}

struct Instance {
  Arrangement arrangement;
  TripleSystem system;
};

/// Three lines at 60 degrees in each of `groups` orthogonal planes, rotated
/// into a random frame. Pairs inside a group have principal cosine 1/2.
inline Instance separated_lines(std::size_t groups, std::size_t ambient, std::uint64_t seed) {
  const Matrix q = random_orthogonal(seed, static_cast<Index>(ambient));
  Instance inst;
  inst.arrangement.ambient = ambient;
  for (std::size_t g = 0; g < groups; ++g) {
    for (int j = 0; j < 3; ++j) {
      const double a = M_PI * j / 3.0;
      const Matrix row = std::cos(a) * q.row(static_cast<Index>(2 * g)) + std::sin(a) * q.row(static_cast<Index>(2 * g + 1));
      inst.arrangement.spaces.push_back(Subspace::span_of(row));
    }
    inst.system.sets.push_back({3 * g, 3 * g + 1, 3 * g + 2});
  }
  inst.system.n = 3 * groups;
  inst.system.alpha = 1;
  inst.system.delta = Rational(1, static_cast<std::int64_t>(3 * groups));
  return inst;
}

/// Three k-spaces per group at principal angle 60 degrees inside their own
/// 2k-space, each triple listed `copies` times.
inline Instance separated_spaces(std::size_t groups, std::size_t k, std::size_t copies, std::uint64_t seed) {
  const std::size_t ambient = 2 * k * groups;
  const Matrix q = random_orthogonal(seed, static_cast<Index>(ambient));
  Instance inst;
  inst.arrangement.ambient = ambient;
  for (std::size_t g = 0; g < groups; ++g) {
    const Matrix e = q.middleRows(static_cast<Index>(2 * k * g), static_cast<Index>(k));
    const Matrix f = q.middleRows(static_cast<Index>(2 * k * g + k), static_cast<Index>(k));
    for (int j = 0; j < 3; ++j) {
      const double a = M_PI * j / 3.0;
      inst.arrangement.spaces.push_back(Subspace::span_of(Matrix(std::cos(a) * e + std::sin(a) * f)));
    }
    for (std::size_t c = 0; c < copies; ++c) inst.system.sets.push_back({3 * g, 3 * g + 1, 3 * g + 2});
  }
  inst.system.n = 3 * groups;
  inst.system.alpha = copies;
  inst.system.delta = Rational(static_cast<std::int64_t>(copies), static_cast<std::int64_t>(3 * groups));
  return inst;
}

/// Ten planes sharing a common line w (three per 3-space, thirty in all) next
/// to ten groups of three generic planes in their own 4-spaces. Once a plane
/// through w is picked every other one meets the sum, so the first thirty are
/// rarely admissible.
inline Instance shared_line_planes(std::uint64_t seed) {
  constexpr std::size_t kGroups = 10;
  const std::size_t ambient = 1 + 2 * kGroups + 4 * kGroups;
  const Matrix q = random_orthogonal(seed, static_cast<Index>(ambient));
  auto e = [&](std::size_t i) { return Matrix(q.row(static_cast<Index>(i))); };
  Instance inst;
  inst.arrangement.ambient = ambient;
  for (std::size_t g = 0; g < kGroups; ++g) {
    for (int j = 0; j < 3; ++j) {
      const double a = M_PI * j / 3.0;
      inst.arrangement.spaces.push_back(
          Subspace::span_of(vstack(e(0), std::cos(a) * e(1 + 2 * g) + std::sin(a) * e(2 + 2 * g))));
    }
    inst.system.sets.push_back({3 * g, 3 * g + 1, 3 * g + 2});
  }
  for (std::size_t g = 0; g < kGroups; ++g) {
    const std::size_t b = 1 + 2 * kGroups + 4 * g;
    inst.arrangement.spaces.push_back(Subspace::span_of(vstack(e(b), e(b + 1))));
    inst.arrangement.spaces.push_back(Subspace::span_of(vstack(e(b + 2), e(b + 3))));
    inst.arrangement.spaces.push_back(Subspace::span_of(vstack(Matrix(e(b) + e(b + 2)), Matrix(e(b + 1) + e(b + 3)))));
    const std::size_t i = 3 * (kGroups + g);
    inst.system.sets.push_back({i, i + 1, i + 2});
  }
  inst.system.n = inst.arrangement.size();
  inst.system.alpha = 1;
  inst.system.delta = Rational(1, static_cast<std::int64_t>(inst.system.n));
  return inst;
}

/// Forty lines in one plane next to forty further planes holding three lines
/// each. After two lines of the first plane are picked the remaining 38 are
/// blocked, so their sampling probability stays near 1/20.
inline Instance plane_and_pencils(std::uint64_t seed) {
  constexpr std::size_t kShared = 40;
  constexpr std::size_t kPencils = 40;
  const std::size_t ambient = 2 + 2 * kPencils;
  const Matrix q = random_orthogonal(seed, static_cast<Index>(ambient));
  Instance inst;
  inst.arrangement.ambient = ambient;
  auto add_line = [&](std::size_t r, double a) {
    const Matrix row = std::cos(a) * q.row(static_cast<Index>(r)) + std::sin(a) * q.row(static_cast<Index>(r + 1));
    inst.arrangement.spaces.push_back(Subspace::span_of(row));
  };
  for (std::size_t i = 0; i < kShared; ++i) add_line(0, M_PI * static_cast<double>(i) / kShared);
  for (const auto& t : build_triple_family(kShared)) inst.system.sets.push_back({t[0], t[1], t[2]});
  for (std::size_t g = 0; g < kPencils; ++g) {
    for (int j = 0; j < 3; ++j) add_line(2 + 2 * g, M_PI * j / 3.0);
    const std::size_t i = kShared + 3 * g;
    for (int copy = 0; copy < 6; ++copy) inst.system.sets.push_back({i, i + 1, i + 2});
  }
  inst.system.n = inst.arrangement.size();
  inst.system.alpha = 6;
  inst.system.delta = Rational(6, static_cast<std::int64_t>(inst.system.n));
  return inst;
}

}  // namespace sgdim::testing
