#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "sgdim/dependency.hpp"

using namespace sgdim;

namespace {

Subspace row_space(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index r = 0;
  for (const auto& row : rows) {
    Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return Subspace::span_of(m);
}

Arrangement lines_in_plane(std::size_t n, std::size_t ambient = 2) {
  Arrangement arr;
  arr.ambient = ambient;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 3.14159265358979 * static_cast<double>(i) / static_cast<double>(n);
    Matrix m = Matrix::Zero(1, static_cast<Index>(ambient));
    m(0, 0) = std::cos(a);
    m(0, 1) = std::sin(a);
    arr.spaces.push_back(Subspace::span_of(m));
  }
  return arr;
}

}  // namespace

TEST(DependentTriple, Examples) {
  auto e1 = row_space({{1, 0, 0}});
  auto e2 = row_space({{0, 1, 0}});
  auto e3 = row_space({{0, 0, 1}});
  auto d = row_space({{1, 1, 0}});
  // A duplicate needs the third space inside the other two as well.
  EXPECT_FALSE(is_dependent_triple(e1, e2, e1));
  EXPECT_TRUE(is_dependent_triple(e1, e1, e1));
  EXPECT_FALSE(is_dependent_triple(e1, e2, e3));
  EXPECT_TRUE(is_dependent_triple(e1, e2, d));
  // One-sided containment is not enough: e1 lies in e1 + e2 but e2 is not in e1 + e3.
  auto plane = row_space({{1, 0, 0}, {0, 0, 1}});
  EXPECT_FALSE(is_dependent_triple(e1, e2, plane));
}

TEST(DependentTriple, Transitivity) {
  auto g = generate_detailed(GroupedSpec{2, 1.0, 4, 0}, 17);
  const auto& a = g.arrangement;
  ASSERT_TRUE(is_dependent_triple(a[0], a[1], a[2]));
  ASSERT_TRUE(is_dependent_triple(a[1], a[2], a[3]));
  EXPECT_TRUE(is_dependent_triple(a[0], a[1], a[3]));
}

TEST(SpecialSpaces, CollinearLines) {
  auto arr = lines_in_plane(3);
  auto sp = find_special_spaces(arr, 1);
  ASSERT_EQ(sp.size(), 1u);
  EXPECT_EQ(sp[0].size(), 3u);
  EXPECT_EQ(sp[0].span_basis.rows(), 2);
}

TEST(SpecialSpaces, GroupOfFour) {
  auto arr = generate(GroupedSpec{2, 1.0, 4, 0}, 3);
  auto sp = find_special_spaces(arr, 2);
  ASSERT_EQ(sp.size(), 1u);
  EXPECT_EQ(sp[0].member_indices, (IndexSet{0, 1, 2, 3}));
  for (std::size_t i : sp[0].member_indices) EXPECT_LE(residual_norm(arr[i].basis(), sp[0].span_basis), 1e-8);
}

TEST(SpecialSpaces, GenericArrangementHasNone) {
  auto arr = generate(PlantedSpec{7, 2, 6, 0}, 5);
  // Exhaustive triple scan as the oracle.
  std::size_t dependent = 0;
  for (std::size_t a = 0; a < arr.size(); ++a)
    for (std::size_t b = a + 1; b < arr.size(); ++b)
      for (std::size_t c = b + 1; c < arr.size(); ++c) dependent += is_dependent_triple(arr[a], arr[b], arr[c]);
  EXPECT_EQ(dependent, 0u);
  EXPECT_TRUE(find_special_spaces(arr, 2).empty());
}

TEST(SpecialSpaces, GridRejectedNamingPair) {
  auto arr = generate(GridSpec{4}, 0);
  try {
    find_special_spaces(arr, 2);
    FAIL() << "expected a precondition error";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("spaces 0 and 1"), std::string::npos);
  }
}

TEST(TripleFamily, CountsForSmallAndLargeR) {
  for (std::size_t r = 3; r <= 50; ++r) {
    auto fam = build_triple_family(r);
    ASSERT_EQ(fam.size(), r * r - r);
    std::vector<std::size_t> count(r, 0);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> pairs;
    for (const auto& t : fam) {
      ASSERT_TRUE(t[0] < t[1] && t[1] < t[2] && t[2] < r);
      for (std::size_t x : t) ++count[x];
      ++pairs[{t[0], t[1]}];
      ++pairs[{t[0], t[2]}];
      ++pairs[{t[1], t[2]}];
    }
    for (std::size_t c : count) EXPECT_EQ(c, 3 * (r - 1)) << "r = " << r;
    for (const auto& [p, c] : pairs) EXPECT_LE(c, 6u) << "r = " << r;
  }
  auto three = build_triple_family(3);
  for (const auto& t : three) EXPECT_EQ(t, (std::array<std::size_t, 3>{0, 1, 2}));
  EXPECT_THROW(build_triple_family(2), PreconditionError);
}

TEST(SgSystem, SingleGroupOfFour) {
  auto arr = generate(GroupedSpec{1, 1.0, 4, 0}, 1);
  auto sys = build_sg_system(arr, 1);
  EXPECT_EQ(sys.w(), 12u);
  EXPECT_EQ(sys.alpha, 6u);
  EXPECT_EQ(sys.delta, Rational(9, 4));
  EXPECT_TRUE(validate_system(arr, sys).ok());
}

TEST(SgSystem, NoDependenciesGivesEmptySystem) {
  auto arr = generate(PlantedSpec{6, 1, 6, 0}, 2);
  auto sys = build_sg_system(arr, 1);
  EXPECT_EQ(sys.w(), 0u);
  EXPECT_EQ(sys.delta, Rational(0));
}

TEST(SgSystem, PlantedSystemsValidate) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto arr = generate(PlantedSpec{12, 2, 12, 6}, seed);
    auto sys = build_sg_system(arr, 2);
    auto report = validate_system(arr, sys);
    EXPECT_TRUE(report.ok()) << (report.ok() ? "" : report.violations.front().message);
  }
}

TEST(ValidateSystem, FalseTripleAndLowDegree) {
  auto arr = lines_in_plane(3, 3);
  arr.spaces[2] = row_space({{0, 0, 1}});
  TripleSystem sys{3, {{0, 1, 2}}, 6, Rational(1, 3)};
  auto report = validate_system(arr, sys);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].requirement, 2);

  auto good = lines_in_plane(4);
  TripleSystem low{4, {{0, 1, 2}}, 6, Rational(1, 4)};
  report = validate_system(good, low);
  ASSERT_FALSE(report.ok());
  EXPECT_EQ(report.violations[0].requirement, 3);
  EXPECT_NE(report.violations[0].message.find("index 3"), std::string::npos);
}

TEST(ValidateSystem, TwoSetNeedsEqualSpaces) {
  auto arr = lines_in_plane(2);
  TripleSystem sys{2, {{0, 1}}, 6, Rational(1, 2)};
  EXPECT_EQ(validate_system(arr, sys).violations.front().requirement, 2);
  arr.spaces[1] = arr.spaces[0];
  EXPECT_TRUE(validate_system(arr, sys).ok());
}

TEST(Prune, FixedPoint) {
  auto arr = lines_in_plane(4);
  auto sys = build_sg_system(arr, 1);
  auto out = prune_low_degree(arr, sys, Rational(1, 2));
  EXPECT_EQ(out.system.n, 4u);
  EXPECT_EQ(out.system.w(), sys.w());
  EXPECT_EQ(out.system.delta, Rational(1, 4));
}

TEST(Prune, IsolatedSpaceRemoved) {
  auto arr = lines_in_plane(4, 3);
  arr.spaces.push_back(row_space({{0, 0, 1}}));
  TripleSystem sys = build_sg_system(lines_in_plane(4), 1);
  sys.n = 5;
  auto out = prune_low_degree(arr, sys, Rational(12, 25));
  EXPECT_EQ(out.origin, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(out.system.w(), 12u);
  EXPECT_THROW(prune_low_degree(arr, sys, Rational(1, 2)), PreconditionError);
}

TEST(Prune, Cascade) {
  auto arr = lines_in_plane(10);
  TripleSystem sys;
  sys.n = 10;
  sys.alpha = 13;
  for (int copy = 0; copy < 2; ++copy)
    for (const auto& t : build_triple_family(6)) sys.sets.push_back({t[0], t[1], t[2]});
  // Threshold is degree 2. 9 falls first, which drops 8 below it, then 7.
  for (IndexSet s : {IndexSet{8, 9, 0}, {7, 8, 1}, {7, 4, 5}}) sys.sets.push_back(s);
  auto out = prune_low_degree(arr, sys, Rational(2, 5));
  EXPECT_EQ(out.origin, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(out.system.delta, Rational(1, 5));
  EXPECT_TRUE(validate_system(out.arrangement, out.system).ok());
}

TEST(MapAndClean, IdentityKeepsEverything) {
  auto arr = generate(PlantedSpec{10, 2, 8, 4}, 4);
  auto sys = build_sg_system(arr, 2);
  auto out = map_and_clean(arr, sys, Matrix::Identity(8, 8));
  EXPECT_EQ(out.system.n, sys.n);
  EXPECT_EQ(out.system.sets, sys.sets);
  EXPECT_EQ(out.delta, sys.delta);
}

TEST(MapAndClean, KilledMemberDemotesTriple) {
  Arrangement arr;
  arr.ambient = 3;
  arr.spaces = {row_space({{1, 0, 0}}), row_space({{0, 1, 0}}), row_space({{1, 1, 0}})};
  auto sys = build_sg_system(arr, 1);
  ASSERT_EQ(sys.delta, Rational(2));
  Vector u(3);
  u << 1, 1, 0;
  u.normalize();
  Matrix p = Matrix::Identity(3, 3) - u * u.transpose();
  auto out = map_and_clean(arr, sys, p);
  EXPECT_EQ(out.system.n, 2u);
  for (const auto& s : out.system.sets) EXPECT_EQ(s.size(), 2u);
  EXPECT_TRUE(same_space(out.arrangement[0], out.arrangement[1]));
  // delta' n' = delta n.
  EXPECT_EQ(out.delta * Rational(2), sys.delta * Rational(3));
}

TEST(MapAndClean, TwoZeroedMembersIsInconsistent) {
  Arrangement arr;
  arr.ambient = 3;
  arr.spaces = {row_space({{1, 0, 0}}), row_space({{0, 1, 0}}), row_space({{0, 0, 1}})};
  TripleSystem sys{3, {{0, 1, 2}}, 6, Rational(1, 3)};
  Matrix p = Matrix::Zero(3, 3);
  p(2, 2) = 1.0;
  EXPECT_THROW(map_and_clean(arr, sys, p), InconsistentSystemError);
}

TEST(RationalParse, DecimalsAndFractions) {
  EXPECT_EQ(Rational::parse("0.25"), Rational(1, 4));
  EXPECT_EQ(Rational::parse("9/4"), Rational(9, 4));
  EXPECT_EQ(Rational::parse("2.5e-1"), Rational(1, 4));
  EXPECT_EQ(Rational::parse("3"), Rational(3));
  EXPECT_EQ(Rational(6, 4).str(), "3/2");
  EXPECT_THROW(Rational::parse("x"), PreconditionError);
}
