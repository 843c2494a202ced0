#include <gtest/gtest.h>

#include <cmath>

#include "instances.hpp"
#include "sgdim/certifier.hpp"

using namespace sgdim;
using sgdim::testing::Instance;

namespace {

Subspace line(double x, double y) {
  Matrix m(1, 2);
  m << x, y;
  return Subspace::span_of(m);
}

}  // namespace

TEST(DiagDom, ScaledIdentityHasFullBound) {
  Matrix d = 2.0 * Matrix::Identity(4, 4);
  auto b = diagdom_rank_bound(d);
  EXPECT_EQ(b.bound, 4u);
  EXPECT_EQ(b.L, 2.0);
  EXPECT_EQ(b.K, 0.0);
}

TEST(DiagDom, OffDiagonalMassLowersBound) {
  Matrix d = 2.0 * Matrix::Identity(4, 4);
  d(0, 1) = d(1, 0) = d(2, 3) = d(3, 2) = 1.0;
  auto b = diagdom_rank_bound(d);
  EXPECT_EQ(b.K, 4.0);
  EXPECT_EQ(b.bound, 3u);
  EXPECT_GE(rank(d), b.bound);
}

TEST(DiagDom, NonConstantDiagonalRejected) {
  Matrix d = Matrix::Identity(3, 3);
  d(2, 2) = 2.0;
  EXPECT_THROW(diagdom_rank_bound(d), PreconditionError);
}

TEST(CoefficientExpand, SixtyDegreeLines) {
  const Subspace a = line(1, 0);
  const Subspace b = line(0.5, std::sqrt(3.0) / 2);
  for (int k = 0; k < 12; ++k) {
    const double t = 0.3 + k * M_PI / 6;
    Vector u(2);
    u << std::cos(t), std::sin(t);
    const Vector c = coefficient_expand(u, a, b, 0.5);
    // Cramer's rule on the 2x2 system as the oracle.
    const double ax = a.basis()(0, 0), ay = a.basis()(0, 1), bx = b.basis()(0, 0), by = b.basis()(0, 1);
    const double det = ax * by - ay * bx;
    EXPECT_NEAR(c(0), (u(0) * by - u(1) * bx) / det, 1e-12);
    EXPECT_NEAR(c(1), (ax * u(1) - ay * u(0)) / det, 1e-12);
    EXPECT_LE(c.squaredNorm(), 2.0 + 1e-9);
  }
}

TEST(CoefficientExpand, Preconditions) {
  Vector u(2);
  u << 0.6, 0.8;
  EXPECT_THROW(coefficient_expand(u, line(1, 0), line(0.5, std::sqrt(3.0) / 2), 0.9), PreconditionError);
  Matrix m(1, 3);
  m << 1, 0, 0;
  const Subspace x = Subspace::span_of(m);
  m << 0, 1, 0;
  const Subspace y = Subspace::span_of(m);
  Vector z(3);
  z << 0, 0, 1;
  EXPECT_THROW(coefficient_expand(z, x, y, 0.5), MembershipError);
}

TEST(SeparationWitness, PresentOnlyWhenNotSeparated) {
  const Subspace a = line(1, 0);
  EXPECT_FALSE(separation_witness(a, line(0.6, 0.8), 0.4));
  auto w = separation_witness(a, line(0.8, 0.6), 0.5);
  ASSERT_TRUE(w);
  EXPECT_EQ(w->row, 0u);
  EXPECT_NEAR(w->projection_norm_sq, 0.64, 1e-12);
}

TEST(SeparatedCertificate, LinesAtSixtyDegrees) {
  Instance inst = sgdim::testing::separated_lines(4, 10, 3);
  auto cert = separated_certificate(inst.arrangement, inst.system, 0.5);
  ASSERT_EQ(cert.evidence.size(), 1u);
  const auto& ev = cert.evidence[0];
  EXPECT_EQ(ev.L, 1.0);
  EXPECT_LE((ev.D * ev.A).norm(), 1e-9);
  // alpha k / (tau delta) = 1 * 1 / (0.5 / 12) = 24.
  EXPECT_EQ(cert.d_bound, 24);
  EXPECT_EQ(cert.params.d, 8u);
  EXPECT_GE(rank(ev.D), ev.diagdom.bound);
  EXPECT_LE(rank(ev.A), ev.A.rows() - static_cast<Index>(ev.diagdom.bound));
  for (Index s = 0; s < ev.D.rows(); ++s) {
    EXPECT_LE(ev.D.row(s).squaredNorm() - 1.0, 1.0 / 0.5 + 1e-9);
  }
}

TEST(SeparatedCertificate, RejectsUnseparatedTriples) {
  Instance inst = sgdim::testing::separated_lines(2, 6, 4);
  EXPECT_THROW(separated_certificate(inst.arrangement, inst.system, 0.9), PreconditionError);
}

TEST(SeparatedCertificate, DegreeShortfall) {
  Instance inst = sgdim::testing::separated_lines(2, 6, 5);
  inst.system.delta = Rational(2, 6);
  EXPECT_THROW(separated_certificate(inst.arrangement, inst.system, 0.5), SystemDegreeError);
}

TEST(DecomposeStep, SmallDimensionIsBoundCase) {
  Instance inst = sgdim::testing::shared_line_planes(1);
  auto cert = decompose_step(inst.arrangement, inst.system, 0.5, 256, 1);
  EXPECT_EQ(cert.branch, Branch::bound);
  EXPECT_GE(cert.d_bound, 61);
  verify_certificate(inst.arrangement, cert);
}

TEST(DecomposeStep, SharedLineCollapses) {
  Instance inst = sgdim::testing::shared_line_planes(2);
  ASSERT_EQ(dimension(inst.arrangement), 61u);
  DecomposeOptions opt;
  opt.skip_entry_check = true;
  auto cert = decompose_step(inst.arrangement, inst.system, 0.5, 2048, 9, {}, opt);
  ASSERT_EQ(cert.branch, Branch::collapse);
  EXPECT_GE(cert.collapse.indices.size(), 30u);
  EXPECT_LE(cert.collapse.w_dim, 30u);
  verify_certificate(inst.arrangement, cert);
}

TEST(VerifyCertificate, RejectsForgedWitness) {
  Instance inst = sgdim::testing::shared_line_planes(3);
  Certificate cert;
  cert.branch = Branch::collapse;
  cert.params = {1, inst.system.delta, 0.5, 2, inst.system.n, 61};
  cert.collapse.indices = {0};
  cert.collapse.z = inst.arrangement[40].basis().row(0);
  cert.collapse.w_dim = 1;
  EXPECT_THROW(verify_certificate(inst.arrangement, cert), InvariantError);
}

TEST(Certify, GroupedLinesDefaultBeta) {
  auto arr = generate(GroupedSpec{1, 0.25, 16, 0}, 7);
  auto sys = build_sg_system(arr, 1);
  auto res = certify(arr, sys);
  EXPECT_EQ(res.measured, 8u);
  ASSERT_EQ(res.rounds.size(), 1u);
  EXPECT_EQ(res.rounds[0].branch, Branch::bound);
  EXPECT_LE(static_cast<std::int64_t>(res.measured), res.final_bound);
  EXPECT_LE(static_cast<long double>(res.final_bound), res.reference_bound);
  const auto trace = res.trace();
  EXPECT_EQ(trace.front().rfind("round 0 n 16 delta ", 0), 0u);
  EXPECT_EQ(trace.back(), "final bound " + std::to_string(res.final_bound) + " measured 8");
}

TEST(Certify, ExploreProjectsThroughCollapses) {
  Instance inst = sgdim::testing::shared_line_planes(4);
  CertifyOptions opt;
  opt.beta = 0.5;
  opt.explore = true;
  opt.trials = 1024;
  opt.seed = 11;
  auto res = certify(inst.arrangement, inst.system, {}, opt);
  ASSERT_GE(res.rounds.size(), 2u);
  EXPECT_EQ(res.rounds.front().branch, Branch::collapse);
  EXPECT_EQ(res.rounds.back().branch, Branch::bound);
  std::size_t lost = 0;
  for (std::size_t t = 0; t + 1 < res.rounds.size(); ++t) {
    const auto& r = res.rounds[t];
    EXPECT_LE(r.loss, static_cast<std::size_t>(std::floor(0.5 * r.d)));
    EXPECT_EQ(res.rounds[t + 1].delta * Rational(static_cast<std::int64_t>(res.rounds[t + 1].n)),
              r.delta * Rational(static_cast<std::int64_t>(r.n)));
    lost += r.loss;
  }
  EXPECT_GE(res.rounds.back().d + lost, res.measured);
  EXPECT_LE(static_cast<std::int64_t>(res.measured), res.final_bound);
}

TEST(Certify, RoundBudgetKeepsPartialTrace) {
  Instance inst = sgdim::testing::shared_line_planes(5);
  CertifyOptions opt;
  opt.beta = 0.5;
  opt.explore = true;
  opt.trials = 512;
  opt.max_rounds = 1;
  try {
    certify(inst.arrangement, inst.system, {}, opt);
    FAIL() << "expected a budget error";
  } catch (const CertifyBudgetError& e) {
    ASSERT_EQ(e.partial().size(), 1u);
    EXPECT_EQ(e.partial()[0].branch, Branch::collapse);
  }
}

TEST(Certify, EmptySystemRejected) {
  auto arr = generate(PlantedSpec{6, 1, 6, 0}, 2);
  auto sys = build_sg_system(arr, 1);
  EXPECT_THROW(certify(arr, sys), PreconditionError);
}

TEST(CoefficientExpand, OrthogonalSpacesGiveProjectionCoordinates) {
  const Subspace v1 = Subspace::from_orthonormal(Matrix::Identity(4, 4).topRows(2));
  const Subspace v2 = Subspace::from_orthonormal(Matrix::Identity(4, 4).bottomRows(2));
  Vector u(4);
  u << 0.6, -0.8, 0, 0;
  const Vector c = coefficient_expand(u, v1, v2, 0.5);
  EXPECT_NEAR(c(0), 0.6, 1e-14);
  EXPECT_NEAR(c(1), -0.8, 1e-14);
  EXPECT_NEAR(c.tail(2).norm(), 0.0, 1e-14);
  EXPECT_NEAR(c.squaredNorm(), 1.0, 1e-12);
}

TEST(SeparationWitness, EqualAndOrthogonalSpaces) {
  const Subspace plane = Subspace::from_orthonormal(Matrix::Identity(4, 4).topRows(2));
  auto w = separation_witness(plane, plane, 0.5);
  ASSERT_TRUE(w);
  EXPECT_NEAR(w->projection_norm_sq, 1.0, 1e-12);
  EXPECT_FALSE(separation_witness(plane, Subspace::from_orthonormal(Matrix::Identity(4, 4).bottomRows(2)), 0.5));
}

TEST(SeparationWitness, PlaneAgainstTiltedLine) {
  // The line makes 10 degrees with e1 and is orthogonal to e2.
  const Subspace plane = Subspace::from_orthonormal(Matrix::Identity(3, 3).topRows(2));
  Matrix l(1, 3);
  const double a = 10.0 * M_PI / 180.0;
  l << std::cos(a), 0, std::sin(a);
  auto w = separation_witness(plane, Subspace::span_of(l), 0.5);
  ASSERT_TRUE(w);
  EXPECT_EQ(w->row, 0u);
  EXPECT_NEAR(w->projection_norm_sq, std::cos(a) * std::cos(a), 1e-12);
  EXPECT_GE(w->projection_norm_sq, 0.125);
}

TEST(DiagDom, WeakBoundFloorsAtZero) {
  const Index m = 5;
  Matrix d = Matrix::Ones(m, m);
  auto b = diagdom_rank_bound(d);
  EXPECT_EQ(b.K, static_cast<double>(m * m - m));
  EXPECT_EQ(b.bound, 0u);
  d = Matrix::Constant(m, m, 2.0);
  d.diagonal().setOnes();
  EXPECT_EQ(diagdom_rank_bound(d).bound, 0u);
}

TEST(DiagDom, NeverExceedsNumericalRank) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(1, 20);
  std::uniform_real_distribution<double> scale(0.0, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    const Index m = size(rng);
    Matrix d = scale(rng) * detail::gaussian(rng, m, m);
    // Low rank plus a constant diagonal keeps the bound from being trivial.
    if (trial % 2 == 0 && m > 2) {
      const Matrix f = detail::gaussian(rng, m, 2);
      d = f * f.transpose();
    }
    d.diagonal().setConstant(3.0);
    const auto b = diagdom_rank_bound(d);
    EXPECT_LE(b.bound, rank(d)) << "trial " << trial;
  }
}

TEST(SeparatedCertificate, ThreeLinesFromSgSystem) {
  Instance inst = sgdim::testing::separated_lines(1, 2, 8);
  auto sys = build_sg_system(inst.arrangement, 1);
  auto cert = separated_certificate(inst.arrangement, sys, 0.5);
  EXPECT_GE(cert.d_bound, 2);
  EXPECT_EQ(rank(cert.evidence[0].A), 2u);
}

TEST(SeparatedCertificate, TwoSetHasUnitOffDiagonalMass) {
  Matrix m(1, 3);
  m << 0.6, 0.8, 0;
  Arrangement arr;
  arr.ambient = 3;
  arr.spaces = {Subspace::span_of(m), Subspace::span_of(-m)};
  TripleSystem sys{2, {{0, 1}}, 1, Rational(1, 2)};
  auto cert = separated_certificate(arr, sys, 0.5);
  const auto& d = cert.evidence[0].D;
  for (Index s = 0; s < 2; ++s) EXPECT_NEAR(d.row(s).squaredNorm() - 1.0, 1.0, 1e-14);
  EXPECT_EQ(cert.d_bound, 4);
  EXPECT_EQ(cert.params.d, 1u);
}

TEST(DecomposeStep, EquiangularLinesAfterScalingAreInconclusive) {
  // Three lines in a plane always contain a pair with cosine at least 1/2,
  // so the scaled image keeps no strictly 0.5-separated triple here.
  Instance inst = sgdim::testing::separated_lines(20, 40, 1);
  DecomposeOptions opt;
  opt.skip_entry_check = true;
  EXPECT_THROW(decompose_step(inst.arrangement, inst.system, 0.5, 512, 1, {}, opt), InconclusiveError);
}

TEST(DecomposeStep, PlaneClusterCollapses) {
  Instance inst = sgdim::testing::plane_and_pencils(12);
  const std::size_t d = dimension(inst.arrangement);
  ASSERT_EQ(d, 82u);
  DecomposeOptions opt;
  opt.skip_entry_check = true;
  auto cert = decompose_step(inst.arrangement, inst.system, 0.5, 8192, 4, {}, opt);
  ASSERT_EQ(cert.branch, Branch::collapse);
  EXPECT_GE(cert.collapse.indices.size(), collapse_size_requirement(inst.system.delta, inst.system.n, inst.system.alpha));
  // Every line of the shared plane meets the harvested span.
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_NE(std::find(cert.collapse.indices.begin(), cert.collapse.indices.end(), i), cert.collapse.indices.end());
  }
  EXPECT_LE(rank(cert.collapse.z), d / 2);
}

TEST(Certify, SingleSpecialSpace) {
  auto arr = generate(GroupedSpec{2, 1.0, 5, 0}, 2);
  auto sys = build_sg_system(arr, 2);
  auto res = certify(arr, sys);
  EXPECT_EQ(res.measured, 4u);
  ASSERT_EQ(res.rounds.size(), 1u);
  EXPECT_GE(res.final_bound, 4);
}

TEST(Certify, ComplexInputThroughReduction) {
  auto cg = generate_complex_planted(PlantedSpec{3, 1, 4, 1}, 6);
  auto real = complex_to_real(cg.spaces);
  auto sys = build_sg_system(real, 2);
  auto res = certify(real, sys);
  const std::size_t dim_c = complex_dimension(cg.spaces);
  EXPECT_EQ(dim_c, 2u);
  EXPECT_LE(dim_c, res.measured);
  EXPECT_LE(static_cast<std::int64_t>(res.measured), res.final_bound);
}
