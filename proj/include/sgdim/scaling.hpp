/**
 * @file scaling.hpp
 * @brief Admissible-set sampling and Barthe-type scaling of a subspace
 * arrangement: find an invertible M with sum_i p_i Proj_{M(V_i)} close to I.
 *
 * The objective is f(t, R) = <gamma, t> - ln det X with
 * X = sum_ij e^{t_ij} x_ij x_ij^T and x_ij the columns of V_i R_i. It is
 * maximized by alternating exact rotation updates inside each space with a
 * damped Newton step in t.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sgdim/arrangement.hpp"
#include "sgdim/dependency.hpp"
#include "sgdim/error.hpp"
#include "sgdim/linalg.hpp"

namespace sgdim {

// ---------------------------------------------------------------------------
// Sampling

struct AdmissibleSample {
  std::vector<IndexSet> sets;  ///< one maximal admissible set per trial, in pick order
  std::vector<std::size_t> counts;
  Vector p_hat;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32), 0x5a3du};
  return std::mt19937_64(seq);
}

/// One greedy run: repeatedly add a uniformly random space meeting the
/// current sum trivially. Residuals against the running sum are kept per
/// candidate; once a candidate meets the sum it never becomes eligible again.
inline IndexSet greedy_admissible(const Arrangement& arr, std::mt19937_64& rng, const Tolerance& tol) {
  const std::size_t n = arr.size();
  std::vector<Matrix> residual(n);
  std::vector<std::size_t> eligible(n);
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = arr[i].basis();
    eligible[i] = i;
  }
  IndexSet picked;
  while (!eligible.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    const std::size_t slot = pick(rng);
    const std::size_t chosen = eligible[slot];
    eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(slot));
    picked.push_back(chosen);
    if (residual[chosen].rows() == 0) continue;
    const Matrix fresh = orthonormalize(residual[chosen], tol);
    std::size_t keep = 0;
    for (std::size_t e : eligible) {
      Matrix& r = residual[e];
      if (r.rows() > 0) {
        r -= (r * fresh.transpose()) * fresh;
        // The original rows are orthonormal, so the smallest singular value
        // of the residual measures the angle to the running sum directly.
        if (smallest_singular_value(r) < tol.rank_tol) continue;
      }
      eligible[keep++] = e;
    }
    eligible.resize(keep);
  }
  return picked;
}

}  // namespace detail

/// dim(sum_{i in H} V_i) == sum_{i in H} dim V_i.
inline bool is_admissible(const Arrangement& arr, const IndexSet& h, const Tolerance& tol = {}) {
  std::size_t total = 0;
  for (std::size_t i : h) total += arr.spaces.at(i).dim();
  if (total > arr.ambient) return false;
  const Matrix s = stack_bases(arr, h);
  if (total == 0) return true;
  // Clearly full rank from the Gram spectrum; the SVD settles the rest.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s * s.transpose(), Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()(0) > 1e-12 * eig.eigenvalues()(s.rows() - 1)) return true;
  return rank(s, tol) == total;
}

inline AdmissibleSample sample_admissible(const Arrangement& arr, std::size_t trials, std::uint64_t seed,
                                          const Tolerance& tol = {}, std::size_t workers = 1) {
  if (trials == 0) throw PreconditionError("sample_admissible: trials must be at least 1");
  AdmissibleSample out;
  out.trials = trials;
  out.seed = seed;
  out.sets.resize(trials);
  auto run = [&](std::size_t begin, std::size_t step) {
    for (std::size_t t = begin; t < trials; t += step) {
      auto rng = detail::trial_rng(seed, t);
      out.sets[t] = detail::greedy_admissible(arr, rng, tol);
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, trials));
  if (workers == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
    for (auto& th : pool) th.join();
  }
  out.counts.assign(arr.size(), 0);
  for (const auto& h : out.sets) {
    if (!is_admissible(arr, h, tol)) throw InvariantError("sample_admissible: sampled set fails admissibility");
    for (std::size_t i : h) ++out.counts[i];
  }
  out.p_hat = Vector(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.p_hat(static_cast<Index>(i)) = static_cast<double>(out.counts[i]) / static_cast<double>(trials);
  }
  return out;
}

/// p as an explicit convex combination of indicator vectors 1_H with
/// weights counts[H] / trials.
struct HullCertificate {
  std::vector<IndexSet> sets;  ///< distinct, each sorted
  std::vector<std::size_t> counts;
  std::size_t trials = 0;
  Vector p;

  double weight(std::size_t j) const { return static_cast<double>(counts[j]) / static_cast<double>(trials); }
};

inline HullCertificate admissible_hull_vector(const AdmissibleSample& sample) {
  if (sample.trials == 0 || sample.sets.size() != sample.trials) {
    throw PreconditionError("admissible_hull_vector: sample has no trials");
  }
  std::map<IndexSet, std::size_t> tally;
  for (IndexSet h : sample.sets) {
    std::sort(h.begin(), h.end());
    ++tally[h];
  }
  HullCertificate cert;
  cert.trials = sample.trials;
  for (auto& [h, c] : tally) {
    cert.sets.push_back(h);
    cert.counts.push_back(c);
  }
  // The combination reproduces p_hat exactly in integer counts.
  std::vector<std::size_t> check(static_cast<std::size_t>(sample.p_hat.size()), 0);
  for (std::size_t j = 0; j < cert.sets.size(); ++j)
    for (std::size_t i : cert.sets[j]) check[i] += cert.counts[j];
  if (check != sample.counts) throw InvariantError("admissible_hull_vector: weights do not reproduce p_hat");
  cert.p = sample.p_hat;
  return cert;
}

// ---------------------------------------------------------------------------
// Objective and its pieces

/// The Barthe state over the active spaces (p_i > 0 and V_i nonzero).
struct ScalingState {
  std::size_t ambient = 0;
  std::vector<std::size_t> space;  ///< active slot -> arrangement index
  std::vector<Matrix> basis;       ///< per slot, k_i x ambient
  std::vector<Matrix> R;           ///< per slot, k_i x k_i orthogonal
  std::vector<Index> offset;       ///< per slot, first flat index
  std::vector<std::size_t> owner;  ///< flat index -> slot
  Vector p;                        ///< per slot
  Vector gamma;                    ///< flat, gamma_ij = p_i
  Vector t;                        ///< flat
  Matrix x;                        ///< flat rows x_ij
  Matrix X, M, Xinv;
  double logdet = 0.0;
  Vector grad;

  Index m() const noexcept { return t.size(); }
};

/// Rebuild x, X, M, X^{-1} and the gradient from t and R.
inline void refresh(ScalingState& s, const Tolerance& tol = {}) {
  const Index l = static_cast<Index>(s.ambient);
  s.x.resize(s.m(), l);
  for (std::size_t a = 0; a < s.basis.size(); ++a) {
    s.x.middleRows(s.offset[a], s.basis[a].rows()) = s.R[a].transpose() * s.basis[a];
  }
  if (!s.t.allFinite()) throw DegenerateStateError("scaling: non-finite t");
  const Vector w = s.t.array().exp();
  s.X = s.x.transpose() * w.asDiagonal() * s.x;
  s.X = 0.5 * (s.X + s.X.transpose());
  Eigen::LLT<Matrix> llt(s.X);
  if (llt.info() != Eigen::Success) throw DegenerateStateError("scaling: X is not positive definite");
  s.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  s.M = inv_sqrt_factor(s.X, tol);
  s.Xinv = s.M * s.M;
  const Matrix mx = s.x * s.M;  // rows (M x_ij)^T, M symmetric
  s.grad = s.gamma.array() - w.array() * mx.rowwise().squaredNorm().array();
}

inline ScalingState make_state(const Arrangement& arr, const Vector& p, const Tolerance& tol = {}) {
  if (static_cast<std::size_t>(p.size()) != arr.size()) throw PreconditionError("scaling: p has the wrong length");
  ScalingState s;
  s.ambient = arr.ambient;
  Index flat = 0;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const double pi = p(static_cast<Index>(i));
    if (!(pi >= 0.0 && pi <= 1.0)) throw PreconditionError("scaling: p entries must lie in [0, 1]");
    if (pi == 0.0 || arr[i].is_zero()) continue;
    const auto k = static_cast<Index>(arr[i].dim());
    s.space.push_back(i);
    s.basis.push_back(arr[i].basis());
    s.R.push_back(Matrix::Identity(k, k));
    s.offset.push_back(flat);
    for (Index j = 0; j < k; ++j) s.owner.push_back(s.space.size() - 1);
    flat += k;
  }
  s.p = Vector(static_cast<Index>(s.space.size()));
  for (std::size_t a = 0; a < s.space.size(); ++a) s.p(static_cast<Index>(a)) = p(static_cast<Index>(s.space[a]));
  s.gamma = Vector(flat);
  for (Index f = 0; f < flat; ++f) s.gamma(f) = s.p(static_cast<Index>(s.owner[static_cast<std::size_t>(f)]));
  s.t = Vector::Zero(flat);
  refresh(s, tol);
  return s;
}

inline double objective(const ScalingState& s) { return s.gamma.dot(s.t) - s.logdet; }

/// df/dt_ij = p_i - e^{t_ij} |M x_ij|^2.
inline Vector t_gradient(const ScalingState& s) { return s.grad; }

/// Within each space, columns whose t values tie (within tie_tol, chained)
/// are rotated so that their images under M are orthogonal. X is unchanged.
inline void r_step(ScalingState& s, double tie_tol = 1e-9, const Tolerance& tol = {}) {
  for (std::size_t a = 0; a < s.basis.size(); ++a) {
    const Index k = s.R[a].rows();
    if (k < 2) continue;
    std::vector<Index> order(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j) order[static_cast<std::size_t>(j)] = j;
    std::sort(order.begin(), order.end(),
              [&](Index u, Index v) { return s.t(s.offset[a] + u) < s.t(s.offset[a] + v); });
    std::size_t start = 0;
    while (start < order.size()) {
      std::size_t end = start + 1;
      while (end < order.size() &&
             s.t(s.offset[a] + order[end]) - s.t(s.offset[a] + order[end - 1]) <= tie_tol) {
        ++end;
      }
      if (end - start >= 2) {
        const auto c = static_cast<Index>(end - start);
        Matrix y(static_cast<Index>(s.ambient), c);
        for (Index q = 0; q < c; ++q) y.col(q) = s.M * s.x.row(s.offset[a] + order[start + q]).transpose();
        Eigen::JacobiSVD<Matrix> svd(y, Eigen::ComputeFullV);
        const Matrix& w = svd.matrixV();
        Matrix cols(k, c);
        for (Index q = 0; q < c; ++q) cols.col(q) = s.R[a].col(order[start + q]);
        cols = cols * w;
        for (Index q = 0; q < c; ++q) s.R[a].col(order[start + q]) = cols.col(q);
      }
      start = end;
    }
  }
  refresh(s, tol);
}

/// One Jacobi sweep over the rotation matrices: for every pair of columns of
/// every R_i, the plane rotation minimizing ln det X in closed form.
///
/// Rotating the pair (x_j, x_j') by theta changes X by C E C^T with
/// C = [x_j, x_j'] and E = h [[cos phi - 1, sin phi], [sin phi, 1 - cos phi]],
/// phi = 2 theta, h = (e^{t_j} - e^{t_j'}) / 2. Then
/// det(I + E K) = 1 + a (1 - cos phi) + b sin phi with K = C^T X^{-1} C,
/// a = -h (K11 - K22) - 2 h^2 det K and b = 2 h K12, minimized at
/// (cos phi, sin phi) = (a, -b) / sqrt(a^2 + b^2).
inline void rotation_sweep(ScalingState& s, const Tolerance& tol = {}) {
  const Vector w = s.t.array().exp();
  for (std::size_t a = 0; a < s.basis.size(); ++a) {
    const Index k = s.R[a].rows();
    for (Index j = 0; j < k; ++j) {
      for (Index jj = j + 1; jj < k; ++jj) {
        const Index fj = s.offset[a] + j;
        const Index fjj = s.offset[a] + jj;
        const double h = 0.5 * (w(fj) - w(fjj));
        if (h == 0.0) continue;
        Matrix c(static_cast<Index>(s.ambient), 2);
        c.col(0) = s.x.row(fj).transpose();
        c.col(1) = s.x.row(fjj).transpose();
        const Matrix xc = s.Xinv * c;
        const Eigen::Matrix2d kk = c.transpose() * xc;
        const double a_coef = -h * (kk(0, 0) - kk(1, 1)) - 2.0 * h * h * kk.determinant();
        const double b_coef = 2.0 * h * kk(0, 1);
        const double r = std::hypot(a_coef, b_coef);
        // det factor after the optimal rotation is 1 + a - r.
        if (!(r > 0.0) || a_coef - r > -1e-15) continue;
        const double phi = std::atan2(-b_coef, a_coef);
        const double cs = std::cos(0.5 * phi);
        const double sn = std::sin(0.5 * phi);
        Eigen::Matrix2d e;
        e << std::cos(phi) - 1.0, std::sin(phi), std::sin(phi), 1.0 - std::cos(phi);
        e *= h;
        const Eigen::Matrix2d core = (Eigen::Matrix2d::Identity() + e * kk).inverse() * e;
        s.Xinv -= xc * core * xc.transpose();
        const Eigen::RowVectorXd xj = s.x.row(fj);
        const Eigen::RowVectorXd xjj = s.x.row(fjj);
        s.x.row(fj) = cs * xj + sn * xjj;
        s.x.row(fjj) = -sn * xj + cs * xjj;
        const Vector rj = s.R[a].col(j);
        const Vector rjj = s.R[a].col(jj);
        s.R[a].col(j) = cs * rj + sn * rjj;
        s.R[a].col(jj) = -sn * rj + cs * rjj;
      }
    }
  }
  refresh(s, tol);
}

/// ||sum_i p_i Proj_{M(V_i)} - I|| over the arrangement (all spaces).
inline Matrix weighted_projection_sum(const Arrangement& arr, const Vector& p, const Matrix& m,
                                      const Tolerance& tol = {}) {
  const auto l = static_cast<Index>(arr.ambient);
  Matrix sum = Matrix::Zero(l, l);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const double pi = p(static_cast<Index>(i));
    if (pi == 0.0 || arr[i].is_zero()) continue;
    const Matrix img = orthonormalize(arr[i].basis() * m.transpose(), tol);
    sum += pi * img.transpose() * img;
  }
  return sum;
}

inline double operator_gap(const Arrangement& arr, const Vector& p, const Matrix& m, const Tolerance& tol = {}) {
  const Matrix sum = weighted_projection_sum(arr, p, m, tol);
  return spectral_norm(sum - Matrix::Identity(sum.rows(), sum.cols()));
}

/// sum_ij e^{t_ij} (M x_ij)(M x_ij)^T - I, which vanishes by construction of M.
inline double frame_identity_defect(const ScalingState& s) {
  const Matrix y = s.t.array().exp().sqrt().matrix().asDiagonal() * (s.x * s.M);
  const Matrix g = y.transpose() * y;
  return spectral_norm(g - Matrix::Identity(g.rows(), g.cols()));
}

struct Obstruction {
  std::vector<std::size_t> spaces;  ///< arrangement indices owning a diverging t
  std::vector<int> direction;       ///< +1 toward +inf, -1 toward -inf
  double t_norm = 0.0;
};

struct ScalingMap {
  Matrix M;
  double achieved_eps = std::numeric_limits<double>::infinity();
  std::optional<Obstruction> obstruction;
  std::size_t iterations = 0;
  double max_grad = 0.0;
  std::vector<double> objective_trace;
  ScalingState state;
};

struct ScalingOptions {
  double eps = 1e-6;
  std::size_t max_iter = 10000;
  double tie_tol = 1e-9;
  double t_cap = 60.0;
  /// Per-coordinate gradient target is eps / (m * grad_divisor_scale) with
  /// the default 1 giving eps / m.
  double grad_divisor_scale = 1.0;
};

namespace detail {

/// Damped Newton ascent direction on t with Armijo backtracking; falls back
/// to the gradient when the Newton direction is not an ascent direction.
inline bool newton_t_step(ScalingState& s, const Tolerance& tol) {
  const Vector w = s.t.array().exp();
  const Matrix y = w.array().sqrt().matrix().asDiagonal() * (s.x * s.M);
  const Matrix g = y * y.transpose();
  Matrix neg_hess = -g.cwiseProduct(g);
  neg_hess.diagonal() += g.diagonal();
  const double mu = 1e-10 * (1.0 + neg_hess.diagonal().maxCoeff());
  neg_hess.diagonal().array() += mu;
  Vector dir = neg_hess.ldlt().solve(s.grad);
  if (!dir.allFinite() || s.grad.dot(dir) <= 0.0) dir = s.grad;
  const double slope = s.grad.dot(dir);
  if (!(slope > 0.0)) return false;
  // Keep single steps bounded so exp() stays meaningful.
  const double cap = dir.cwiseAbs().maxCoeff();
  double step = cap > 8.0 ? 8.0 / cap : 1.0;
  const double f0 = objective(s);
  const Vector t0 = s.t;
  for (int tries = 0; tries < 60; ++tries, step *= 0.5) {
    s.t = t0 + step * dir;
    try {
      refresh(s, tol);
    } catch (const DegenerateStateError&) {
      continue;
    }
    if (objective(s) >= f0 + 1e-4 * step * slope) return true;
  }
  s.t = t0;
  refresh(s, tol);
  return false;
}

inline Obstruction make_obstruction(const ScalingState& s, double t_cap) {
  Obstruction ob;
  ob.t_norm = s.t.cwiseAbs().maxCoeff();
  for (Index f = 0; f < s.m(); ++f) {
    if (std::abs(s.t(f)) <= 0.5 * t_cap) continue;
    const std::size_t sp = s.space[s.owner[static_cast<std::size_t>(f)]];
    if (!ob.spaces.empty() && ob.spaces.back() == sp) continue;
    ob.spaces.push_back(sp);
    ob.direction.push_back(s.t(f) > 0.0 ? 1 : -1);
  }
  return ob;
}

}  // namespace detail

/// Maximize f until max |grad| <= eps/m and the measured operator gap is at
/// most eps. Requires the active spaces to span the ambient space.
inline ScalingMap optimize(const Arrangement& arr, const Vector& p, const ScalingOptions& opt = {},
                           const Tolerance& tol = {}) {
  if (!(opt.eps > 0.0) || !(opt.t_cap > 0.0) || !(opt.tie_tol >= 0.0)) {
    throw PreconditionError("optimize: eps, t_cap must be positive and tie_tol non-negative");
  }
  {
    IndexSet support;
    for (std::size_t i = 0; i < arr.size(); ++i)
      if (p(static_cast<Index>(i)) > 0.0) support.push_back(i);
    if (rank(stack_bases(arr, support), tol) != arr.ambient) {
      throw PreconditionError("optimize: the spaces with p_i > 0 do not span the ambient space");
    }
  }
  ScalingMap out;
  out.state = make_state(arr, p, tol);
  ScalingState& s = out.state;
  const double grad_target = opt.eps / (static_cast<double>(s.m()) * opt.grad_divisor_scale);
  int stalled = 0;
  for (std::size_t iter = 0; iter < opt.max_iter; ++iter) {
    out.iterations = iter + 1;
    const double before = objective(s);
    r_step(s, opt.tie_tol, tol);
    rotation_sweep(s, tol);
    out.objective_trace.push_back(objective(s));
    out.max_grad = s.grad.cwiseAbs().maxCoeff();
    if (s.t.cwiseAbs().maxCoeff() > opt.t_cap) {
      out.obstruction = detail::make_obstruction(s, opt.t_cap);
      out.M = s.M;
      out.achieved_eps = operator_gap(arr, p, s.M, tol);
      return out;
    }
    if (out.max_grad <= grad_target) {
      const double gap = operator_gap(arr, p, s.M, tol);
      if (gap <= opt.eps) {
        out.M = s.M;
        out.achieved_eps = gap;
        return out;
      }
    }
    const bool moved = detail::newton_t_step(s, tol);
    out.objective_trace.push_back(objective(s));
    const double gain = objective(s) - before;
    stalled = (!moved && gain <= 1e-15 * (1.0 + std::abs(before))) ? stalled + 1 : 0;
    if (stalled >= 5) break;
  }
  throw BudgetError("optimize: no convergence after " + std::to_string(out.iterations) +
                    " iterations (max |grad| = " + std::to_string(out.max_grad) + ")");
}

// ---------------------------------------------------------------------------
// Augmentation for arrangements that do not span or whose sampled sets are
// not bases.

struct BarthecForm {
  Arrangement model;            ///< n + d spaces in R^d
  Vector p;                     ///< length n + d, first n entries are the input p
  Matrix restriction;           ///< d x ambient, orthonormal rows spanning sum V_i
  std::vector<IndexSet> bases;  ///< each hull set extended to a basis set
  std::vector<std::size_t> counts;
  std::size_t trials = 0;
  std::size_t original = 0;     ///< n
};

inline BarthecForm barthec_form(const Arrangement& arr, const HullCertificate& hull, const Tolerance& tol = {}) {
  if (hull.sets.empty() || hull.trials == 0) throw PreconditionError("barthec_form: missing hull certificate");
  if (static_cast<std::size_t>(hull.p.size()) != arr.size()) {
    throw PreconditionError("barthec_form: hull certificate does not match the arrangement");
  }
  BarthecForm out;
  out.original = arr.size();
  out.restriction = orthonormalize(stack_bases(arr), tol);
  const auto d = static_cast<std::size_t>(out.restriction.rows());
  if (d == 0) throw PreconditionError("barthec_form: the arrangement sums to the zero space");
  out.model.ambient = d;
  out.model.origin = arr.origin;
  for (const auto& s : arr.spaces) {
    out.model.spaces.push_back(s.is_zero() ? Subspace::zero(d)
                                           : Subspace::span_of(s.basis() * out.restriction.transpose(), tol));
  }
  for (std::size_t s = 0; s < d; ++s) {
    Matrix e = Matrix::Zero(1, static_cast<Index>(d));
    e(0, static_cast<Index>(s)) = 1.0;
    out.model.spaces.push_back(Subspace::from_orthonormal(std::move(e)));
  }
  std::vector<std::size_t> totals(arr.size() + d, 0);
  for (std::size_t j = 0; j < hull.sets.size(); ++j) {
    IndexSet h = hull.sets[j];
    Matrix span = orthonormalize(stack_bases(out.model, h), tol);
    for (std::size_t s = 0; s < d && static_cast<std::size_t>(span.rows()) < d; ++s) {
      Matrix grown = orthonormalize(vstack(span, out.model[arr.size() + s].basis()), tol);
      if (grown.rows() == span.rows()) continue;
      h.push_back(arr.size() + s);
      span = std::move(grown);
    }
    if (!is_admissible(out.model, h, tol) || rank(stack_bases(out.model, h), tol) != d) {
      throw InvariantError("barthec_form: extended set is not a basis set");
    }
    for (std::size_t i : h) totals[i] += hull.counts[j];
    out.bases.push_back(std::move(h));
    out.counts.push_back(hull.counts[j]);
  }
  out.trials = hull.trials;
  out.p = Vector(static_cast<Index>(totals.size()));
  for (std::size_t i = 0; i < totals.size(); ++i) {
    out.p(static_cast<Index>(i)) = static_cast<double>(totals[i]) / static_cast<double>(hull.trials);
  }
  return out;
}

struct BarthecScaling {
  BarthecForm form;
  ScalingMap model_map;
  Matrix M;  ///< ambient x ambient, invertible
  double top_eigenvalue = 0.0;
};

/// Scale the augmented model with eps = 1 and lift M back: on sum V_i it acts
/// as the model map, on the orthogonal complement as the identity. Then
/// sum_i p_i Proj_{M(V_i)} <= 2 I is checked.
inline BarthecScaling barthec_scale(const Arrangement& arr, const HullCertificate& hull, ScalingOptions opt = {},
                                    const Tolerance& tol = {}) {
  BarthecScaling out;
  out.form = barthec_form(arr, hull, tol);
  out.model_map = optimize(out.form.model, out.form.p, opt, tol);
  if (out.model_map.obstruction) {
    throw DegenerateStateError("barthec_scale: the augmented model diverged");
  }
  const Matrix& b = out.form.restriction;
  const auto l = static_cast<Index>(arr.ambient);
  out.M = b.transpose() * out.model_map.M * b + (Matrix::Identity(l, l) - b.transpose() * b);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(weighted_projection_sum(arr, hull.p, out.M, tol));
  out.top_eigenvalue = eig.eigenvalues().maxCoeff();
  if (out.top_eigenvalue > 2.0 + tol.residual_tol) {
    throw InvariantError("barthec_scale: weighted projections exceed 2 I");
  }
  return out;
}

}  // namespace sgdim
