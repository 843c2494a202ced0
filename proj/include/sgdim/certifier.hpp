/**
 * @file certifier.hpp
 * @brief Dimension certificates for arrangements carrying an
 * (alpha, delta)-system: the annihilator rank certificate for well separated
 * systems, the bound-or-collapse decomposition step and the projection
 * recursion that turns collapses into a final dimension bound.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sgdim/arrangement.hpp"
#include "sgdim/dependency.hpp"
#include "sgdim/error.hpp"
#include "sgdim/linalg.hpp"
#include "sgdim/scaling.hpp"

namespace sgdim {

/// Relative annihilation tolerance for D A = 0.
inline constexpr double kAnnihilationTol = 1e-6;
/// Absolute slack on floating budgets (off-diagonal mass, coefficient sums).
inline constexpr double kBudgetSlack = 1e-6;

/// floor(x) for quantities that are integers or ratios in exact arithmetic.
inline std::int64_t safe_floor(long double x) { return static_cast<std::int64_t>(std::floor(x + 1e-9L)); }

// ---------------------------------------------------------------------------
// Building blocks

/// Coefficients (lambda, mu) with u = sum lambda_j u_j + sum mu_j u'_j over
/// the orthonormal bases of v1 and v2.
inline Vector coefficient_expand(const Vector& u, const Subspace& v1, const Subspace& v2, double tau,
                                 const Tolerance& tol = {}) {
  if (!tau_separated(v1, v2, tau)) throw PreconditionError("coefficient_expand: spaces are not tau-separated");
  const Matrix g = vstack(v1.basis(), v2.basis());
  if (g.rows() == 0) {
    if (u.norm() > tol.residual_tol) throw MembershipError("coefficient_expand: vector outside the sum");
    return Vector();
  }
  const Matrix gt = g.transpose();
  Vector c = gt.colPivHouseholderQr().solve(u);
  if ((gt * c - u).norm() > tol.residual_tol) throw MembershipError("coefficient_expand: vector outside the sum");
  if (c.squaredNorm() > u.squaredNorm() / tau + kBudgetSlack) {
    throw InvariantError("coefficient_expand: squared coefficients exceed 1/tau");
  }
  return c;
}

struct SeparationWitness {
  std::size_t row = 0;
  double projection_norm_sq = 0.0;
};

/// A basis row of v projecting onto w with squared norm at least
/// (1 - tau)^2 / dim v, present exactly when v and w are not tau-separated.
inline std::optional<SeparationWitness> separation_witness(const Subspace& v, const Subspace& w, double tau) {
  if (tau_separated(v, w, tau)) return std::nullopt;
  const Vector norms = (v.basis() * w.basis().transpose()).rowwise().squaredNorm();
  Index best = 0;
  norms.maxCoeff(&best);
  SeparationWitness out{static_cast<std::size_t>(best), norms(best)};
  if (out.projection_norm_sq < (1.0 - tau) * (1.0 - tau) / static_cast<double>(v.dim()) - 1e-12) {
    throw InvariantError("separation_witness: no basis row meets the projection bound");
  }
  return out;
}

struct DiagDomBound {
  std::size_t bound = 0;
  double L = 0.0;
  double K = 0.0;
};

/// rank(D) >= m - K / L^2 for a matrix with constant diagonal L and
/// off-diagonal squared mass K.
inline DiagDomBound diagdom_rank_bound(const Matrix& d, const Tolerance& tol = {}) {
  if (d.rows() != d.cols() || d.rows() == 0) throw PreconditionError("diagdom_rank_bound: need a nonempty square matrix");
  DiagDomBound out;
  out.L = d(0, 0);
  if (!(out.L > 0.0)) throw PreconditionError("diagdom_rank_bound: diagonal must be positive");
  for (Index i = 0; i < d.rows(); ++i) {
    if (std::abs(d(i, i) - out.L) > tol.residual_tol * out.L) {
      throw PreconditionError("diagdom_rank_bound: diagonal is not constant");
    }
  }
  out.K = d.squaredNorm() - d.diagonal().squaredNorm();
  const double raw = static_cast<double>(d.rows()) - out.K / (out.L * out.L);
  out.bound = raw <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return out;
}

/// The annihilator D of the stacked basis matrix A with its parameters.
struct DependencyMatrix {
  Matrix A;
  Matrix D;
  double L = 0.0;
  double K = 0.0;
  std::vector<std::size_t> psi;  ///< row of A -> space index
  DiagDomBound diagdom;
};

enum class Branch { bound, collapse, scale_collapse };

inline const char* branch_name(Branch b) {
  switch (b) {
    case Branch::bound:
      return "bound";
    case Branch::collapse:
      return "collapse";
    case Branch::scale_collapse:
      return "scale-collapse";
  }
  return "?";
}

struct CertificateParams {
  std::size_t alpha = 0;
  Rational delta;
  double beta = 0.0;
  std::size_t k = 0;
  std::size_t n = 0;
  std::size_t d = 0;
};

struct CollapseWitness {
  IndexSet indices;
  Matrix z;  ///< one row per index, z_r in V_{indices[r]}
  std::size_t w_dim = 0;
};

struct Certificate {
  Branch branch = Branch::bound;
  std::int64_t d_bound = 0;
  std::vector<DependencyMatrix> evidence;
  CollapseWitness collapse;
  CertificateParams params;
  std::string note;
};

/// ceil(delta n / (20 alpha)), the smallest admissible collapse size.
inline std::size_t collapse_size_requirement(const Rational& delta, std::size_t n, std::size_t alpha) {
  return static_cast<std::size_t>(std::max<std::int64_t>(
      1, (delta * Rational(static_cast<std::int64_t>(n)) / Rational(static_cast<std::int64_t>(20 * alpha))).ceil()));
}

/// Re-verify a certificate against the arrangement it was issued for.
inline void verify_certificate(const Arrangement& arr, const Certificate& cert, const Tolerance& tol = {}) {
  const auto& pr = cert.params;
  if (cert.branch == Branch::bound) {
    if (static_cast<std::int64_t>(dimension(arr, tol)) > cert.d_bound) {
      throw InvariantError("certificate: measured dimension exceeds the bound");
    }
    for (const auto& ev : cert.evidence) {
      if (static_cast<std::int64_t>(rank(ev.A, tol)) > cert.d_bound) {
        throw InvariantError("certificate: rank(A) exceeds the bound");
      }
    }
    return;
  }
  const auto& w = cert.collapse;
  if (w.indices.size() < collapse_size_requirement(pr.delta, pr.n, pr.alpha)) {
    throw InvariantError("collapse witness: fewer than delta*n/(20 alpha) spaces");
  }
  if (static_cast<std::size_t>(w.z.rows()) != w.indices.size()) throw InvariantError("collapse witness: shape");
  for (std::size_t r = 0; r < w.indices.size(); ++r) {
    const Matrix z = w.z.row(static_cast<Index>(r));
    const double norm = z.norm();
    if (!(norm > tol.residual_tol)) throw InvariantError("collapse witness: zero vector");
    if (residual_norm(z, arr.spaces.at(w.indices[r]).basis()) > tol.residual_tol * norm) {
      throw InvariantError("collapse witness: z_" + std::to_string(r) + " is not in its space");
    }
  }
  const auto cap = safe_floor(static_cast<long double>(pr.beta) * pr.d);
  if (static_cast<std::int64_t>(rank(w.z, tol)) > cap || static_cast<std::int64_t>(w.w_dim) > cap) {
    throw InvariantError("collapse witness: rank(z) exceeds beta*d");
  }
}

// ---------------------------------------------------------------------------
// Rank certificate

/// Build D with D A = 0, diagonal ceil(delta n) and small off-diagonal rows,
/// and conclude dim(sum V_i) <= alpha k / (tau delta).
///
/// 2-sets are exempt from the separation requirement: their two spaces are
/// equal, and the expansion u = sum lambda_j u'_j has squared mass exactly 1.
inline Certificate separated_certificate(const Arrangement& arr, const TripleSystem& sys, double tau,
                                         const Tolerance& tol = {}) {
  if (!(tau > 0.0) || tau > 1.0) throw PreconditionError("separated_certificate: tau must lie in (0, 1]");
  if (!(Rational(0) < sys.delta)) throw PreconditionError("separated_certificate: delta must be positive");
  {
    auto report = validate_system(arr, sys, tol);
    if (!report.ok()) {
      const auto& v = report.violations.front();
      if (v.requirement == 3) throw SystemDegreeError("separated_certificate: " + v.message);
      throw InconsistentSystemError("separated_certificate: " + v.message);
    }
  }
  for (const auto& s : sys.sets) {
    if (s.size() != 3) continue;
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = a + 1; b < 3; ++b)
        if (!tau_separated(arr[s[a]], arr[s[b]], tau)) {
          throw PreconditionError("separated_certificate: spaces " + std::to_string(s[a]) + " and " +
                                  std::to_string(s[b]) + " are not tau-separated");
        }
  }

  DependencyMatrix ev;
  ev.A = stack_bases(arr);
  const Index m = ev.A.rows();
  std::vector<Index> first_row(arr.size() + 1, 0);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    first_row[i + 1] = first_row[i] + static_cast<Index>(arr[i].dim());
    for (std::size_t j = 0; j < arr[i].dim(); ++j) ev.psi.push_back(i);
  }
  std::vector<std::vector<std::size_t>> containing(arr.size());
  for (std::size_t j = 0; j < sys.sets.size(); ++j)
    for (std::size_t i : sys.sets[j]) containing[i].push_back(j);

  const std::size_t L = degree_requirement(sys.delta, sys.n);
  ev.L = static_cast<double>(L);
  ev.D = Matrix::Zero(m, m);
  const double row_budget = static_cast<double>(sys.alpha) * ev.L / tau + kBudgetSlack;
  for (Index s = 0; s < m; ++s) {
    const std::size_t i = ev.psi[static_cast<std::size_t>(s)];
    if (containing[i].size() < L) {
      throw SystemDegreeError("separated_certificate: index " + std::to_string(i) + " lies in fewer than " +
                              std::to_string(L) + " sets");
    }
    const Vector u = ev.A.row(s).transpose();
    for (std::size_t c = 0; c < L; ++c) {
      const IndexSet& set = sys.sets[containing[i][c]];
      IndexSet others;
      for (std::size_t x : set)
        if (x != i) others.push_back(x);
      ev.D(s, s) += 1.0;
      if (others.size() == 2) {
        Vector coef;
        try {
          coef = coefficient_expand(u, arr[others[0]], arr[others[1]], tau, tol);
        } catch (const MembershipError& e) {
          throw InconsistentSystemError(std::string("separated_certificate: ") + e.what());
        }
        const auto k0 = static_cast<Index>(arr[others[0]].dim());
        const auto k1 = static_cast<Index>(arr[others[1]].dim());
        ev.D.row(s).segment(first_row[others[0]], k0) -= coef.head(k0).transpose();
        ev.D.row(s).segment(first_row[others[1]], k1) -= coef.tail(k1).transpose();
      } else {
        const Subspace& v = arr[others[0]];
        const Vector lambda = v.basis() * u;
        if ((v.basis().transpose() * lambda - u).norm() > tol.residual_tol) {
          throw InconsistentSystemError("separated_certificate: 2-set spaces differ");
        }
        ev.D.row(s).segment(first_row[others[0]], static_cast<Index>(v.dim())) -= lambda.transpose();
      }
    }
    if (ev.D(s, s) != ev.L) throw InvariantError("separated_certificate: diagonal entry differs from ceil(delta n)");
    const double off = ev.D.row(s).squaredNorm() - ev.L * ev.L;
    if (off > row_budget) throw InvariantError("separated_certificate: off-diagonal row mass over budget");
  }
  if (m > 0) {
    const double da = (ev.D * ev.A).norm();
    if (da > kAnnihilationTol * ev.D.norm() * ev.A.norm()) throw InvariantError("separated_certificate: D A != 0");
    ev.diagdom = diagdom_rank_bound(ev.D, tol);
    ev.K = ev.diagdom.K;
    if (rank(ev.D, tol) < ev.diagdom.bound) throw InvariantError("separated_certificate: rank(D) below its bound");
  }

  Certificate cert;
  cert.branch = Branch::bound;
  cert.params = {sys.alpha, sys.delta, 0.0, max_dim(arr), sys.n, rank(ev.A, tol)};
  cert.d_bound = safe_floor(static_cast<long double>(sys.alpha) * cert.params.k /
                            (static_cast<long double>(tau) * sys.delta.to_double()));
  if (static_cast<std::int64_t>(cert.params.d) > cert.d_bound) {
    throw InvariantError("separated_certificate: rank(A) exceeds alpha k / (tau delta)");
  }
  cert.evidence.push_back(std::move(ev));
  return cert;
}

// ---------------------------------------------------------------------------
// Decomposition step

struct DecomposeOptions {
  bool skip_entry_check = false;
  std::size_t retry_cap = 3;
  std::size_t harvest_runs = 256;
  std::size_t workers = 1;
  ScalingOptions scaling{1.0, 2000, 1e-9, 60.0, 1.0};
};

/// 400 alpha k^3 / (beta delta).
inline long double entry_bound(std::size_t alpha, std::size_t k, double beta, const Rational& delta) {
  return 400.0L * alpha * k * k * k / (static_cast<long double>(beta) * delta.to_double());
}

namespace detail {

/// For every space meeting span(q) nontrivially, a unit vector in the
/// intersection.
inline CollapseWitness intersect_with(const Arrangement& arr, const Matrix& q, const Tolerance& tol) {
  CollapseWitness w;
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const Subspace& v = arr[i];
    if (v.is_zero()) continue;
    const Matrix r = q.rows() == 0 ? v.basis() : Matrix(v.basis() - (v.basis() * q.transpose()) * q);
    Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeFullU);
    const Index last = static_cast<Index>(v.dim()) - 1;
    if (svd.singularValues()(last) >= tol.rank_tol) continue;
    Vector z = (svd.matrixU().col(last).transpose() * v.basis()).transpose();
    z.normalize();
    if (residual_norm(z.transpose(), q) > tol.residual_tol) continue;
    w.indices.push_back(i);
    rows.push_back(std::move(z));
  }
  w.z = Matrix(static_cast<Index>(rows.size()), static_cast<Index>(arr.ambient));
  for (std::size_t r = 0; r < rows.size(); ++r) w.z.row(static_cast<Index>(r)) = rows[r].transpose();
  w.w_dim = rank(w.z, tol);
  return w;
}

/// Best witness over sampled runs: the longest prefix of each run whose sum
/// has dimension at most floor(beta d), and every space meeting that sum.
inline std::optional<CollapseWitness> harvest(const Arrangement& arr, const AdmissibleSample& sample,
                                              std::size_t cap, std::size_t q_min, std::size_t runs,
                                              const Tolerance& tol) {
  std::optional<CollapseWitness> best;
  std::vector<IndexSet> seen;
  for (std::size_t r = 0; r < sample.sets.size() && r < runs; ++r) {
    const IndexSet& run = sample.sets[r];
    IndexSet prefix;
    std::size_t dims = 0;
    for (std::size_t i : run) {
      if (dims + arr[i].dim() > cap) break;
      dims += arr[i].dim();
      prefix.push_back(i);
    }
    if (dims == 0) continue;
    IndexSet key = prefix;
    std::sort(key.begin(), key.end());
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    CollapseWitness w = intersect_with(arr, orthonormalize(stack_bases(arr, prefix), tol), tol);
    if (w.indices.size() < q_min || w.w_dim > cap) continue;
    if (!best || w.indices.size() > best->indices.size()) best = std::move(w);
  }
  return best;
}

}  // namespace detail

/// One step of the dichotomy: either the dimension is already below
/// 400 alpha k^3 / (beta delta), or some q >= delta n / (20 alpha) spaces
/// contain nonzero vectors spanning at most beta d dimensions.
inline Certificate decompose_step(const Arrangement& arr, const TripleSystem& sys, double beta, std::size_t trials,
                                  std::uint64_t seed, const Tolerance& tol = {}, const DecomposeOptions& opt = {}) {
  if (!(beta > 0.0 && beta < 1.0)) throw PreconditionError("decompose_step: beta must lie in (0, 1)");
  require_valid(arr, sys, "decompose_step", tol);
  if (!(Rational(0) < sys.delta)) throw PreconditionError("decompose_step: delta must be positive");
  const std::size_t n = arr.size();
  const std::size_t k = max_dim(arr);
  const std::size_t d = dimension(arr, tol);
  Certificate cert;
  cert.params = {sys.alpha, sys.delta, beta, k, n, d};

  const long double entry = entry_bound(sys.alpha, k, beta, sys.delta);
  if (!opt.skip_entry_check && static_cast<long double>(d) <= entry) {
    cert.branch = Branch::bound;
    cert.d_bound = safe_floor(entry);
    cert.note = "entry";
    return cert;
  }

  const auto cap = static_cast<std::size_t>(std::max<std::int64_t>(0, safe_floor(static_cast<long double>(beta) * d)));
  const std::size_t q_min = collapse_size_requirement(sys.delta, n, sys.alpha);
  const std::size_t x_min = static_cast<std::size_t>(std::max<std::int64_t>(
      1, (sys.delta * Rational(static_cast<std::int64_t>(n)) / Rational(static_cast<std::int64_t>(10 * sys.alpha))).ceil()));
  const double threshold = beta * static_cast<double>(d) / (4.0 * static_cast<double>(k) * static_cast<double>(n));
  std::ostringstream diag;

  AdmissibleSample sample;
  for (std::size_t attempt = 0; attempt <= opt.retry_cap; ++attempt) {
    sample = sample_admissible(arr, trials, seed + 0x9e3779b97f4a7c15ULL * attempt, tol, opt.workers);
    std::size_t low = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sample.p_hat(static_cast<Index>(i));
      const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
      if (p + 3.0 * sigma < threshold) ++low;
    }
    bool short_run = false;
    for (const auto& h : sample.sets) {
      std::size_t dims = 0;
      for (std::size_t i : h) dims += arr[i].dim();
      short_run = short_run || dims <= cap;
    }
    diag << "attempt " << attempt << ": " << low << " low-probability spaces (need " << x_min << ")"
         << (short_run ? ", short maximal run" : "") << "; ";
    if (low < x_min && !short_run) break;
    auto w = detail::harvest(arr, sample, cap, q_min, opt.harvest_runs, tol);
    if (w) {
      cert.branch = Branch::collapse;
      cert.collapse = std::move(*w);
      verify_certificate(arr, cert, tol);
      return cert;
    }
  }

  // Scale, keep 0.5-separated sets, prune and certify the image.
  try {
    const auto hull = admissible_hull_vector(sample);
    const auto scaled = barthec_scale(arr, hull, opt.scaling, tol);
    Arrangement image;
    image.ambient = arr.ambient;
    for (const auto& v : arr.spaces) {
      image.spaces.push_back(v.is_zero() ? Subspace::zero(arr.ambient)
                                         : Subspace::span_of(v.basis() * scaled.M.transpose(), tol));
    }
    TripleSystem kept = sys;
    kept.sets.clear();
    for (const auto& s : sys.sets) {
      bool good = true;
      for (std::size_t a = 0; a < s.size() && good; ++a)
        for (std::size_t b = a + 1; b < s.size() && good; ++b) good = tau_separated(image[s[a]], image[s[b]], 0.5);
      if (good) kept.sets.push_back(s);
    }
    diag << kept.w() << " of " << sys.w() << " sets are 0.5-separated after scaling; ";
    auto pruned = prune_low_degree(image, kept, sys.delta / Rational(10), tol);
    auto sep = separated_certificate(pruned.arrangement, pruned.system, 0.5, tol);
    CollapseWitness w;
    for (std::size_t r = 0; r < pruned.origin.size(); ++r) {
      const std::size_t i = pruned.origin[r];
      if (arr[i].is_zero()) continue;
      w.indices.push_back(i);
    }
    w.z = Matrix(static_cast<Index>(w.indices.size()), static_cast<Index>(arr.ambient));
    for (std::size_t r = 0; r < w.indices.size(); ++r) w.z.row(static_cast<Index>(r)) = arr[w.indices[r]].basis().row(0);
    w.w_dim = rank(w.z, tol);
    if (w.indices.size() >= q_min && w.w_dim <= cap) {
      cert.branch = Branch::scale_collapse;
      cert.collapse = std::move(w);
      cert.evidence = std::move(sep.evidence);
      verify_certificate(arr, cert, tol);
      return cert;
    }
    diag << "image certificate gives " << w.indices.size() << " spaces of rank " << w.w_dim << " (cap " << cap << ")";
  } catch (const Error& e) {
    diag << "scaling branch: " << e.what();
  }
  throw InconclusiveError("decompose_step: no branch decided at d = " + std::to_string(d) + "; " + diag.str());
}

// ---------------------------------------------------------------------------
// Recursion

struct RoundRecord {
  std::size_t t = 0;
  std::size_t n = 0;
  Rational delta;
  std::size_t d = 0;
  Branch branch = Branch::bound;
  std::size_t loss = 0;
};

inline std::string format_round(const RoundRecord& r) {
  std::ostringstream os;
  os << "round " << r.t << " n " << r.n << " delta " << r.delta << " d " << r.d << " branch " << branch_name(r.branch)
     << " loss " << r.loss;
  return os.str();
}

struct CertifyOptions {
  std::optional<double> beta;  ///< default min{1/2, delta/(alpha k)}
  std::size_t trials = 4096;
  std::uint64_t seed = 0;
  /// Skip the entry check while collapse witnesses keep coming; fall back to
  /// it once a step is inconclusive.
  bool explore = false;
  std::size_t max_rounds = 0;  ///< 0: only the hard cap ceil(20 alpha k / delta)
  double max_seconds = 0.0;    ///< 0: no wall-clock budget
  DecomposeOptions step;
};

struct CertifyResult {
  std::int64_t final_bound = 0;
  long double final_bound_exact = 0.0L;
  long double reference_bound = 0.0L;  ///< 4^20 * 400 alpha k^3 / (beta delta)
  std::size_t measured = 0;
  double beta = 0.0;
  std::vector<RoundRecord> rounds;
  std::vector<Certificate> certificates;

  std::vector<std::string> trace() const {
    std::vector<std::string> lines;
    for (const auto& r : rounds) lines.push_back(format_round(r));
    lines.push_back("final bound " + std::to_string(final_bound) + " measured " + std::to_string(measured));
    return lines;
  }
};

/// Budget exhausted mid-recursion; carries the rounds completed so far.
class CertifyBudgetError : public BudgetError {
 public:
  CertifyBudgetError(const std::string& what, std::vector<RoundRecord> partial)
      : BudgetError(what), partial_(std::move(partial)) {}
  const std::vector<RoundRecord>& partial() const noexcept { return partial_; }

 private:
  std::vector<RoundRecord> partial_;
};

inline double default_beta(const TripleSystem& sys, std::size_t k) {
  return std::min(0.5, sys.delta.to_double() / (static_cast<double>(sys.alpha) * static_cast<double>(k)));
}

inline CertifyResult certify(const Arrangement& arr, const TripleSystem& sys, const Tolerance& tol = {},
                             const CertifyOptions& opt = {}) {
  require_valid(arr, sys, "certify", tol);
  if (!(Rational(0) < sys.delta)) throw PreconditionError("certify: delta must be positive");
  const std::size_t k = max_dim(arr);
  if (k == 0) throw PreconditionError("certify: every space is zero");
  CertifyResult res;
  res.beta = opt.beta.value_or(default_beta(sys, k));
  if (!(res.beta > 0.0 && res.beta < 1.0)) throw PreconditionError("certify: beta must lie in (0, 1)");
  res.measured = dimension(arr, tol);
  res.reference_bound = std::pow(4.0L, 20) * entry_bound(sys.alpha, k, res.beta, sys.delta);
  const auto hard_cap = static_cast<std::size_t>(
      (Rational(static_cast<std::int64_t>(20 * sys.alpha * k)) / sys.delta).ceil());
  const auto started = std::chrono::steady_clock::now();

  Arrangement cur = arr;
  TripleSystem cur_sys = sys;
  const Rational mass = sys.delta * Rational(static_cast<std::int64_t>(sys.n));
  std::size_t collapses = 0;
  bool exploring = opt.explore;
  for (std::size_t t = 0;; ++t) {
    if (t >= hard_cap + 1) throw InvariantError("certify: more than ceil(20 alpha k / delta) rounds");
    if (opt.max_rounds > 0 && t >= opt.max_rounds) {
      throw CertifyBudgetError("certify: round budget exhausted", res.rounds);
    }
    if (opt.max_seconds > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() > opt.max_seconds) {
      throw CertifyBudgetError("certify: wall-clock budget exhausted", res.rounds);
    }
    RoundRecord rec{t, cur.size(), cur_sys.delta, dimension(cur, tol), Branch::bound, 0};
    DecomposeOptions step = opt.step;
    step.skip_entry_check = exploring;
    Certificate cert;
    try {
      cert = decompose_step(cur, cur_sys, res.beta, opt.trials, opt.seed + 7919 * t, tol, step);
    } catch (const InconclusiveError&) {
      if (!exploring) throw;
      exploring = false;
      step.skip_entry_check = false;
      cert = decompose_step(cur, cur_sys, res.beta, opt.trials, opt.seed + 7919 * t, tol, step);
    }
    rec.branch = cert.branch;
    if (cert.branch == Branch::bound) {
      res.rounds.push_back(rec);
      res.certificates.push_back(std::move(cert));
      res.final_bound_exact =
          std::pow(1.0L / (1.0L - res.beta), static_cast<long double>(collapses)) *
          entry_bound(sys.alpha, k, res.beta, cur_sys.delta);
      res.final_bound = safe_floor(res.final_bound_exact);
      break;
    }
    // Project away span(z) and continue on the images.
    const Matrix w = orthonormalize(cert.collapse.z, tol);
    const auto l = static_cast<Index>(cur.ambient);
    const Matrix p = Matrix::Identity(l, l) - w.transpose() * w;
    auto mapped = map_and_clean(cur, cur_sys, p, tol);
    if (!(mapped.delta * Rational(static_cast<std::int64_t>(mapped.system.n)) == mass)) {
      throw InvariantError("certify: delta_t n_t is not conserved");
    }
    const std::size_t next_d = dimension(mapped.arrangement, tol);
    rec.loss = static_cast<std::size_t>(w.rows());
    if (static_cast<std::int64_t>(rec.loss) > safe_floor(static_cast<long double>(res.beta) * rec.d) ||
        next_d + rec.loss < rec.d) {
      throw InvariantError("certify: a collapse lost more than beta*d dimensions");
    }
    res.rounds.push_back(rec);
    res.certificates.push_back(std::move(cert));
    cur = std::move(mapped.arrangement);
    cur_sys = std::move(mapped.system);
    ++collapses;
  }
  if (static_cast<long double>(res.measured) > res.final_bound_exact) {
    throw InvariantError("certify: measured dimension exceeds the final bound");
  }
  if (res.final_bound_exact > res.reference_bound * (1.0L + 1e-12L)) {
    throw InvariantError("certify: final bound exceeds 4^20 * 400 alpha k^3 / (beta delta)");
  }
  return res;
}

}  // namespace sgdim
