/**
 * @file cli.hpp
 * @brief The `sgdim` command line: gen, triples, system, scale, certify,
 * reduce and verify over the text formats of io.hpp.
 *
 * Exit codes: 0 success, 1 invariant or certificate failure, 2 usage or
 * parse error, 3 budget exceeded.
 */
#pragma once

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sgdim/arrangement.hpp"
#include "sgdim/certifier.hpp"
#include "sgdim/dependency.hpp"
#include "sgdim/error.hpp"
#include "sgdim/io.hpp"
#include "sgdim/scaling.hpp"

namespace sgdim::cli {

enum Exit : int { kOk = 0, kFailure = 1, kUsage = 2, kBudget = 3 };

/// Raised for unreadable inputs and inconsistent flag combinations.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string command;
  std::string input;
  std::string output;
  std::string system_path;
  Tolerance tol;
  std::uint64_t seed = 0;
  std::size_t trials = 4096;
  std::size_t workers = 1;
  double eps = 1e-6;
  std::size_t max_iter = 10000;
  double t_cap = 60.0;
  std::optional<double> beta;
  bool explore = false;
  std::size_t max_rounds = 0;
  double max_seconds = 0.0;
  std::size_t k = 0;  ///< 0: the largest space dimension in the input

  // gen
  std::string kind;
  std::string field = "real";
  double delta = 0.5;
  std::size_t n = 6;
  std::size_t ambient = 0;
  std::size_t triples = 5;
};

namespace detail {

inline ArrangementFile load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return read_arrangement_file(in);
}

inline TripleSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return read_system(in);
}

/// Writes to the -o path when given, else to `out`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      os_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw UsageError("cannot write '" + path + "'");
    os_ = file_.get();
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

inline std::size_t effective_k(const RunConfig& cfg, const Arrangement& arr) {
  return cfg.k > 0 ? cfg.k : max_dim(arr);
}

inline int cmd_gen(const RunConfig& cfg, std::ostream& out) {
  Sink sink(cfg.output, out);
  if (cfg.field == "complex") {
    if (cfg.kind != "planted") throw UsageError("gen: --field complex is only available for --kind planted");
    const PlantedSpec spec{cfg.n, cfg.k == 0 ? 2 : cfg.k, cfg.ambient == 0 ? 20 : cfg.ambient, cfg.triples};
    write_complex_arrangement(*sink, generate_complex_planted(spec, cfg.seed, cfg.tol).spaces);
    return kOk;
  }
  if (cfg.field != "real") throw UsageError("gen: --field must be real or complex");
  GeneratorSpec spec;
  if (cfg.kind == "grouped") {
    spec = GroupedSpec{cfg.k == 0 ? 1 : cfg.k, cfg.delta, cfg.n, cfg.ambient};
  } else if (cfg.kind == "grid") {
    spec = GridSpec{cfg.ambient == 0 ? 4 : cfg.ambient};
  } else if (cfg.kind == "planted") {
    spec = PlantedSpec{cfg.n, cfg.k == 0 ? 2 : cfg.k, cfg.ambient == 0 ? 20 : cfg.ambient, cfg.triples};
  } else {
    throw UsageError("gen: --kind must be grouped, grid or planted");
  }
  write_arrangement(*sink, generate(spec, cfg.seed, cfg.tol));
  return kOk;
}

inline int cmd_triples(const RunConfig& cfg, std::ostream& out) {
  const Arrangement arr = to_arrangement(load_file(cfg.input), cfg.tol);
  Sink sink(cfg.output, out);
  for (std::size_t a = 0; a < arr.size(); ++a)
    for (std::size_t b = a + 1; b < arr.size(); ++b)
      for (std::size_t c = b + 1; c < arr.size(); ++c)
        if (is_dependent_triple(arr[a], arr[b], arr[c], cfg.tol)) *sink << "triple " << a << ' ' << b << ' ' << c << '\n';
  for (const auto& sp : find_special_spaces(arr, effective_k(cfg, arr), cfg.tol)) {
    *sink << "special dim " << sp.span_basis.rows() << " members";
    for (std::size_t i : sp.member_indices) *sink << ' ' << i;
    *sink << '\n';
  }
  return kOk;
}

inline int cmd_system(const RunConfig& cfg, std::ostream& out) {
  const Arrangement arr = to_arrangement(load_file(cfg.input), cfg.tol);
  const TripleSystem sys = build_sg_system(arr, effective_k(cfg, arr), cfg.tol);
  Sink sink(cfg.output, out);
  write_system(*sink, sys);
  return kOk;
}

inline int cmd_scale(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Arrangement arr = to_arrangement(load_file(cfg.input), cfg.tol);
  ScalingOptions opt;
  opt.eps = cfg.eps;
  opt.max_iter = cfg.max_iter;
  opt.t_cap = cfg.t_cap;
  const auto sample = sample_admissible(arr, cfg.trials, cfg.seed, cfg.tol, cfg.workers);
  bool bases = true;
  for (const auto& h : sample.sets) {
    std::size_t dims = 0;
    for (std::size_t i : h) dims += arr[i].dim();
    bases = bases && dims == arr.ambient;
  }
  ScalingRecord rec;
  if (bases) {
    const ScalingMap map = optimize(arr, sample.p_hat, opt, cfg.tol);
    if (map.obstruction) {
      Sink sink(cfg.output, out);
      *sink << "obstruction t_norm " << format_real(map.obstruction->t_norm) << '\n';
      for (std::size_t j = 0; j < map.obstruction->spaces.size(); ++j) {
        *sink << "diverging space " << map.obstruction->spaces[j] << " direction "
              << (map.obstruction->direction[j] > 0 ? "+" : "-") << '\n';
      }
      err << "sgdim: scaling diverged; p_hat lies on the boundary of the admissible hull\n";
      return kFailure;
    }
    rec.M = map.M;
    rec.gap = map.achieved_eps;
  } else {
    const BarthecScaling sc = barthec_scale(arr, admissible_hull_vector(sample), opt, cfg.tol);
    rec.M = sc.M;
    rec.gap = sc.model_map.achieved_eps;
    rec.augmented = sc.form.model.ambient;
  }
  Sink sink(cfg.output, out);
  write_scaling(*sink, rec);
  return kOk;
}

inline int cmd_certify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Arrangement arr = to_arrangement(load_file(cfg.input), cfg.tol);
  const TripleSystem sys =
      cfg.system_path.empty() ? build_sg_system(arr, max_dim(arr), cfg.tol) : load_system(cfg.system_path);
  CertifyOptions opt;
  opt.beta = cfg.beta;
  opt.trials = cfg.trials;
  opt.seed = cfg.seed;
  opt.explore = cfg.explore;
  opt.max_rounds = cfg.max_rounds;
  opt.max_seconds = cfg.max_seconds;
  opt.step.workers = cfg.workers;
  Sink sink(cfg.output, out);
  try {
    const CertifyResult res = certify(arr, sys, cfg.tol, opt);
    for (const auto& line : res.trace()) *sink << line << '\n';
    return static_cast<std::int64_t>(res.measured) <= res.final_bound ? kOk : kFailure;
  } catch (const CertifyBudgetError& e) {
    for (const auto& r : e.partial()) *sink << format_round(r) << '\n';
    err << "sgdim: " << e.what() << '\n';
    return kBudget;
  }
}

inline int cmd_reduce(const RunConfig& cfg, std::ostream& out) {
  const ArrangementFile f = load_file(cfg.input);
  if (f.field != FieldOrigin::complex) throw UsageError("reduce: input is already real");
  const Arrangement arr = to_arrangement(f, cfg.tol);
  Sink sink(cfg.output, out);
  write_arrangement(*sink, arr);
  return kOk;
}

/// Runs the invariant suites of every module that applies to the file.
inline int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const ArrangementFile f = load_file(cfg.input);
  Sink sink(cfg.output, out);
  bool all = true;
  auto report = [&](const std::string& name, const std::vector<std::string>& problems) {
    if (problems.empty()) {
      *sink << "PASS " << name << '\n';
      return;
    }
    all = false;
    for (const auto& p : problems) *sink << "FAIL " << name << ": " << p << '\n';
  };

  std::vector<std::string> shape, basis;
  for (const auto& s : f.spaces) {
    const std::string id = "space " + std::to_string(s.id);
    if (static_cast<std::size_t>(s.re.rows()) > f.ambient) shape.push_back(id + " has dimension above ambient");
    if (f.field == FieldOrigin::real) {
      const double defect = orthonormality_defect(s.re);
      if (defect > cfg.tol.residual_tol) basis.push_back(id + " defect " + format_real(defect));
    } else if (rank(realification(s.re, s.im), cfg.tol) != 2 * static_cast<std::size_t>(s.re.rows())) {
      basis.push_back(id + " is not linearly independent over C");
    }
  }
  report("dimension-within-ambient", shape);
  report(f.field == FieldOrigin::real ? "orthonormality" : "complex-independence", basis);
  if (!all) return kFailure;

  const Arrangement arr = to_arrangement(f, cfg.tol);
  {
    std::vector<std::string> problems;
    std::ostringstream buf;
    write_arrangement(buf, arr);
    std::istringstream back(buf.str());
    const Arrangement again = read_arrangement(back, cfg.tol);
    for (std::size_t i = 0; i < arr.size(); ++i)
      if (again[i].basis() != arr[i].basis()) problems.push_back("space " + std::to_string(i) + " changed");
    report("round-trip", problems);
  }
  {
    std::vector<std::string> problems;
    try {
      const auto sample = sample_admissible(arr, std::min<std::size_t>(cfg.trials, 64), cfg.seed, cfg.tol);
      admissible_hull_vector(sample);
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
    report("admissible-sampling", problems);
  }
  if (!cfg.system_path.empty()) {
    const TripleSystem sys = load_system(cfg.system_path);
    std::vector<std::string> problems;
    for (const auto& v : validate_system(arr, sys, cfg.tol).violations) {
      problems.push_back("requirement " + std::to_string(v.requirement) + ": " + v.message);
    }
    report("system", problems);
  }
  const auto pairs = pairwise_zero_intersection(arr, cfg.tol);
  *sink << "note intersecting-pairs " << pairs.size() << '\n';
  return all ? kOk : kFailure;
}

}  // namespace detail

/// Parse argv, run one subcommand, map errors to exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dimension bounds for subspace arrangements with dependent triples", "sgdim"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto common = [&](CLI::App* sub, bool needs_input) {
    if (needs_input) sub->add_option("input", cfg.input, "Arrangement file")->required();
    sub->add_option("-o,--output", cfg.output, "Output path (default: standard output)");
    sub->add_option("--rank-tol", cfg.tol.rank_tol, "Relative singular value cut for ranks")
        ->check(CLI::PositiveNumber);
    sub->add_option("--residual-tol", cfg.tol.residual_tol, "Membership and orthonormality tolerance")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "Random seed");
  };
  auto sampling = [&](CLI::App* sub) {
    sub->add_option("--trials", cfg.trials, "Sampled admissible sets")->check(CLI::PositiveNumber);
    sub->add_option("--workers", cfg.workers, "Sampling threads")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("gen", "Generate an arrangement");
  common(gen, false);
  gen->add_option("--kind", cfg.kind, "grouped, grid or planted")->required()->check(
      CLI::IsMember({"grouped", "grid", "planted"}));
  gen->add_option("--k", cfg.k, "Space dimension");
  gen->add_option("--delta", cfg.delta, "Group fraction for grouped")->check(CLI::PositiveNumber);
  gen->add_option("--n", cfg.n, "Number of spaces");
  gen->add_option("--l", cfg.ambient, "Ambient dimension");
  gen->add_option("--triples", cfg.triples, "Planted dependent triples");
  gen->add_option("--field", cfg.field, "real or complex")->check(CLI::IsMember({"real", "complex"}));

  auto* triples = app.add_subcommand("triples", "List dependent triples and special spaces");
  common(triples, true);
  triples->add_option("--k", cfg.k, "Dimension bound k (default: largest space)");

  auto* system = app.add_subcommand("system", "Build the (6, delta)-system of the special spaces");
  common(system, true);
  system->add_option("--k", cfg.k, "Dimension bound k (default: largest space)");

  auto* scale = app.add_subcommand("scale", "Find M with sum p_i Proj_{M(V_i)} close to I");
  common(scale, true);
  sampling(scale);
  scale->add_option("--eps", cfg.eps, "Operator gap target")->check(CLI::PositiveNumber);
  scale->add_option("--max-iter", cfg.max_iter, "Optimizer iterations")->check(CLI::PositiveNumber);
  scale->add_option("--tcap", cfg.t_cap, "Divergence threshold on |t|")->check(CLI::PositiveNumber);

  auto* cert = app.add_subcommand("certify", "Certify a dimension bound and print the round trace");
  common(cert, true);
  sampling(cert);
  cert->add_option("--system", cfg.system_path, "System file (default: built from special spaces)");
  cert->add_option("--beta", cfg.beta, "Collapse budget fraction in (0, 1)")->check(CLI::Range(0.0, 1.0));
  cert->add_flag("--explore", cfg.explore, "Look for collapses before taking the entry bound");
  cert->add_option("--max-rounds", cfg.max_rounds, "Round budget (0: none)");
  cert->add_option("--max-seconds", cfg.max_seconds, "Wall-clock budget (0: none)");

  auto* reduce = app.add_subcommand("reduce", "Realify a complex arrangement");
  common(reduce, true);

  auto* verify = app.add_subcommand("verify", "Check the invariants of an arrangement file");
  common(verify, true);
  verify->add_option("--system", cfg.system_path, "Also validate this system file");
  verify->add_option("--trials", cfg.trials, "Sampled admissible sets (at most 64 are used)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return detail::cmd_gen(cfg, out);
    if (*triples) return detail::cmd_triples(cfg, out);
    if (*system) return detail::cmd_system(cfg, out);
    if (*scale) return detail::cmd_scale(cfg, out, err);
    if (*cert) return detail::cmd_certify(cfg, out, err);
    if (*reduce) return detail::cmd_reduce(cfg, out);
    if (*verify) return detail::cmd_verify(cfg, out);
  } catch (const UsageError& e) {
    err << "sgdim: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "sgdim: parse error: " << e.what() << '\n';
    return kUsage;
  } catch (const BudgetError& e) {
    err << "sgdim: budget exceeded: " << e.what() << '\n';
    return kBudget;
  } catch (const Error& e) {
    err << "sgdim: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace sgdim::cli
