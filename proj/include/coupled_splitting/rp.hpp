#pragma once

#include <coupled_splitting/errors.hpp>
#include <coupled_splitting/linalg.hpp>
#include <coupled_splitting/model.hpp>
#include <coupled_splitting/solver.hpp>
#include <coupled_splitting/spectral.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace coupled_splitting {

/**
 * Reproducible source of uniform block permutations. Draw number `counter`
 * depends only on (seed, counter): an mt19937_64 is seeded from a mix of the
 * two and drives a Fisher-Yates shuffle with rejection-sampled indices, so
 * the output does not depend on the standard library's distributions.
 */
struct PermutationSampler {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;
};

namespace rp_detail {

inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Uniform integer in [0, bound] by rejection.
inline std::uint64_t bounded(std::mt19937_64& eng, std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t range = bound + 1;
  if (range == 0) return eng();
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do v = eng();
  while (v >= limit);
  return v % range;
}

}  // namespace rp_detail

/// Uniform permutation of {0..n-1}; advances the counter.
inline std::vector<Index> sample_permutation(PermutationSampler& s, Index n) {
  if (n < 1) throw UsageError("sample_permutation: n must be at least 1");
  std::mt19937_64 eng(rp_detail::mix(s.seed ^ rp_detail::mix(s.counter)));
  ++s.counter;
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rp_detail::bounded(eng, static_cast<std::uint64_t>(i)));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

/// Seed of trial t of a multi-trial run.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t t) { return seed ^ t; }

/// One sweep of the configured variant in block order sigma (0-based).
inline IterateState rp_sweep(const ProblemInstance& inst, const SolverConfig& cfg, const IterateState& state,
                             std::span<const Index> sigma) {
  spectral_detail::check_permutation(sigma, inst.n());
  return solver_detail::run_steps(inst, cfg, cfg.variant, state, sigma);
}

enum class ExpectationMode { exact, sample_mean };

inline std::string_view to_string(ExpectationMode m) {
  return m == ExpectationMode::exact ? "exact" : "sample_mean";
}

struct ExpectationTrace {
  /// Ex[k], Emu[k] for k = 0..K.
  std::vector<Vector> Ex;
  std::vector<Vector> Emu;
  ExpectationMode mode = ExpectationMode::exact;
  long trials = 0;
  std::vector<std::uint64_t> seeds;
  /// Exact mode: last step moved z by at most tol.
  bool converged = false;
};

struct RpResult {
  std::vector<Trace> traces;
  ExpectationTrace expectation;
};

/**
 * Runs `trials` independent randomly permuted runs from (x0, mu0); trial t
 * draws its permutations from seed ^ t. The sample mean at step k averages
 * every trial's z^k, holding a trial at its last iterate once it stopped.
 */
inline RpResult run_rp_solver(const ProblemInstance& inst, SolverConfig cfg, const Vector& x0, const Vector& mu0,
                              std::uint64_t seed, long trials,
                              const std::optional<KKTPoint>& reference = std::nullopt) {
  if (trials < 1) throw UsageError("run_rp_solver: trials must be at least 1");
  cfg.record_iterates = true;
  RpResult out;
  out.expectation.mode = ExpectationMode::sample_mean;
  out.expectation.trials = trials;
  std::size_t longest = 0;
  for (long t = 0; t < trials; ++t) {
    const std::uint64_t s = trial_seed(seed, static_cast<std::uint64_t>(t));
    out.expectation.seeds.push_back(s);
    PermutationSampler sampler{s, 0};
    const Index n = inst.n();
    out.traces.push_back(
        solver_detail::drive(inst, cfg, x0, mu0, reference, [&] { return sample_permutation(sampler, n); }));
    longest = std::max(longest, out.traces.back().iterates.size());
  }
  const Index m = cfg.constrained() ? inst.m() : 0;
  auto& E = out.expectation;
  E.Ex.assign(longest, Vector::Zero(inst.d()));
  E.Emu.assign(longest, Vector::Zero(m));
  for (const auto& tr : out.traces)
    for (std::size_t k = 0; k < longest; ++k) {
      const IterateState& z = tr.iterates[std::min(k, tr.iterates.size() - 1)];
      E.Ex[k] += z.x;
      if (m > 0) E.Emu[k] += z.mu;
    }
  for (std::size_t k = 0; k < longest; ++k) {
    E.Ex[k] /= static_cast<double>(trials);
    E.Emu[k] /= static_cast<double>(trials);
  }
  return out;
}

/**
 * Exact expected iterates of randomly permuted ADMM on a quadratic instance
 * (all theta_i zero): E z^{k+1} = M E z^k + Qbar bbar. Stops after k_max
 * steps or once a step moves z by at most tol.
 */
inline ExpectationTrace run_expected_iteration(const ProblemInstance& inst, double beta, const Vector& z0,
                                               long k_max, double tol = 1e-10) {
  if (!inst.all_theta_zero()) throw UnsupportedError("run_expected_iteration: every theta_i must be zero");
  const SpectralReport rep = build_Q_M(inst, beta);
  const Index d = inst.d(), m = inst.m();
  if (z0.size() != d + m) throw UsageError("run_expected_iteration: z0 must have length d + m");
  const Vector c = rep.Qbar * rep.bbar;
  ExpectationTrace E;
  E.mode = ExpectationMode::exact;
  Vector z = z0;
  E.Ex.push_back(z.head(d));
  E.Emu.push_back(z.tail(m));
  for (long k = 0; k < k_max; ++k) {
    Vector next = rep.M * z + c;
    const double step = (next - z).norm();
    z = std::move(next);
    E.Ex.push_back(z.head(d));
    E.Emu.push_back(z.tail(m));
    if (!z.allFinite()) break;
    if (step <= tol) {
      E.converged = true;
      break;
    }
  }
  return E;
}

/// Residual of [H -A'; beta A 0] z = [-g; beta b] at z = (x, mu).
inline double expected_kkt_residual(const ProblemInstance& inst, double beta, const Vector& x, const Vector& mu) {
  Vector r(inst.d() + inst.m());
  r.head(inst.d()) = inst.H * x - inst.A.transpose() * mu + inst.g;
  r.tail(inst.m()) = beta * (inst.A * x - inst.b);
  return r.norm();
}

}  // namespace coupled_splitting
