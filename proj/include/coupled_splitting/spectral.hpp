#pragma once

#include <coupled_splitting/errors.hpp>
#include <coupled_splitting/linalg.hpp>
#include <coupled_splitting/model.hpp>
#include <coupled_splitting/solver.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace coupled_splitting {

/// Largest block count for which all n! permutations are enumerated.
inline constexpr Index kMaxEnumeratedBlocks = 8;

/// Band around 1 + 0i inside which an eigenvalue counts as equal to one.
inline constexpr double kUnitEigenBand = 1e-8;

/**
 * Matrices of one permuted sweep written as z <- M_sigma z + Lbar^{-1} bbar
 * with z = (x, mu). sigma is 0-based: sigma[p] is the block updated p-th.
 */
struct PermMatrices {
  Matrix L;     // d x d, block lower triangular in sweep order
  Matrix R;     // L - S
  Matrix Lbar;  // [L 0; beta A I]
  Matrix Rbar;  // [R A'; 0 I]
  Matrix M;     // Lbar^{-1} Rbar
  Vector bbar;  // [-g + beta A'b; beta b]
};

/// S = H + beta A'A.
inline Matrix coupled_curvature(const ProblemInstance& inst, double beta) {
  return inst.H + beta * inst.A.transpose() * inst.A;
}

namespace spectral_detail {

inline void check_permutation(std::span<const Index> sigma, Index n) {
  if (static_cast<Index>(sigma.size()) != n) throw UsageError("permutation has wrong length");
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Index p : sigma) {
    if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)]) throw UsageError("not a permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }
}

inline Matrix lower_in_order(const ProblemInstance& inst, const Matrix& S, std::span<const Index> sigma) {
  const Index n = inst.n();
  std::vector<Index> pos(static_cast<std::size_t>(n));
  for (Index p = 0; p < n; ++p) pos[static_cast<std::size_t>(sigma[static_cast<std::size_t>(p)])] = p;
  Matrix L = Matrix::Zero(S.rows(), S.cols());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (pos[static_cast<std::size_t>(i)] >= pos[static_cast<std::size_t>(j)]) {
        const Index oi = inst.blocks.offset(i), oj = inst.blocks.offset(j);
        const Index di = inst.blocks.dim(i), dj = inst.blocks.dim(j);
        L.block(oi, oj, di, dj) = S.block(oi, oj, di, dj);
      }
  return L;
}

inline void require_nonsingular_diagonal(const ProblemInstance& inst, const Matrix& S) {
  for (Index i = 0; i < inst.n(); ++i) {
    const Index o = inst.blocks.offset(i), di = inst.blocks.dim(i);
    const Matrix Sii = S.block(o, o, di, di);
    if (linalg::min_eigenvalue(Sii) <= 1e-12 * std::max(1.0, linalg::max_abs(Sii)))
      throw ConditionError("diagonal block " + std::to_string(i) +
                           " of H + beta A'A is singular; the permuted sweep matrix is not invertible");
  }
}

inline PermMatrices assemble(const ProblemInstance& inst, double beta, double dual_scale,
                             std::span<const Index> sigma) {
  const Index d = inst.d(), m = inst.m();
  const Matrix S = coupled_curvature(inst, beta);
  require_nonsingular_diagonal(inst, S);
  PermMatrices pm;
  pm.L = lower_in_order(inst, S, sigma);
  pm.R = pm.L - S;
  pm.Lbar = Matrix::Zero(d + m, d + m);
  pm.Lbar.topLeftCorner(d, d) = pm.L;
  pm.Lbar.bottomLeftCorner(m, d) = dual_scale * beta * inst.A;
  pm.Lbar.bottomRightCorner(m, m).setIdentity();
  pm.Rbar = Matrix::Zero(d + m, d + m);
  pm.Rbar.topLeftCorner(d, d) = pm.R;
  pm.Rbar.topRightCorner(d, m) = inst.A.transpose();
  pm.Rbar.bottomRightCorner(m, m).setIdentity();
  pm.M = pm.Lbar.partialPivLu().solve(pm.Rbar);
  pm.bbar.resize(d + m);
  pm.bbar.head(d) = -inst.g + beta * inst.A.transpose() * inst.b;
  pm.bbar.tail(m) = dual_scale * beta * inst.b;
  return pm;
}

}  // namespace spectral_detail

/// Permutation matrices of the randomly permuted sweep with order sigma (0-based).
inline PermMatrices build_perm_matrices(const ProblemInstance& inst, double beta, std::span<const Index> sigma) {
  spectral_detail::check_permutation(sigma, inst.n());
  return spectral_detail::assemble(inst, beta, 1.0, sigma);
}

/// Every permutation of {0..n-1} in lexicographic order.
inline std::vector<std::vector<Index>> all_permutations(Index n) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  std::vector<std::vector<Index>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

/// Verdicts keyed by the claim they certify; nullopt means not evaluated.
struct SpectralVerdicts {
  std::optional<bool> qs_spectrum;      // Q > 0 and eig(QS) in [0, 4/3)
  std::optional<bool> rank_identity;    // rank [S -A'; bA 0] = rank S + rank bA'A
  std::optional<bool> unit_circle;      // |lambda| < 1 or lambda = 1
  std::optional<bool> semisimple_one;   // algebraic = geometric multiplicity of 1
  std::optional<bool> bcd_rate_order;   // rho(M1) = rho(M2) <= rho(M3)

  bool operator==(const SpectralVerdicts&) const = default;
};

struct SpectralReport {
  Index d = 0, m = 0, n = 0;
  double beta = 1.0;
  Matrix S;
  Matrix Q;
  Matrix M;
  /// E[Lbar_sigma^{-1}]; drives the affine part of the expected iteration.
  Matrix Qbar;
  Vector bbar;
  /// max |M(closed form) - mean_sigma M_sigma|.
  double consistency_defect = 0.0;
  Vector eig_QS;
  ComplexVector eig_M;
  double rho_M = 0.0;
  Index rank_S = 0;
  Index rank_AtA = 0;
  Index rank_kkt = 0;
  Index am_one = 0;
  Index gm_one = 0;
  /// Eigenvalues of M within kUnitEigenBand of 1.
  Index am_one_counted = 0;
  SpectralVerdicts verdicts;
};

/**
 * Q = mean over all n! orders of L_sigma^{-1} and the expected update matrix
 *   M = [I - QS, QA'; -beta A + beta AQS, I - beta AQA'].
 * Also fills the ranks behind the multiplicity formulas.
 */
inline SpectralReport build_Q_M(const ProblemInstance& inst, double beta) {
  const Index n = inst.n(), d = inst.d(), m = inst.m();
  if (n > kMaxEnumeratedBlocks)
    throw UsageError("build_Q_M: " + std::to_string(n) + " blocks exceeds the enumeration limit of " +
                     std::to_string(kMaxEnumeratedBlocks));
  if (!(beta > 0.0)) throw UsageError("build_Q_M: beta must be positive");
  SpectralReport rep;
  rep.d = d;
  rep.m = m;
  rep.n = n;
  rep.beta = beta;
  rep.S = coupled_curvature(inst, beta);
  spectral_detail::require_nonsingular_diagonal(inst, rep.S);

  Matrix Qsum = Matrix::Zero(d, d);
  Matrix Msum = Matrix::Zero(d + m, d + m);
  const auto perms = all_permutations(n);
  for (const auto& sigma : perms) {
    const PermMatrices pm = spectral_detail::assemble(inst, beta, 1.0, sigma);
    Qsum += pm.L.partialPivLu().inverse();
    Msum += pm.M;
  }
  const double count = static_cast<double>(perms.size());
  rep.Q = Qsum / count;
  const Matrix& Q = rep.Q;
  const Matrix& S = rep.S;
  const Matrix& A = inst.A;
  rep.M.resize(d + m, d + m);
  rep.M.topLeftCorner(d, d) = Matrix::Identity(d, d) - Q * S;
  rep.M.topRightCorner(d, m) = Q * A.transpose();
  rep.M.bottomLeftCorner(m, d) = -beta * A + beta * A * Q * S;
  rep.M.bottomRightCorner(m, m) = Matrix::Identity(m, m) - beta * A * Q * A.transpose();
  rep.consistency_defect = linalg::max_abs(rep.M - Msum / count);

  rep.Qbar = Matrix::Zero(d + m, d + m);
  rep.Qbar.topLeftCorner(d, d) = Q;
  rep.Qbar.bottomLeftCorner(m, d) = -beta * A * Q;
  rep.Qbar.bottomRightCorner(m, m).setIdentity();
  rep.bbar.resize(d + m);
  rep.bbar.head(d) = -inst.g + beta * A.transpose() * inst.b;
  rep.bbar.tail(m) = beta * inst.b;

  Matrix kkt = Matrix::Zero(d + m, d + m);
  kkt.topLeftCorner(d, d) = S;
  kkt.topRightCorner(d, m) = -A.transpose();
  kkt.bottomLeftCorner(m, d) = beta * A;
  rep.rank_S = linalg::numeric_rank(S);
  rep.rank_AtA = linalg::numeric_rank(beta * A.transpose() * A);
  rep.rank_kkt = linalg::numeric_rank(kkt);
  rep.am_one = m + d - rep.rank_AtA - rep.rank_S;
  rep.gm_one = m + d - rep.rank_kkt;
  return rep;
}

/**
 * Q positive definite and every eigenvalue of QS in [-1e-10, 4/3 - 1e-12].
 * QS is similar to Q^{1/2} S Q^{1/2}, whose symmetric eigensolve is used.
 */
inline bool check_eig_QS(SpectralReport& rep) {
  const Matrix Qs = 0.5 * (rep.Q + rep.Q.transpose());
  const double qmin = linalg::min_eigenvalue(Qs);
  const bool q_pd = qmin > 1e-14 * std::max(1.0, linalg::max_abs(Qs));
  if (q_pd) {
    const Matrix root = linalg::sym_sqrt(Qs);
    rep.eig_QS = linalg::sym_eigenvalues(root * rep.S * root);
  } else {
    const ComplexVector ev = linalg::eigenvalues(rep.Q * rep.S);
    rep.eig_QS = ev.real();
    std::sort(rep.eig_QS.data(), rep.eig_QS.data() + rep.eig_QS.size());
  }
  bool ok = q_pd;
  for (Index i = 0; i < rep.eig_QS.size(); ++i)
    ok = ok && rep.eig_QS(i) >= -1e-10 && rep.eig_QS(i) < 4.0 / 3.0 - 1e-12;
  rep.verdicts.qs_spectrum = ok;
  return ok;
}

struct MSpectrumVerdict {
  bool unit_circle = false;
  bool semisimple_one = false;
};

/**
 * Eigenvalues of M either strictly inside the unit disk (|lambda| < 1 - 1e-8)
 * or within 1e-8 of 1; anything in between fails. The eigenvalue 1 is
 * semisimple when the rank formulas give equal algebraic and geometric
 * multiplicity and the count of computed eigenvalues near 1 matches them.
 */
inline MSpectrumVerdict check_M_spectrum(SpectralReport& rep) {
  rep.eig_M = linalg::eigenvalues(rep.M);
  rep.rho_M = 0.0;
  MSpectrumVerdict v;
  v.unit_circle = true;
  rep.am_one_counted = 0;
  for (Index i = 0; i < rep.eig_M.size(); ++i) {
    const std::complex<double> lam = rep.eig_M(i);
    const double mod = std::abs(lam);
    rep.rho_M = std::max(rep.rho_M, mod);
    const bool is_one = std::abs(lam - 1.0) < kUnitEigenBand;
    if (is_one) ++rep.am_one_counted;
    if (mod > 1.0 + 1e-10) v.unit_circle = false;
    if (mod >= 1.0 - kUnitEigenBand && !is_one) v.unit_circle = false;
  }
  v.semisimple_one = rep.am_one == rep.gm_one && rep.am_one_counted == rep.am_one;
  rep.verdicts.unit_circle = v.unit_circle;
  rep.verdicts.semisimple_one = v.semisimple_one;
  return v;
}

struct RankIdentity {
  Index lhs = 0;       // rank [S -A'; beta A 0]
  Index rank_S = 0;
  Index rank_AtA = 0;  // rank beta A'A
  bool holds = false;
};

inline RankIdentity rank_identity_check(const ProblemInstance& inst, double beta) {
  const Index d = inst.d(), m = inst.m();
  const Matrix S = coupled_curvature(inst, beta);
  Matrix kkt = Matrix::Zero(d + m, d + m);
  kkt.topLeftCorner(d, d) = S;
  kkt.topRightCorner(d, m) = -inst.A.transpose();
  kkt.bottomLeftCorner(m, d) = beta * inst.A;
  RankIdentity r;
  r.lhs = linalg::numeric_rank(kkt);
  r.rank_S = linalg::numeric_rank(S);
  r.rank_AtA = linalg::numeric_rank(beta * inst.A.transpose() * inst.A);
  r.holds = r.lhs == r.rank_S + r.rank_AtA;
  return r;
}

/// Spectral report with every applicable verdict evaluated.
inline SpectralReport analyze(const ProblemInstance& inst, double beta);

struct BcdRates {
  Matrix M1, M2, M3;
  double rho1 = 0.0, rho2 = 0.0, rho3 = 0.0;
  /// lambda_max(G'G) for G = H11^{-1/2} H12 H22^{-1/2}.
  double sigma1 = 0.0;
  /// (sigma1 + sqrt(sigma1)) / 2.
  double rho3_closed_form = 0.0;
  /// H11 = I and H22 = I already.
  bool normalized = false;
};

/**
 * Gauss-Seidel iteration matrices of 2-block BCD on 1/2 x'Hx in both orders
 * and their average (the expected matrix of the randomly permuted order).
 */
inline BcdRates bcd_rate_matrices(const Matrix& H, Index d1) {
  const Index d = H.rows();
  if (H.cols() != d || d1 <= 0 || d1 >= d) throw UsageError("bcd_rate_matrices: invalid split");
  const Index d2 = d - d1;
  const Matrix H11 = H.topLeftCorner(d1, d1), H22 = H.bottomRightCorner(d2, d2);
  const Matrix H12 = H.topRightCorner(d1, d2);
  auto pd = [](const Matrix& m) { return linalg::min_eigenvalue(m) > 1e-12 * std::max(1.0, linalg::max_abs(m)); };
  if (!pd(H11) || !pd(H22)) throw ConditionError("bcd_rate_matrices: diagonal blocks must be positive definite");

  BcdRates out;
  Matrix lower = Matrix::Zero(d, d), upper = Matrix::Zero(d, d);
  lower.topLeftCorner(d1, d1) = H11;
  lower.bottomLeftCorner(d2, d1) = H12.transpose();
  lower.bottomRightCorner(d2, d2) = H22;
  upper.topLeftCorner(d1, d1) = H11;
  upper.topRightCorner(d1, d2) = H12;
  upper.bottomRightCorner(d2, d2) = H22;
  Matrix N1 = Matrix::Zero(d, d), N2 = Matrix::Zero(d, d);
  N1.topRightCorner(d1, d2) = -H12;
  N2.bottomLeftCorner(d2, d1) = -H12.transpose();
  out.M1 = lower.partialPivLu().solve(N1);
  out.M2 = upper.partialPivLu().solve(N2);
  out.M3 = 0.5 * (out.M1 + out.M2);
  out.rho1 = linalg::spectral_radius(out.M1);
  out.rho2 = linalg::spectral_radius(out.M2);
  out.rho3 = linalg::spectral_radius(out.M3);

  auto inv_sqrt = [](const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    return Matrix(es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                  es.eigenvectors().transpose());
  };
  const Matrix G = inv_sqrt(H11) * H12 * inv_sqrt(H22);
  out.sigma1 = std::max(0.0, linalg::max_eigenvalue(G.transpose() * G));
  out.rho3_closed_form = 0.5 * (out.sigma1 + std::sqrt(out.sigma1));
  out.normalized = linalg::max_abs(H11 - Matrix::Identity(d1, d1)) == 0.0 &&
                   linalg::max_abs(H22 - Matrix::Identity(d2, d2)) == 0.0;
  return out;
}

/// rho(M1) = rho(M2) within 1e-10 and rho(M3) >= rho(M1) - 1e-10.
inline bool bcd_rate_order_holds(const BcdRates& r) {
  return std::abs(r.rho1 - r.rho2) <= 1e-10 && r.rho3 >= r.rho1 - 1e-10;
}

inline SpectralReport analyze(const ProblemInstance& inst, double beta) {
  SpectralReport rep = build_Q_M(inst, beta);
  check_eig_QS(rep);
  check_M_spectrum(rep);
  rep.verdicts.rank_identity = rep.rank_kkt == rep.rank_S + rep.rank_AtA;
  if (inst.n() == 2) {
    try {
      rep.verdicts.bcd_rate_order = bcd_rate_order_holds(bcd_rate_matrices(inst.H, inst.blocks.dim(0)));
    } catch (const ConditionError&) {
      // Diagonal blocks of H are singular: the rate comparison does not apply.
    }
  }
  return rep;
}

struct CyclicUpdate {
  Matrix M;
  double rho = 0.0;
};

/// Update matrix of cyclic n-block ADMM (order 1..n) with dual stepsize gamma * beta.
inline CyclicUpdate cyclic_update_matrix(const ProblemInstance& inst, double beta, double gamma = 1.0) {
  if (!inst.all_theta_zero()) throw UnsupportedError("cyclic_update_matrix: needs all theta_i zero");
  std::vector<Index> order(static_cast<std::size_t>(inst.n()));
  std::iota(order.begin(), order.end(), Index{0});
  CyclicUpdate out;
  out.M = spectral_detail::assemble(inst, beta, gamma, order).M;
  out.rho = linalg::spectral_radius(out.M);
  return out;
}

struct WitnessCertificate {
  double H_ybar = 0.0;         // ||H ybar||
  double A_ybar = 0.0;         // max_i ||A_i ybar_i||
  double R_ybar = 0.0;         // max_i ||R_i ybar_i||
  double H12_ybar2 = 0.0;      // ||H12 ybar_2||
  double H12t_ybar1 = 0.0;     // ||H12' ybar_1||
  bool valid = false;
};

struct DivergenceWitness {
  Vector ybar;
  WitnessCertificate certificate;
};

/// Checks H ybar = 0, A_i ybar_i = 0, R_i ybar_i = 0 and the off-diagonal identities to 1e-10.
inline WitnessCertificate certify_witness(const ProblemInstance& inst, const std::vector<Matrix>& R,
                                          const Vector& ybar, double tol = 1e-10) {
  if (inst.n() != 2) throw UsageError("certify_witness: instance must have two blocks");
  WitnessCertificate c;
  const double hs = std::max(1.0, linalg::max_abs(inst.H));
  const double as = std::max(1.0, linalg::max_abs(inst.A));
  c.H_ybar = (inst.H * ybar).norm();
  for (Index i = 0; i < 2; ++i) {
    const Vector yi = inst.x_block(ybar, i);
    if (inst.m() > 0) c.A_ybar = std::max(c.A_ybar, (inst.A_block(i) * yi).norm());
    if (!R.empty()) c.R_ybar = std::max(c.R_ybar, (R[static_cast<std::size_t>(i)] * yi).norm());
  }
  const Matrix H12 = inst.H_block(0, 1);
  c.H12_ybar2 = (H12 * inst.x_block(ybar, 1)).norm();
  c.H12t_ybar1 = (H12.transpose() * inst.x_block(ybar, 0)).norm();
  double rs = 1.0;
  for (const auto& Ri : R) rs = std::max(rs, linalg::max_abs(Ri));
  c.valid = c.H_ybar <= tol * hs && c.A_ybar <= tol * as && c.R_ybar <= tol * rs && c.H12_ybar2 <= tol * hs &&
            c.H12t_ybar1 <= tol * hs;
  return c;
}

/**
 * Unit null vector of blockdiag(H_ii + beta A_i'A_i + R_i) with its
 * certificate, or nullopt when that matrix is positive definite.
 */
inline std::optional<DivergenceWitness> divergence_witness(const ProblemInstance& inst, double beta,
                                                           const std::vector<Matrix>& R, double tol = 1e-10) {
  if (inst.n() != 2) throw UsageError("divergence_witness: instance must have two blocks");
  Index best = -1;
  double best_eig = 0.0;
  Vector best_vec;
  for (Index i = 0; i < 2; ++i) {
    Matrix Ki = solver_detail::block_curvature(inst, i, beta);
    if (!R.empty()) Ki += R[static_cast<std::size_t>(i)];
    const double lmin = linalg::min_eigenvalue(Ki);
    if (lmin <= tol * std::max(1.0, linalg::max_abs(Ki)) && (best < 0 || lmin < best_eig)) {
      best = i;
      best_eig = lmin;
      best_vec = linalg::min_eigenvector(Ki);
    }
  }
  if (best < 0) return std::nullopt;
  DivergenceWitness w;
  w.ybar = Vector::Zero(inst.d());
  w.ybar.segment(inst.blocks.offset(best), inst.blocks.dim(best)) = best_vec;
  w.certificate = certify_witness(inst, R, w.ybar);
  return w;
}

struct OscillationResult {
  Trace baseline;
  Trace perturbed;
  /// Largest relative subproblem optimality residual over all perturbed steps.
  double max_optimality_residual = 0.0;
  /// Smallest ||x^{k+1} - x^k|| of the perturbed trace over its second half.
  double min_late_gap = 0.0;
  bool legitimate = false;
  bool non_convergent = false;
};

/**
 * Runs 2-block proximal ADMM twice from (x0, mu0) with minimum-norm
 * subproblem solutions: unperturbed, and with ybar added to the primal
 * iterate after every even-numbered sweep. Each perturbed sweep is rechecked
 * against the subproblem optimality conditions.
 */
inline OscillationResult oscillation_demo(const ProblemInstance& inst, const SolverConfig& cfg, const Vector& ybar,
                                          long k_max, const Vector& x0, const Vector& mu0) {
  if (inst.n() != 2) throw UsageError("oscillation_demo: instance must have two blocks");
  if (!inst.all_theta_linear()) throw UnsupportedError("oscillation_demo: needs zero or quadratic terms");
  if (ybar.size() != inst.d()) throw UsageError("oscillation_demo: ybar has wrong length");
  const auto R = effective_R(inst, cfg);
  const bool trivial = ybar.norm() == 0.0;
  if (!trivial && !certify_witness(inst, R, ybar).valid)
    throw ConditionError("oscillation_demo: ybar fails the witness certificate");

  const BlockSweeper sweeper(inst, cfg.beta, R, BlockSweeper::Rule::exact, {}, true);
  const std::vector<Index> order{0, 1};
  const double dual_step = cfg.gamma * cfg.beta;
  OscillationResult out;

  auto run = [&](bool perturb, double* max_opt) {
    Trace t;
    IterateState s = IterateState::start(x0, mu0);
    t.iterates.push_back(s);
    for (long k = 1; k <= k_max; ++k) {
      const IterateState prev = s;
      sweeper.sweep(s, order, dual_step);
      if (perturb && k % 2 == 0) {
        s.x += ybar;
        if (inst.m() > 0) s.mu -= dual_step * (inst.A * ybar);
      }
      if (max_opt) {
        Vector mixed = prev.x;
        for (Index i : order) {
          inst.x_block(mixed, i) = inst.x_block(s.x, i);
          *max_opt = std::max(*max_opt, sweeper.optimality_residual(mixed, prev.x, prev.mu, i));
        }
      }
      TraceRecord rec;
      rec.k = s.k;
      const auto res = kkt_residual(inst, {s.x, s.mu});
      rec.r_dual = res.r_dual;
      rec.r_feas = res.r_feas;
      rec.objective = inst.objective(s.x);
      t.records.push_back(std::move(rec));
      t.iterates.push_back(s);
    }
    t.final_state = s;
    return t;
  };

  out.baseline = run(false, nullptr);
  out.perturbed = run(true, &out.max_optimality_residual);
  out.min_late_gap = std::numeric_limits<double>::infinity();
  const auto& its = out.perturbed.iterates;
  for (std::size_t k = its.size() / 2; k + 1 < its.size(); ++k)
    out.min_late_gap = std::min(out.min_late_gap, (its[k + 1].x - its[k].x).norm());
  if (its.size() < 2) out.min_late_gap = 0.0;
  out.legitimate = out.max_optimality_residual <= 1e-10;
  out.non_convergent = !trivial && out.min_late_gap >= 0.5 * ybar.norm();
  out.baseline.status = TraceStatus::max_iter;
  out.perturbed.status = TraceStatus::max_iter;
  return out;
}

}  // namespace coupled_splitting
