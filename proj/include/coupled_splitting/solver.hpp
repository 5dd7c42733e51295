#pragma once

#include <coupled_splitting/errors.hpp>
#include <coupled_splitting/linalg.hpp>
#include <coupled_splitting/model.hpp>
#include <coupled_splitting/prox.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coupled_splitting {

enum class Variant { admm2, admm2_linearized, admm_cyclic_n, bcd, bcpg };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::admm2: return "admm2";
    case Variant::admm2_linearized: return "admm2_linearized";
    case Variant::admm_cyclic_n: return "admm_cyclic_n";
    case Variant::bcd: return "bcd";
    case Variant::bcpg: return "bcpg";
  }
  return "?";
}

inline Variant variant_from_string(std::string_view s) {
  if (s == "admm2") return Variant::admm2;
  if (s == "admm2_linearized") return Variant::admm2_linearized;
  if (s == "admm_cyclic_n") return Variant::admm_cyclic_n;
  if (s == "bcd") return Variant::bcd;
  if (s == "bcpg") return Variant::bcpg;
  throw UsageError("unknown variant '" + std::string(s) + "'");
}

/// Upper end of the admissible dual stepsize interval, (1 + sqrt 5) / 2.
inline constexpr double kGoldenRatio = 1.6180339887498948482;

struct SolverConfig {
  Variant variant = Variant::admm2;
  double beta = 1.0;
  double gamma = 1.0;
  /// Proximal matrices R_i; empty means all zero.
  std::vector<Matrix> R;
  /// Linearization scalars r_i for the linearized variants; empty means
  /// lambda_max of the block curvature.
  std::vector<double> r;
  double tol = 1e-8;
  long max_iter = 100000;
  double divergence_bound = 1e12;
  /// Keep every iterate in the trace.
  bool record_iterates = false;

  bool constrained() const { return variant != Variant::bcd && variant != Variant::bcpg; }
  bool linearized() const { return variant == Variant::admm2_linearized || variant == Variant::bcpg; }
};

struct IterateState {
  Vector x;
  Vector x_prev;
  Vector mu;
  long k = 0;

  static IterateState start(Vector x0, Vector mu0) {
    IterateState s;
    s.x_prev = x0;
    s.x = std::move(x0);
    s.mu = std::move(mu0);
    return s;
  }
};

struct TraceRecord {
  long k = 0;
  std::vector<double> r_dual;
  double r_feas = 0.0;
  /// Norm of the surrogate residual triple; NaN at k = 0.
  double surrogate = std::numeric_limits<double>::quiet_NaN();
  double objective = std::numeric_limits<double>::quiet_NaN();
  /// NaN when no reference point was supplied.
  double lyapunov = std::numeric_limits<double>::quiet_NaN();

  double max_residual() const {
    double v = r_feas;
    for (double r : r_dual) v = std::max(v, r);
    return v;
  }
  double sum_sq_residual() const {
    double v = r_feas * r_feas;
    for (double r : r_dual) v += r * r;
    return v;
  }
};

enum class TraceStatus { converged, max_iter, diverged };

inline std::string_view to_string(TraceStatus s) {
  switch (s) {
    case TraceStatus::converged: return "converged";
    case TraceStatus::max_iter: return "max_iter";
    case TraceStatus::diverged: return "diverged";
  }
  return "?";
}

struct Trace {
  std::vector<TraceRecord> records;
  TraceStatus status = TraceStatus::max_iter;
  /// r_dual holds exact subdifferential distances (false: surrogate norms).
  bool exact_residuals = true;
  std::vector<std::string> warnings;
  IterateState final_state;
  /// Filled when SolverConfig::record_iterates is set; iterates[k] is z^k.
  std::vector<IterateState> iterates;
};

/// Copy of the instance with the linear constraints removed (m = 0).
inline ProblemInstance strip_constraints(const ProblemInstance& inst) {
  ProblemInstance out = inst;
  out.blocks = BlockStructure(inst.blocks.dims(), 0);
  out.A = Matrix::Zero(0, inst.d());
  out.b = Vector();
  return out;
}

/**
 * Linearization scalars and the proximal matrices that make the linearized
 * scheme an instance of the proximal one: r_i = lambda_max(C_i),
 * R_i = r_i I - C_i with C_i = H_ii + beta A_i'A_i (admm) or H_ii (bcd).
 */
inline std::vector<std::pair<double, Matrix>> linearization_proximal(const ProblemInstance& inst, double beta,
                                                                     bool bcd_mode = false) {
  std::vector<std::pair<double, Matrix>> out;
  for (Index i = 0; i < inst.n(); ++i) {
    Matrix C = inst.H_block(i, i);
    if (!bcd_mode && inst.m() > 0) {
      const Matrix Ai = inst.A_block(i);
      C += beta * Ai.transpose() * Ai;
    }
    const double r = linalg::max_eigenvalue(C);
    out.emplace_back(r, r * Matrix::Identity(C.rows(), C.cols()) - C);
  }
  return out;
}

namespace solver_detail {

inline double effective_beta(const SolverConfig& cfg) { return cfg.constrained() ? cfg.beta : 0.0; }

inline std::vector<double> resolve_r(const ProblemInstance& inst, const SolverConfig& cfg) {
  if (!cfg.r.empty()) {
    if (static_cast<Index>(cfg.r.size()) != inst.n()) throw UsageError("SolverConfig: need one r_i per block");
    return cfg.r;
  }
  std::vector<double> r;
  for (auto& [ri, Ri] : linearization_proximal(inst, cfg.beta, !cfg.constrained())) r.push_back(ri);
  return r;
}

/// Curvature of block i in the augmented Lagrangian: H_ii + beta A_i'A_i.
inline Matrix block_curvature(const ProblemInstance& inst, Index i, double beta) {
  Matrix C = inst.H_block(i, i);
  if (beta != 0.0 && inst.m() > 0) {
    const Matrix Ai = inst.A_block(i);
    C += beta * Ai.transpose() * Ai;
  }
  return C;
}

}  // namespace solver_detail

/**
 * Proximal matrices the configured variant effectively uses: the declared
 * R_i for the proximal variants, r_i I - C_i for the linearized ones.
 */
inline std::vector<Matrix> effective_R(const ProblemInstance& inst, const SolverConfig& cfg) {
  std::vector<Matrix> R;
  const double beta = solver_detail::effective_beta(cfg);
  if (cfg.linearized()) {
    const auto r = solver_detail::resolve_r(inst, cfg);
    for (Index i = 0; i < inst.n(); ++i) {
      const Matrix C = solver_detail::block_curvature(inst, i, beta);
      R.push_back(r[static_cast<std::size_t>(i)] * Matrix::Identity(C.rows(), C.cols()) - C);
    }
    return R;
  }
  if (cfg.R.empty()) {
    for (Index i = 0; i < inst.n(); ++i) R.push_back(Matrix::Zero(inst.blocks.dim(i), inst.blocks.dim(i)));
    return R;
  }
  if (static_cast<Index>(cfg.R.size()) != inst.n()) throw UsageError("SolverConfig: need one R_i per block");
  return cfg.R;
}

/// Throws UsageError when beta, gamma or any R_i breaks its invariant.
inline void validate_config(const ProblemInstance& inst, const SolverConfig& cfg) {
  if (cfg.constrained() && !(cfg.beta > 0.0)) throw UsageError("SolverConfig: beta must be positive");
  if (!(cfg.gamma > 0.0 && cfg.gamma < kGoldenRatio))
    throw UsageError("SolverConfig: gamma must lie in (0, (1+sqrt5)/2)");
  if (!(cfg.tol >= 0.0)) throw UsageError("SolverConfig: tol must be nonnegative");
  if (cfg.max_iter < 0) throw UsageError("SolverConfig: max_iter must be nonnegative");
  if (!cfg.R.empty()) {
    if (static_cast<Index>(cfg.R.size()) != inst.n()) throw UsageError("SolverConfig: need one R_i per block");
    for (Index i = 0; i < inst.n(); ++i) {
      const Matrix& Ri = cfg.R[static_cast<std::size_t>(i)];
      const Index di = inst.blocks.dim(i);
      if (Ri.rows() != di || Ri.cols() != di) throw UsageError("SolverConfig: R_i has wrong shape");
      const double s = std::max(1.0, linalg::max_abs(Ri));
      if (linalg::max_abs(Ri - Ri.transpose()) > 1e-12 * s) throw UsageError("SolverConfig: R_i not symmetric");
      if (linalg::min_eigenvalue(Ri) < -1e-10 * s) throw UsageError("SolverConfig: R_i not positive semidefinite");
    }
  }
  if (!cfg.r.empty()) {
    if (static_cast<Index>(cfg.r.size()) != inst.n()) throw UsageError("SolverConfig: need one r_i per block");
    for (double ri : cfg.r)
      if (!(ri > 0.0)) throw UsageError("SolverConfig: r_i must be positive");
  }
}

/**
 * One Gauss-Seidel sweep engine shared by every deterministic and permuted
 * variant. Factorizations of the block subproblems are computed once.
 *
 * Exact rule: block i minimizes theta_i + 1/2 x'(C_i + R_i)x + lin'x, with a
 * Cholesky solve for zero/quadratic terms and a prox when C_i + R_i = c I.
 * Linearized rule: prox of theta_i at the gradient half-point with scalar r_i.
 * With allow_singular the linear solves return the minimum-norm minimizer.
 */
class BlockSweeper {
 public:
  enum class Rule { exact, linearized };

  BlockSweeper(const ProblemInstance& inst, double beta, std::vector<Matrix> R, Rule rule,
               std::vector<double> r = {}, bool allow_singular = false)
      : inst_(inst), beta_(beta), R_(std::move(R)), rule_(rule), r_(std::move(r)), allow_singular_(allow_singular) {
    const Index n = inst.n();
    blocks_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      auto& bk = blocks_[static_cast<std::size_t>(i)];
      const auto& t = inst.theta[static_cast<std::size_t>(i)];
      bk.C = solver_detail::block_curvature(inst, i, beta_);
      if (rule_ == Rule::linearized) continue;
      bk.K = bk.C + R_[static_cast<std::size_t>(i)];
      if (t.is_linear_kind()) {
        Matrix Kq = bk.K;
        if (t.kind == ProxKind::quadratic) Kq += t.P;
        const double scale = std::max(1.0, linalg::max_abs(Kq));
        const double lmin = linalg::min_eigenvalue(Kq);
        if (lmin <= 1e-12 * scale) {
          if (!allow_singular_)
            throw ConditionError("block " + std::to_string(i) +
                                 " subproblem matrix is singular; the subproblem has no unique minimizer");
          bk.singular = true;
          bk.cod.compute(Kq);
          bk.cod.setThreshold(1e-12);
        } else {
          bk.llt.compute(Kq);
        }
        bk.Kq = std::move(Kq);
      } else {
        double c = 0.0;
        if (!linalg::is_scaled_identity(bk.K, c) || !(c > 0.0))
          throw UnsupportedError("block " + std::to_string(i) + " has a " + std::string(to_string(t.kind)) +
                                 " term and a non-identity subproblem quadratic; use the linearized variant");
        bk.scale = c;
      }
    }
  }

  /// Updates x in `order`, then mu <- mu - dual_step * (Ax - b) when dual_step > 0.
  void sweep(IterateState& s, std::span<const Index> order, double dual_step) const {
    s.x_prev = s.x;
    for (Index i : order) update_block(s.x, s.x_prev, s.mu, i);
    if (dual_step > 0.0 && inst_.m() > 0) s.mu -= dual_step * (inst_.A * s.x - inst_.b);
    ++s.k;
  }

  /// Linear term of block i's subproblem at the current mixed iterate, i.e.
  /// the gradient of the smooth part with block i's own contribution removed.
  Vector linear_term(const Vector& x, const Vector& x_old, const Vector& mu, Index i) const {
    const Index o = inst_.blocks.offset(i), di = inst_.blocks.dim(i);
    Vector xw = x;
    xw.segment(o, di).setZero();
    Vector lin = inst_.H.middleRows(o, di) * xw + inst_.g.segment(o, di);
    if (inst_.m() > 0 && beta_ != 0.0) {
      const Matrix Ai = inst_.A_block(i);
      lin += beta_ * Ai.transpose() * (inst_.A * xw - inst_.b);
    }
    if (inst_.m() > 0) lin -= inst_.A_block(i).transpose() * mu;
    if (rule_ == Rule::exact) lin -= R_[static_cast<std::size_t>(i)] * x_old.segment(o, di);
    return lin;
  }

  /// Residual of the block-i optimality condition for a linear-kind term.
  double optimality_residual(const Vector& x, const Vector& x_old, const Vector& mu, Index i) const {
    const auto& bk = blocks_[static_cast<std::size_t>(i)];
    const auto& t = inst_.theta[static_cast<std::size_t>(i)];
    Vector rhs = -linear_term(x, x_old, mu, i);
    if (t.kind == ProxKind::quadratic) rhs -= t.q;
    const Vector xi = inst_.x_block(x, i);
    const Vector res = bk.Kq * xi - rhs;
    return res.norm() / (1.0 + rhs.norm() + linalg::max_abs(bk.Kq) * xi.norm());
  }

  const Matrix& curvature(Index i) const { return blocks_[static_cast<std::size_t>(i)].C; }
  double beta() const { return beta_; }

 private:
  struct BlockCache {
    Matrix C, K, Kq;
    Eigen::LLT<Matrix> llt;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    bool singular = false;
    double scale = 0.0;
  };

  void update_block(Vector& x, const Vector& x_old, const Vector& mu, Index i) const {
    const Index o = inst_.blocks.offset(i), di = inst_.blocks.dim(i);
    const auto& t = inst_.theta[static_cast<std::size_t>(i)];
    const auto& bk = blocks_[static_cast<std::size_t>(i)];
    if (rule_ == Rule::linearized) {
      // x_half = [(r I - C_i) x_i - beta A_i'(A_{-i} x_{-i} - b) - H_{i,-i} x_{-i} - g_i + A_i' mu] / r
      const double ri = r_[static_cast<std::size_t>(i)];
      const Vector xi = x.segment(o, di);
      const Vector lin = linear_term(x, x_old, mu, i);
      const Vector half = (ri * xi - bk.C * xi - lin) / ri;
      x.segment(o, di) = prox_eval(t, ri, half);
      return;
    }
    Vector rhs = -linear_term(x, x_old, mu, i);
    if (t.is_linear_kind()) {
      if (t.kind == ProxKind::quadratic) rhs -= t.q;
      x.segment(o, di) = bk.singular ? Vector(bk.cod.solve(rhs)) : Vector(bk.llt.solve(rhs));
    } else {
      x.segment(o, di) = prox_eval(t, bk.scale, rhs / bk.scale);
    }
  }

  const ProblemInstance& inst_;
  double beta_;
  std::vector<Matrix> R_;
  Rule rule_;
  std::vector<double> r_;
  bool allow_singular_;
  std::vector<BlockCache> blocks_;
};

namespace solver_detail {

inline std::vector<Index> identity_order(Index n) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  return order;
}

/// The instance a variant actually iterates on (constraints dropped for BCD).
inline ProblemInstance working_instance(const ProblemInstance& inst, const SolverConfig& cfg) {
  return cfg.constrained() ? inst : strip_constraints(inst);
}

inline BlockSweeper make_sweeper(const ProblemInstance& work, const SolverConfig& cfg, bool allow_singular = false) {
  const double beta = effective_beta(cfg);
  if (cfg.linearized())
    return BlockSweeper(work, beta, {}, BlockSweeper::Rule::linearized, resolve_r(work, cfg));
  return BlockSweeper(work, beta, effective_R(work, cfg), BlockSweeper::Rule::exact, {}, allow_singular);
}

inline IterateState run_steps(const ProblemInstance& inst, SolverConfig cfg, Variant v, const IterateState& state,
                              std::span<const Index> order) {
  cfg.variant = v;
  const ProblemInstance work = working_instance(inst, cfg);
  const BlockSweeper sw = make_sweeper(work, cfg);
  IterateState next = state;
  sw.sweep(next, order, cfg.constrained() ? cfg.gamma * cfg.beta : 0.0);
  return next;
}

}  // namespace solver_detail

/// One iteration of 2-block proximal ADMM with dual stepsize gamma * beta.
inline IterateState admm2_step(const ProblemInstance& inst, const SolverConfig& cfg, const IterateState& state) {
  if (inst.n() != 2) throw UsageError("admm2_step: instance must have two blocks");
  const auto order = solver_detail::identity_order(2);
  return solver_detail::run_steps(inst, cfg, Variant::admm2, state, order);
}

/// One iteration of linearized 2-block ADMM (prox of theta_i at a gradient half-point).
inline IterateState admm2_linearized_step(const ProblemInstance& inst, const SolverConfig& cfg,
                                          const IterateState& state) {
  if (inst.n() != 2) throw UsageError("admm2_linearized_step: instance must have two blocks");
  const auto order = solver_detail::identity_order(2);
  return solver_detail::run_steps(inst, cfg, Variant::admm2_linearized, state, order);
}

/// One Gauss-Seidel sweep over blocks 0..n-1 followed by the multiplier update.
inline IterateState admm_cyclic_n_step(const ProblemInstance& inst, const SolverConfig& cfg,
                                       const IterateState& state) {
  const auto order = solver_detail::identity_order(inst.n());
  return solver_detail::run_steps(inst, cfg, Variant::admm_cyclic_n, state, order);
}

/// One cyclic proximal BCD sweep; constraints are ignored.
inline IterateState bcd_step(const ProblemInstance& inst, const SolverConfig& cfg, const IterateState& state) {
  const auto order = solver_detail::identity_order(inst.n());
  return solver_detail::run_steps(inst, cfg, Variant::bcd, state, order);
}

/// One block proximal gradient sweep with r_i = lambda_max(H_ii) unless overridden.
inline IterateState bcpg_step(const ProblemInstance& inst, const SolverConfig& cfg, const IterateState& state) {
  const auto order = solver_detail::identity_order(inst.n());
  return solver_detail::run_steps(inst, cfg, Variant::bcpg, state, order);
}

/**
 * Lyapunov quantity of the 2-block contraction inequality:
 *   7/8 ||x - xr||^2_{H + Sigma + 4/7 R} + 1/2 ||x2 - xr2||^2_{H22 + Sigma2 + beta A2'A2}
 *   + 1/(2 beta) ||mu - mur||^2 + 1/2 ||x2 - x2_prev||^2_{R2}.
 * For BCD variants beta = 0 and the multiplier term is absent.
 */
inline double lyapunov_value(const ProblemInstance& inst, const SolverConfig& cfg, const IterateState& state,
                             const KKTPoint& reference) {
  if (inst.n() != 2) throw UsageError("lyapunov_value: instance must have two blocks");
  const ProblemInstance work = solver_detail::working_instance(inst, cfg);
  const double beta = solver_detail::effective_beta(cfg);
  const auto R = effective_R(work, cfg);
  const Index d1 = work.blocks.dim(0), d2 = work.blocks.dim(1), d = work.d();
  Matrix Rfull = Matrix::Zero(d, d);
  Rfull.topLeftCorner(d1, d1) = R[0];
  Rfull.bottomRightCorner(d2, d2) = R[1];
  const Matrix Sigma = work.sigma_matrix();
  const Vector dx = state.x - reference.x;
  const Vector dx2 = dx.tail(d2);
  const Vector back2 = state.x.tail(d2) - state.x_prev.tail(d2);
  const Matrix W2 = solver_detail::block_curvature(work, 1, beta) + Sigma.bottomRightCorner(d2, d2);
  double v = 7.0 / 8.0 * linalg::wnorm_sq(dx, work.H + Sigma + (4.0 / 7.0) * Rfull) +
             0.5 * linalg::wnorm_sq(dx2, W2) + 0.5 * linalg::wnorm_sq(back2, R[1]);
  if (beta > 0.0 && work.m() > 0) v += (state.mu - reference.mu).squaredNorm() / (2.0 * beta);
  return v;
}

/**
 * Guaranteed per-step decrease of lyapunov_value between consecutive iterates:
 *   1/16 ||dx||^2_{H + Sigma + 8R} + 1/6 ||dx2||^2_{H22 + Sigma2 + 3 beta A2'A2}
 *   + 1/(2 beta) ||dmu||^2.
 */
inline double contraction_decrease_bound(const ProblemInstance& inst, const SolverConfig& cfg,
                                         const IterateState& prev, const IterateState& next) {
  if (inst.n() != 2) throw UsageError("contraction_decrease_bound: instance must have two blocks");
  const ProblemInstance work = solver_detail::working_instance(inst, cfg);
  const double beta = solver_detail::effective_beta(cfg);
  const auto R = effective_R(work, cfg);
  const Index d1 = work.blocks.dim(0), d2 = work.blocks.dim(1), d = work.d();
  Matrix Rfull = Matrix::Zero(d, d);
  Rfull.topLeftCorner(d1, d1) = R[0];
  Rfull.bottomRightCorner(d2, d2) = R[1];
  const Matrix Sigma = work.sigma_matrix();
  const Vector dx = next.x - prev.x;
  const Vector dx2 = dx.tail(d2);
  Matrix W2 = work.H_block(1, 1) + Sigma.bottomRightCorner(d2, d2);
  if (beta > 0.0 && work.m() > 0) {
    const Matrix A2 = work.A_block(1);
    W2 += 3.0 * beta * A2.transpose() * A2;
  }
  double v = linalg::wnorm_sq(dx, work.H + Sigma + 8.0 * Rfull) / 16.0 + linalg::wnorm_sq(dx2, W2) / 6.0;
  if (beta > 0.0 && work.m() > 0) v += (next.mu - prev.mu).squaredNorm() / (2.0 * beta);
  return v;
}

/**
 * Per-block vectors w_i in dtheta_i(x_i) + (Hx+g)_i - A_i'mu at the new
 * iterate, read off the optimality conditions of the sweep:
 *   w_i = -R_i dx_i + sum_{j after i} (H_ij + beta A_i'A_j) dx_j + (gamma - 1) beta A_i'(Ax - b).
 */
inline std::vector<Vector> surrogate_subgradients(const ProblemInstance& work, const std::vector<Matrix>& R,
                                                  double beta, double gamma, const IterateState& prev,
                                                  const IterateState& next, std::span<const Index> order) {
  const Vector dx = next.x - prev.x;
  std::vector<Vector> w(static_cast<std::size_t>(work.n()));
  const Vector feas = work.m() ? Vector(work.A * next.x - work.b) : Vector();
  for (std::size_t p = 0; p < order.size(); ++p) {
    const Index i = order[p];
    const Index oi = work.blocks.offset(i), di = work.blocks.dim(i);
    Vector wi = -R[static_cast<std::size_t>(i)] * dx.segment(oi, di);
    for (std::size_t q = p + 1; q < order.size(); ++q) {
      const Index j = order[q];
      const Index oj = work.blocks.offset(j), dj = work.blocks.dim(j);
      wi += work.H.block(oi, oj, di, dj) * dx.segment(oj, dj);
      if (beta != 0.0 && work.m() > 0)
        wi += beta * work.A_block(i).transpose() * (work.A_block(j) * dx.segment(oj, dj));
    }
    if (beta != 0.0 && work.m() > 0 && gamma != 1.0)
      wi += (gamma - 1.0) * beta * work.A_block(i).transpose() * feas;
    w[static_cast<std::size_t>(i)] = std::move(wi);
  }
  return w;
}

namespace solver_detail {

/// Fills residual fields of a record after a sweep in `order`.
inline void fill_record(TraceRecord& rec, const ProblemInstance& work, const std::vector<Matrix>& R, double beta,
                        double gamma, const IterateState* prev, const IterateState& next,
                        std::span<const Index> order, bool exact) {
  rec.k = next.k;
  const ResidualTriple res = kkt_residual(work, {next.x, next.mu});
  rec.r_feas = res.r_feas;
  rec.r_dual = res.r_dual;
  if (prev) {
    const auto w = surrogate_subgradients(work, R, beta, gamma, *prev, next, order);
    double s = res.r_feas * res.r_feas;
    for (const auto& wi : w) s += wi.squaredNorm();
    rec.surrogate = std::sqrt(s);
    if (!exact)
      for (std::size_t i = 0; i < w.size(); ++i) rec.r_dual[i] = w[i].norm();
  }
  rec.objective = work.objective(next.x);
}

inline bool exceeds_bound(const IterateState& s, double bound) {
  if (!s.x.allFinite() || !s.mu.allFinite()) return true;
  return s.x.norm() > bound || s.mu.norm() > bound;
}

}  // namespace solver_detail

namespace solver_detail {

/**
 * Shared driver: `next_order()` yields the block order of each sweep (the
 * identity for cyclic variants, a fresh permutation for randomized ones).
 */
template <class OrderFn>
Trace drive(const ProblemInstance& inst, const SolverConfig& cfg, const Vector& x0, const Vector& mu0,
            const std::optional<KKTPoint>& reference, OrderFn&& next_order) {
  validate_config(inst, cfg);
  const ProblemInstance work = working_instance(inst, cfg);
  if (x0.size() != work.d()) throw UsageError("run_solver: x0 has wrong length");
  if (cfg.constrained() && mu0.size() != work.m()) throw UsageError("run_solver: mu0 has wrong length");
  if ((cfg.variant == Variant::admm2 || cfg.variant == Variant::admm2_linearized) && work.n() != 2)
    throw UsageError("run_solver: 2-block variant on an instance with " + std::to_string(work.n()) + " blocks");

  Trace trace;
  const auto R = effective_R(work, cfg);
  const double beta = effective_beta(cfg);
  if (cfg.linearized()) {
    const auto r = resolve_r(work, cfg);
    for (Index i = 0; i < work.n(); ++i) {
      const double lmax = linalg::max_eigenvalue(block_curvature(work, i, beta));
      if (r[static_cast<std::size_t>(i)] < lmax * (1.0 - 1e-12))
        trace.warnings.push_back("r_" + std::to_string(i + 1) + " below lambda_max " + std::to_string(lmax) +
                                 "; R_i is indefinite");
    }
  }
  if (work.n() == 2 && (cfg.variant == Variant::admm2 || cfg.variant == Variant::bcd)) {
    const auto cond = check_uniqueness_condition(work, R, UniquenessMode::two_block_full);
    if (!cond.satisfied)
      throw ConditionError("subproblems lack unique solutions (min eigenvalue " +
                           std::to_string(cond.min_eigenvalue) + " of the block-diagonal test matrix)");
  }

  const BlockSweeper sweeper = make_sweeper(work, cfg);
  const double dual_step = cfg.constrained() ? cfg.gamma * cfg.beta : 0.0;
  const bool exact = [&] {
    for (const auto& t : work.theta)
      if (!t.has_exact_subdifferential()) return false;
    return true;
  }();
  trace.exact_residuals = exact;
  const bool track_lyap = reference.has_value() && work.n() == 2;
  KKTPoint ref;
  if (track_lyap) ref = {reference->x, cfg.constrained() ? reference->mu : Vector()};

  IterateState state = IterateState::start(x0, cfg.constrained() ? mu0 : Vector());
  auto record = [&](const IterateState* prev, std::span<const Index> order) {
    TraceRecord rec;
    fill_record(rec, work, R, beta, cfg.gamma, prev, state, order, exact);
    if (!exact && !prev)
      for (auto& rd : rec.r_dual) rd = std::numeric_limits<double>::quiet_NaN();
    if (track_lyap) rec.lyapunov = lyapunov_value(work, cfg, state, ref);
    trace.records.push_back(std::move(rec));
    if (cfg.record_iterates) trace.iterates.push_back(state);
  };

  record(nullptr, {});
  if (exact && trace.records.back().max_residual() <= cfg.tol) {
    trace.status = TraceStatus::converged;
    trace.final_state = state;
    return trace;
  }
  trace.status = TraceStatus::max_iter;
  for (long it = 0; it < cfg.max_iter; ++it) {
    const std::vector<Index> order = next_order();
    const IterateState prev = state;
    sweeper.sweep(state, order, dual_step);
    if (exceeds_bound(state, cfg.divergence_bound)) {
      trace.status = TraceStatus::diverged;
      if (cfg.record_iterates) trace.iterates.push_back(state);
      break;
    }
    record(&prev, order);
    if (trace.records.back().max_residual() <= cfg.tol) {
      trace.status = TraceStatus::converged;
      break;
    }
  }
  trace.final_state = state;
  return trace;
}

}  // namespace solver_detail

/**
 * Iterates the configured variant until the largest residual component is at
 * most tol, max_iter sweeps were taken, or an iterate exceeds the divergence
 * bound. The 2-block proximal variants check the unique-subproblem condition
 * first and throw ConditionError when it fails.
 */
inline Trace run_solver(const ProblemInstance& inst, const SolverConfig& cfg, const Vector& x0, const Vector& mu0,
                        const std::optional<KKTPoint>& reference = std::nullopt) {
  const auto order = solver_detail::identity_order(inst.n());
  return solver_detail::drive(inst, cfg, x0, mu0, reference, [&] { return order; });
}

/**
 * (k, k * min_{1<=i<=k} s_i) where s_i is the summed squared residual triple
 * of record i. Records with k = 0 are skipped.
 */
inline std::vector<std::pair<long, double>> min_kkt_sq_curve(const Trace& trace) {
  std::vector<std::pair<long, double>> out;
  double running = std::numeric_limits<double>::infinity();
  for (const auto& rec : trace.records) {
    if (rec.k < 1) continue;
    running = std::min(running, rec.sum_sq_residual());
    out.emplace_back(rec.k, static_cast<double>(rec.k) * running);
  }
  return out;
}

}  // namespace coupled_splitting
