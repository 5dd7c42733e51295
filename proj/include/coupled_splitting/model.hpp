#pragma once

#include <coupled_splitting/errors.hpp>
#include <coupled_splitting/linalg.hpp>
#include <coupled_splitting/prox.hpp>

#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace coupled_splitting {

/// Partition of x into n blocks plus the number of constraint rows.
class BlockStructure {
 public:
  BlockStructure() = default;

  BlockStructure(std::vector<Index> dims, Index m) : dims_(std::move(dims)), m_(m) {
    if (dims_.empty()) throw StructuralError("blocks", "need at least one block");
    if (m_ < 0) throw StructuralError("m", "negative row count");
    offsets_.reserve(dims_.size());
    Index acc = 0;
    for (Index di : dims_) {
      if (di <= 0) throw StructuralError("blocks", "block sizes must be positive");
      offsets_.push_back(acc);
      acc += di;
    }
    d_ = acc;
  }

  Index n() const { return static_cast<Index>(dims_.size()); }
  Index d() const { return d_; }
  Index m() const { return m_; }
  Index dim(Index i) const { return dims_[static_cast<std::size_t>(i)]; }
  Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
  const std::vector<Index>& dims() const { return dims_; }
  const std::vector<Index>& offsets() const { return offsets_; }

  bool operator==(const BlockStructure&) const = default;

 private:
  std::vector<Index> dims_;
  std::vector<Index> offsets_;
  Index d_ = 0;
  Index m_ = 0;
};

/**
 * min  sum_i theta_i(x_i) + 1/2 x'Hx + g'x   s.t.  sum_i A_i x_i = b.
 *
 * A is stored as one m x d matrix whose column blocks are the A_i.
 */
struct ProblemInstance {
  BlockStructure blocks;
  Matrix H;
  Vector g;
  Matrix A;
  Vector b;
  std::vector<ProxFn> theta;

  Index n() const { return blocks.n(); }
  Index d() const { return blocks.d(); }
  Index m() const { return blocks.m(); }

  auto x_block(const Vector& x, Index i) const { return x.segment(blocks.offset(i), blocks.dim(i)); }
  auto x_block(Vector& x, Index i) const { return x.segment(blocks.offset(i), blocks.dim(i)); }

  Matrix A_block(Index i) const { return A.middleCols(blocks.offset(i), blocks.dim(i)); }
  Matrix H_block(Index i, Index j) const {
    return H.block(blocks.offset(i), blocks.offset(j), blocks.dim(i), blocks.dim(j));
  }
  Vector g_block(Index i) const { return g.segment(blocks.offset(i), blocks.dim(i)); }

  bool all_theta_zero() const {
    for (const auto& t : theta)
      if (t.kind != ProxKind::zero) return false;
    return true;
  }
  bool all_theta_linear() const {
    for (const auto& t : theta)
      if (!t.is_linear_kind()) return false;
    return true;
  }

  /// blockdiag(Sigma_i).
  Matrix sigma_matrix() const {
    Matrix s = Matrix::Zero(d(), d());
    for (Index i = 0; i < n(); ++i)
      s.block(blocks.offset(i), blocks.offset(i), blocks.dim(i), blocks.dim(i)) =
          theta[static_cast<std::size_t>(i)].sigma_matrix(blocks.dim(i));
    return s;
  }

  /// Full objective value sum theta_i + 1/2 x'Hx + g'x.
  double objective(const Vector& x) const {
    double v = 0.5 * x.dot(H * x) + g.dot(x);
    for (Index i = 0; i < n(); ++i) v += prox_value(theta[static_cast<std::size_t>(i)], x_block(x, i));
    return v;
  }

  bool operator==(const ProblemInstance& o) const {
    auto same = [](const auto& a, const auto& b) {
      return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
    };
    return blocks == o.blocks && same(H, o.H) && same(g, o.g) && same(A, o.A) && same(b, o.b) &&
           theta == o.theta;
  }
};

struct KKTPoint {
  Vector x;
  Vector mu;
};

struct ValidationReport {
  double symmetry_defect = 0.0;  // max |H - H'|
  double min_eigenvalue_H = 0.0;
  bool partition_consistent = true;
  bool valid = true;
};

enum class UniquenessMode { two_block_full, nblock_qp };

struct ConditionReport {
  bool satisfied = false;
  double min_eigenvalue = 0.0;
  UniquenessMode matrix_checked = UniquenessMode::two_block_full;
  std::optional<Vector> witness;
};

/// Per-block stationarity distances and the feasibility norm at a point.
struct ResidualTriple {
  std::vector<double> r_dual;
  double r_feas = 0.0;
  /// Some block has no exact subdifferential; its r_dual entry is NaN and
  /// callers must substitute the surrogate residual.
  bool surrogate = false;

  double max_component() const {
    double v = r_feas;
    for (double r : r_dual) v = std::max(v, r);
    return v;
  }
  double sum_sq() const {
    double v = r_feas * r_feas;
    for (double r : r_dual) v += r * r;
    return v;
  }
};

/**
 * Checks shapes, symmetry and positive semidefiniteness of H, and every
 * term's parameters. Throws StructuralError naming the offending field.
 */
inline ValidationReport validate_instance(const ProblemInstance& inst) {
  const Index d = inst.blocks.d(), m = inst.blocks.m();
  if (inst.H.rows() != d || inst.H.cols() != d)
    throw StructuralError("H", "expected " + std::to_string(d) + "x" + std::to_string(d));
  if (inst.g.size() != d) throw StructuralError("g", "expected length " + std::to_string(d));
  if (inst.A.rows() != m || inst.A.cols() != d)
    throw StructuralError("A", "expected " + std::to_string(m) + "x" + std::to_string(d));
  if (inst.b.size() != m) throw StructuralError("b", "expected length " + std::to_string(m));
  if (static_cast<Index>(inst.theta.size()) != inst.blocks.n())
    throw StructuralError("theta", "expected " + std::to_string(inst.blocks.n()) + " terms");
  if (!inst.H.allFinite() || !inst.g.allFinite() || !inst.A.allFinite() || !inst.b.allFinite())
    throw StructuralError("data", "non-finite entry");

  ValidationReport rep;
  rep.symmetry_defect = linalg::max_abs(inst.H - inst.H.transpose());
  if (rep.symmetry_defect > 1e-12 * linalg::max_abs(inst.H))
    throw StructuralError("H", "H not symmetric");
  const Matrix Hs = 0.5 * (inst.H + inst.H.transpose());
  rep.min_eigenvalue_H = linalg::min_eigenvalue(Hs);
  if (rep.min_eigenvalue_H < -1e-10 * linalg::norm2(Hs))
    throw StructuralError("H", "H not positive semidefinite");
  for (Index i = 0; i < inst.blocks.n(); ++i)
    validate_prox(inst.theta[static_cast<std::size_t>(i)], inst.blocks.dim(i),
                  "theta[" + std::to_string(i) + "]");
  return rep;
}

/**
 * Smallest eigenvalue of the block-diagonal matrix that decides whether every
 * block subproblem has a unique minimizer.
 *
 * two_block_full: blockdiag(H_ii + Sigma_i + A_i'A_i + R_i), n = 2.
 * nblock_qp:      blockdiag(H_ii + A_i'A_i), all theta_i zero.
 *
 * `R` may be empty (all zero). When the matrix is not positive definite the
 * report carries a unit null direction.
 */
inline ConditionReport check_uniqueness_condition(const ProblemInstance& inst, const std::vector<Matrix>& R,
                                                  UniquenessMode mode, double tol = 1e-10) {
  const Index n = inst.n();
  if (mode == UniquenessMode::two_block_full && n != 2)
    throw UsageError("check_uniqueness_condition: two_block_full needs exactly two blocks");
  if (mode == UniquenessMode::nblock_qp && !inst.all_theta_zero())
    throw UsageError("check_uniqueness_condition: nblock_qp needs all theta_i zero");
  if (!R.empty() && static_cast<Index>(R.size()) != n)
    throw UsageError("check_uniqueness_condition: need one R_i per block");

  Matrix T = Matrix::Zero(inst.d(), inst.d());
  for (Index i = 0; i < n; ++i) {
    const Index o = inst.blocks.offset(i), di = inst.blocks.dim(i);
    const Matrix Ai = inst.A_block(i);
    Matrix blk = inst.H_block(i, i) + Ai.transpose() * Ai;
    if (mode == UniquenessMode::two_block_full) {
      blk += inst.theta[static_cast<std::size_t>(i)].sigma_matrix(di);
      if (!R.empty()) blk += R[static_cast<std::size_t>(i)];
    }
    T.block(o, o, di, di) = blk;
  }
  ConditionReport rep;
  rep.matrix_checked = mode;
  rep.min_eigenvalue = linalg::min_eigenvalue(T);
  rep.satisfied = rep.min_eigenvalue > tol;
  if (!rep.satisfied) rep.witness = linalg::min_eigenvector(T);
  return rep;
}

namespace model_detail {
/// [H + blockdiag(P_i), -A'; A, 0] and [-(g + q); b].
inline std::pair<Matrix, Vector> linear_kkt_system(const ProblemInstance& inst) {
  const Index d = inst.d(), m = inst.m();
  Matrix Hq = inst.H;
  Vector gq = inst.g;
  for (Index i = 0; i < inst.n(); ++i) {
    const auto& t = inst.theta[static_cast<std::size_t>(i)];
    if (t.kind == ProxKind::quadratic) {
      const Index o = inst.blocks.offset(i), di = inst.blocks.dim(i);
      Hq.block(o, o, di, di) += t.P;
      gq.segment(o, di) += t.q;
    }
  }
  Matrix K = Matrix::Zero(d + m, d + m);
  K.topLeftCorner(d, d) = Hq;
  K.topRightCorner(d, m) = -inst.A.transpose();
  K.bottomLeftCorner(m, d) = inst.A;
  Vector rhs(d + m);
  rhs.head(d) = -gq;
  rhs.tail(m) = inst.b;
  return {K, rhs};
}
}  // namespace model_detail

/**
 * Minimum-norm KKT point of an instance whose terms are all zero or
 * quadratic. Throws UnsupportedError for other kinds and InfeasibleError when
 * the linear KKT system is inconsistent.
 */
inline KKTPoint solve_kkt_oracle(const ProblemInstance& inst) {
  if (!inst.all_theta_linear())
    throw UnsupportedError("solve_kkt_oracle: nonsmooth terms present, use a solver instead");
  const auto [K, rhs] = model_detail::linear_kkt_system(inst);
  const Vector z = linalg::min_norm_solve(K, rhs);
  const double res = (K * z - rhs).norm();
  const double scale = 1.0 + inst.g.norm() + inst.b.norm();
  if (!(res <= 1e-10 * scale * std::max(1.0, linalg::norm2(K))))
    throw InfeasibleError("solve_kkt_oracle: KKT system inconsistent (residual " +
                          std::to_string(res) + ")");
  return {z.head(inst.d()), z.tail(inst.m())};
}

/**
 * Exact KKT residuals: r_dual_i = dist(0, dtheta_i(x_i) + (Hx+g)_i - A_i'mu)
 * and r_feas = ||Ax - b||. Opaque blocks get NaN and set `surrogate`; a
 * block outside the domain of its term has an empty subdifferential and
 * gets +inf.
 */
inline ResidualTriple kkt_residual(const ProblemInstance& inst, const KKTPoint& pt) {
  ResidualTriple out;
  const Vector grad = inst.H * pt.x + inst.g - inst.A.transpose() * pt.mu;
  out.r_dual.resize(static_cast<std::size_t>(inst.n()));
  for (Index i = 0; i < inst.n(); ++i) {
    const auto& t = inst.theta[static_cast<std::size_t>(i)];
    if (!t.has_exact_subdifferential()) {
      out.r_dual[static_cast<std::size_t>(i)] = std::numeric_limits<double>::quiet_NaN();
      out.surrogate = true;
      continue;
    }
    try {
      out.r_dual[static_cast<std::size_t>(i)] =
          subdiff_distance(t, inst.x_block(pt.x, i), grad.segment(inst.blocks.offset(i), inst.blocks.dim(i)));
    } catch (const DomainError&) {
      out.r_dual[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
    }
  }
  out.r_feas = inst.m() ? (inst.A * pt.x - inst.b).norm() : 0.0;
  return out;
}

}  // namespace coupled_splitting
