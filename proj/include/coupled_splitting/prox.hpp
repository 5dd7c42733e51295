#pragma once

#include <coupled_splitting/errors.hpp>
#include <coupled_splitting/linalg.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace coupled_splitting {

enum class ProxKind { zero, l1, box, quadratic, opaque };

inline std::string_view to_string(ProxKind k) {
  switch (k) {
    case ProxKind::zero: return "zero";
    case ProxKind::l1: return "l1";
    case ProxKind::box: return "box";
    case ProxKind::quadratic: return "quadratic";
    case ProxKind::opaque: return "opaque";
  }
  return "?";
}

inline ProxKind prox_kind_from_string(std::string_view s) {
  if (s == "zero") return ProxKind::zero;
  if (s == "l1") return ProxKind::l1;
  if (s == "box") return ProxKind::box;
  if (s == "quadratic") return ProxKind::quadratic;
  if (s == "opaque") return ProxKind::opaque;
  throw StructuralError("theta.kind", "unknown kind '" + std::string(s) + "'");
}

/**
 * A separable term theta_i of one block.
 *
 *   zero       theta(x) = 0
 *   l1         theta(x) = lambda * ||x||_1
 *   box        theta(x) = indicator of {lower <= x <= upper}, bounds may be +-inf
 *   quadratic  theta(x) = 1/2 x'Px + q'x
 *   opaque     prox available, subdifferential unknown
 *
 * `sigma` is the declared strong-monotonicity matrix of the subdifferential
 * (empty means zero). An opaque term either carries a callable prox or wraps
 * a catalog term whose structure is hidden from residual evaluation.
 */
struct ProxFn {
  using ProxCallable = std::function<Vector(double r, const Vector& v)>;
  using ValueCallable = std::function<double(const Vector& x)>;

  ProxKind kind = ProxKind::zero;
  double lambda = 0.0;
  Vector lower, upper;
  Matrix P;
  Vector q;
  Matrix sigma;

  ProxCallable custom_prox;
  ValueCallable custom_value;
  std::shared_ptr<const ProxFn> inner;

  static ProxFn zero() { return {}; }

  static ProxFn l1(double lambda) {
    ProxFn f;
    f.kind = ProxKind::l1;
    f.lambda = lambda;
    return f;
  }

  static ProxFn box(Vector lower, Vector upper) {
    ProxFn f;
    f.kind = ProxKind::box;
    f.lower = std::move(lower);
    f.upper = std::move(upper);
    return f;
  }

  static ProxFn quadratic(Matrix P, Vector q, Matrix sigma = Matrix()) {
    ProxFn f;
    f.kind = ProxKind::quadratic;
    f.P = std::move(P);
    f.q = std::move(q);
    f.sigma = std::move(sigma);
    return f;
  }

  /// Opaque term hiding a catalog term.
  static ProxFn opaque(ProxFn wrapped) {
    ProxFn f;
    f.kind = ProxKind::opaque;
    f.sigma = wrapped.sigma;
    f.inner = std::make_shared<const ProxFn>(std::move(wrapped));
    return f;
  }

  /// Opaque term given by a user callable.
  static ProxFn opaque(ProxCallable prox, ValueCallable value = {}, Matrix sigma = Matrix()) {
    ProxFn f;
    f.kind = ProxKind::opaque;
    f.custom_prox = std::move(prox);
    f.custom_value = std::move(value);
    f.sigma = std::move(sigma);
    return f;
  }

  /// Kinds whose subproblem reduces to a linear solve.
  bool is_linear_kind() const { return kind == ProxKind::zero || kind == ProxKind::quadratic; }
  bool has_exact_subdifferential() const { return kind != ProxKind::opaque; }

  /// Sigma as a dense dim x dim matrix.
  Matrix sigma_matrix(Index dim) const {
    if (sigma.size() == 0) return Matrix::Zero(dim, dim);
    return sigma;
  }

  bool operator==(const ProxFn& o) const {
    auto same = [](const auto& a, const auto& b) {
      return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
    };
    if (kind != o.kind || lambda != o.lambda) return false;
    if (!same(lower, o.lower) || !same(upper, o.upper) || !same(P, o.P) || !same(q, o.q) ||
        !same(sigma, o.sigma))
      return false;
    if (static_cast<bool>(inner) != static_cast<bool>(o.inner)) return false;
    if (inner && !(*inner == *o.inner)) return false;
    return static_cast<bool>(custom_prox) == static_cast<bool>(o.custom_prox);
  }
};

namespace prox_detail {
inline constexpr double kBoundTol = 1e-12;

inline bool at_bound(double x, double bound) {
  return std::isfinite(bound) && std::abs(x - bound) <= kBoundTol * (1.0 + std::abs(bound));
}
}  // namespace prox_detail

/// Checks parameter invariants for a term acting on a block of size `dim`.
inline void validate_prox(const ProxFn& f, Index dim, const std::string& where = "theta") {
  const double tol = 1e-10;
  auto check_sym_psd = [&](const Matrix& m, const std::string& name) {
    if (m.rows() != dim || m.cols() != dim)
      throw StructuralError(where + "." + name, "expected " + std::to_string(dim) + "x" +
                                                    std::to_string(dim) + " matrix");
    const double scale = std::max(1.0, linalg::max_abs(m));
    if (linalg::max_abs(m - m.transpose()) > 1e-12 * scale)
      throw StructuralError(where + "." + name, "not symmetric");
    if (dim > 0 && linalg::min_eigenvalue(m) < -tol * scale)
      throw StructuralError(where + "." + name, "not positive semidefinite");
  };
  if (f.sigma.size() != 0) check_sym_psd(f.sigma, "sigma");
  const bool zero_sigma = f.sigma.size() == 0 || linalg::max_abs(f.sigma) == 0.0;
  switch (f.kind) {
    case ProxKind::zero:
      if (!zero_sigma) throw StructuralError(where + ".sigma", "must be zero for kind zero");
      break;
    case ProxKind::l1:
      if (!(f.lambda >= 0.0) || !std::isfinite(f.lambda))
        throw StructuralError(where + ".lambda", "must be finite and >= 0");
      if (!zero_sigma) throw StructuralError(where + ".sigma", "must be zero for kind l1");
      break;
    case ProxKind::box:
      if (f.lower.size() != dim || f.upper.size() != dim)
        throw StructuralError(where + ".bounds", "expected " + std::to_string(dim) + " bounds");
      for (Index j = 0; j < dim; ++j)
        if (!(f.lower(j) <= f.upper(j)) || f.lower(j) == std::numeric_limits<double>::infinity() ||
            f.upper(j) == -std::numeric_limits<double>::infinity())
          throw StructuralError(where + ".bounds", "need lower <= upper");
      if (!zero_sigma) throw StructuralError(where + ".sigma", "must be zero for kind box");
      break;
    case ProxKind::quadratic:
      check_sym_psd(f.P, "P");
      if (f.q.size() != dim) throw StructuralError(where + ".q", "wrong length");
      if (!zero_sigma && dim > 0 &&
          linalg::min_eigenvalue(f.P - f.sigma) < -tol * std::max(1.0, linalg::max_abs(f.P)))
        throw StructuralError(where + ".sigma", "declared modulus exceeds P");
      break;
    case ProxKind::opaque:
      if (!f.inner && !f.custom_prox)
        throw StructuralError(where, "opaque term without a prox");
      if (f.inner) validate_prox(*f.inner, dim, where + ".inner");
      break;
  }
}

/// Value of theta at x (+inf outside the box, NaN for opaque callables without a value).
inline double prox_value(const ProxFn& f, const Vector& x) {
  switch (f.kind) {
    case ProxKind::zero: return 0.0;
    case ProxKind::l1: return f.lambda * x.lpNorm<1>();
    case ProxKind::box:
      for (Index j = 0; j < x.size(); ++j)
        if (x(j) < f.lower(j) && !prox_detail::at_bound(x(j), f.lower(j))) return INFINITY;
        else if (x(j) > f.upper(j) && !prox_detail::at_bound(x(j), f.upper(j))) return INFINITY;
      return 0.0;
    case ProxKind::quadratic: return 0.5 * x.dot(f.P * x) + f.q.dot(x);
    case ProxKind::opaque:
      if (f.inner) return prox_value(*f.inner, x);
      if (f.custom_value) return f.custom_value(x);
      return std::numeric_limits<double>::quiet_NaN();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// argmin_x f(x) + (r/2)||x - v||^2.
inline Vector prox_eval(const ProxFn& f, double r, const Vector& v) {
  if (!(r > 0.0)) throw UsageError("prox_eval: r must be positive");
  switch (f.kind) {
    case ProxKind::zero: return v;
    case ProxKind::l1: {
      const double t = f.lambda / r;
      return v.unaryExpr([t](double a) {
        return std::copysign(std::max(std::abs(a) - t, 0.0), a);
      });
    }
    case ProxKind::box: return v.cwiseMax(f.lower).cwiseMin(f.upper);
    case ProxKind::quadratic: {
      const Matrix K = f.P + r * Matrix::Identity(v.size(), v.size());
      return K.llt().solve(r * v - f.q);
    }
    case ProxKind::opaque:
      if (f.inner) return prox_eval(*f.inner, r, v);
      return f.custom_prox(r, v);
  }
  return v;
}

/**
 * Euclidean distance from 0 to the set df(x) + s, i.e. from -s to df(x).
 * Throws DomainError when x is outside the box and UnsupportedError for
 * opaque terms.
 */
inline double subdiff_distance(const ProxFn& f, const Vector& x, const Vector& s) {
  using prox_detail::at_bound;
  switch (f.kind) {
    case ProxKind::zero: return s.norm();
    case ProxKind::l1: {
      double acc = 0.0;
      for (Index j = 0; j < x.size(); ++j) {
        const double e = x(j) == 0.0 ? std::max(std::abs(s(j)) - f.lambda, 0.0)
                                     : std::abs(std::copysign(f.lambda, x(j)) + s(j));
        acc += e * e;
      }
      return std::sqrt(acc);
    }
    case ProxKind::box: {
      double acc = 0.0;
      for (Index j = 0; j < x.size(); ++j) {
        const double lo = f.lower(j), hi = f.upper(j);
        const bool on_lo = at_bound(x(j), lo), on_hi = at_bound(x(j), hi);
        if (!on_lo && !on_hi && (x(j) < lo || x(j) > hi))
          throw DomainError("subdiff_distance: x outside box at component " + std::to_string(j));
        double e;
        if (on_lo && on_hi) e = 0.0;                    // normal cone is the whole line
        else if (on_lo) e = std::max(-s(j), 0.0);       // cone (-inf, 0]
        else if (on_hi) e = std::max(s(j), 0.0);        // cone [0, inf)
        else e = std::abs(s(j));
        acc += e * e;
      }
      return std::sqrt(acc);
    }
    case ProxKind::quadratic: return (f.P * x + f.q + s).norm();
    case ProxKind::opaque:
      throw UnsupportedError("subdiff_distance: opaque term has no subdifferential");
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace coupled_splitting
